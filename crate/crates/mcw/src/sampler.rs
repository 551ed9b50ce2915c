//! Glauber (heat-bath) sampling of the magnetization law for sizes beyond
//! the exact enumeration budget.
//!
//! Dynamics: a sweep makes N single-spin proposals at uniformly random
//! sites; flipping spin i of species p moves m_p by d = −2σ_i/N_p and is
//! accepted with the heat-bath probability 1/(1 + e^{ΔH}), where the energy
//! difference follows in O(K) from the cached species magnetizations:
//!
//! ```text
//! ΔH = −N·d·[(Δ_N m)_p + h̃_{N,p} + ½·Δ_N,pp·d].
//! ```
//!
//! The chain caches integer up-spin counts per species, so the cache is
//! exact (no drift) and `m` is always derived from integers. Runs are
//! reproducible from the seed. In multi-phase regimes no attempt is made to
//! mix across phases: start chains inside the target basin via
//! [`ChainInit::AtPoint`] and pass a retention box that discards samples
//! wandering out, mirroring how conditional laws are formed elsewhere.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{McwError, Result};
use crate::exact::MagnetBox;
use crate::model::{delta_with, finite_sizes, FiniteSizes, ModelSpec};

/// Split-R̂ above which pooling chains is refused.
pub const RHAT_THRESHOLD: f64 = 1.05;
/// Per-chain seed stride (golden-ratio multiplier keeps streams far apart).
pub const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Initial spin assignment of a chain.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainInit {
    AllUp,
    AllDown,
    /// Uniform random spins from the chain's own stream.
    Random,
    /// Closest integer spin assignment to a target magnetization vector.
    AtPoint(DVector<f64>),
}

/// One chain's run parameters.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub n: usize,
    pub seed: u64,
    /// Discarded sweeps before any sample is kept (≥ 1).
    pub burn_in_sweeps: usize,
    /// Post-burn-in sweeps; a sample is recorded every `thinning`-th sweep.
    pub sample_sweeps: usize,
    /// Record stride in sweeps (≥ 1).
    pub thinning: usize,
    pub init: ChainInit,
}

impl ChainConfig {
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if !spec.prior().is_ising() {
            return Err(McwError::Validation(
                "Glauber dynamics is defined for the two-valued prior".into(),
            ));
        }
        if self.burn_in_sweeps < 1 || self.thinning < 1 || self.sample_sweeps < 1 {
            return Err(McwError::Validation(
                "burn_in_sweeps, sample_sweeps and thinning must all be ≥ 1".into(),
            ));
        }
        if let ChainInit::AtPoint(x) = &self.init {
            if x.len() != spec.k() {
                return Err(McwError::Validation(format!(
                    "init point has {} components for {} species",
                    x.len(),
                    spec.k()
                )));
            }
            if x.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                return Err(McwError::Validation("init point outside [-1, 1]^K".into()));
            }
        }
        Ok(())
    }
}

/// Retained magnetization samples of one or more chains.
#[derive(Debug, Clone)]
pub struct SampleSet {
    k: usize,
    rows: Vec<DVector<f64>>,
}

impl SampleSet {
    fn new(k: usize) -> Self {
        SampleSet { k, rows: Vec::new() }
    }

    pub fn k(&self) -> usize {
        self.k
    }
    pub fn len(&self) -> usize {
        self.rows.len()
    }
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
    pub fn rows(&self) -> &[DVector<f64>] {
        &self.rows
    }

    /// One component's series, in recording order.
    pub fn component(&self, l: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[l]).collect()
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.k);
        for r in &self.rows {
            m += r;
        }
        m / self.rows.len() as f64
    }

    /// Sample covariance (n − 1 normalization).
    pub fn cov(&self) -> DMatrix<f64> {
        let mean = self.mean();
        let mut c = DMatrix::zeros(self.k, self.k);
        for r in &self.rows {
            let d = r - &mean;
            c += &d * d.transpose();
        }
        c / (self.rows.len() as f64 - 1.0)
    }
}

/// Standard error of the series mean by non-overlapping batch means — the
/// batching absorbs autocorrelation the naive σ/√n estimate would ignore.
pub fn batch_means_se(series: &[f64], batches: usize) -> f64 {
    let b = batches.max(2).min(series.len());
    let per = series.len() / b;
    assert!(per >= 1, "series too short for {batches} batches");
    let means: Vec<f64> = (0..b)
        .map(|i| series[i * per..(i + 1) * per].iter().sum::<f64>() / per as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (b as f64 - 1.0);
    (var / b as f64).sqrt()
}

/// Single-spin-flip heat-bath chain over the block Hamiltonian.
pub struct GlauberChain {
    k: usize,
    sizes: Vec<usize>,
    /// Species of each site (sites grouped contiguously by species).
    species: Vec<usize>,
    spins: Vec<i8>,
    /// Exact per-species up-spin counts — the magnetization cache.
    up: Vec<i64>,
    delta_n: DMatrix<f64>,
    h_n: DVector<f64>,
    rng: ChaCha8Rng,
}

impl GlauberChain {
    pub fn new(spec: &ModelSpec, sizes: &FiniteSizes, init: &ChainInit, seed: u64) -> Result<Self> {
        if !spec.prior().is_ising() {
            return Err(McwError::Validation(
                "Glauber dynamics is defined for the two-valued prior".into(),
            ));
        }
        let k = spec.k();
        let mut species = Vec::with_capacity(sizes.n);
        for (l, &nl) in sizes.sizes.iter().enumerate() {
            species.extend(std::iter::repeat_n(l, nl));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spins: Vec<i8> = match init {
            ChainInit::AllUp => vec![1; sizes.n],
            ChainInit::AllDown => vec![-1; sizes.n],
            ChainInit::Random => {
                (0..sizes.n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()
            }
            ChainInit::AtPoint(x) => {
                if x.len() != k {
                    return Err(McwError::Validation(format!(
                        "init point has {} components for {k} species",
                        x.len()
                    )));
                }
                let mut s = Vec::with_capacity(sizes.n);
                for (l, &nl) in sizes.sizes.iter().enumerate() {
                    let up = (0.5 * nl as f64 * (1.0 + x[l])).round().clamp(0.0, nl as f64)
                        as usize;
                    s.extend(std::iter::repeat_n(1i8, up));
                    s.extend(std::iter::repeat_n(-1i8, nl - up));
                }
                s
            }
        };
        let mut up = vec![0i64; k];
        for (i, &s) in spins.iter().enumerate() {
            if s == 1 {
                up[species[i]] += 1;
            }
        }
        Ok(GlauberChain {
            k,
            sizes: sizes.sizes.clone(),
            species,
            spins,
            up,
            delta_n: delta_with(spec.j(), &sizes.alpha_n),
            h_n: sizes.alpha_n.component_mul(spec.h()),
            rng,
        })
    }

    pub fn n(&self) -> usize {
        self.spins.len()
    }

    /// Current magnetization vector, derived from the integer cache.
    pub fn magnetization(&self) -> DVector<f64> {
        DVector::from_fn(self.k, |l, _| {
            (2 * self.up[l] - self.sizes[l] as i64) as f64 / self.sizes[l] as f64
        })
    }

    /// Recomputes the up-counts from the spin array (cache audit).
    pub fn recount_from_spins(&self) -> Vec<i64> {
        let mut up = vec![0i64; self.k];
        for (i, &s) in self.spins.iter().enumerate() {
            if s == 1 {
                up[self.species[i]] += 1;
            }
        }
        up
    }

    pub fn up_counts(&self) -> &[i64] {
        &self.up
    }
    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// One sweep: N uniformly random single-spin heat-bath proposals.
    pub fn sweep(&mut self) {
        let n = self.spins.len();
        let nf = n as f64;
        let mut m = self.magnetization();
        for _ in 0..n {
            let i = self.rng.gen_range(0..n);
            let p = self.species[i];
            let d = -2.0 * self.spins[i] as f64 / self.sizes[p] as f64;
            let mut field = self.h_n[p];
            for q in 0..self.k {
                field += self.delta_n[(p, q)] * m[q];
            }
            let delta_h = -nf * d * (field + 0.5 * self.delta_n[(p, p)] * d);
            let accept = 1.0 / (1.0 + delta_h.exp());
            if self.rng.gen::<f64>() < accept {
                self.up[p] += -i64::from(self.spins[i]);
                self.spins[i] = -self.spins[i];
                m[p] = (2 * self.up[p] - self.sizes[p] as i64) as f64 / self.sizes[p] as f64;
            }
        }
    }
}

/// Runs one chain and returns the retained magnetization samples.
///
/// With a retention box, samples outside it are discarded (the chain itself
/// keeps running) — the tool for per-basin statistics in multi-phase
/// regimes.
pub fn glauber_run(
    spec: &ModelSpec,
    cfg: &ChainConfig,
    retain: Option<&[MagnetBox]>,
) -> Result<SampleSet> {
    cfg.validate(spec)?;
    let sizes = finite_sizes(spec, cfg.n)?;
    if let Some(boxes) = retain {
        if boxes.len() != spec.k() {
            return Err(McwError::Validation(format!(
                "{} retention boxes for {} species",
                boxes.len(),
                spec.k()
            )));
        }
        for b in boxes {
            b.validate()?;
        }
    }
    let mut chain = GlauberChain::new(spec, &sizes, &cfg.init, cfg.seed)?;
    for _ in 0..cfg.burn_in_sweeps {
        chain.sweep();
    }
    let mut out = SampleSet::new(spec.k());
    for sweep in 1..=cfg.sample_sweeps {
        chain.sweep();
        if sweep % cfg.thinning != 0 {
            continue;
        }
        let m = chain.magnetization();
        let keep = retain
            .map(|boxes| (0..spec.k()).all(|l| boxes[l].contains(m[l])))
            .unwrap_or(true);
        if keep {
            out.rows.push(m);
        }
    }
    Ok(out)
}

/// Pooled samples plus the per-component split-R̂ diagnostic (None for a
/// single chain, where it is undefined).
#[derive(Debug, Clone)]
pub struct MultiChainResult {
    pub pooled: SampleSet,
    pub rhats: Option<Vec<f64>>,
}

/// Runs `chains` independent chains (seeds strided from the base seed) in
/// parallel and pools them — unless any component's split-R̂ exceeds
/// [`RHAT_THRESHOLD`], which is a mixing failure: in a multi-maximizer
/// regime pool per basin via retention boxes instead.
pub fn multichain(
    spec: &ModelSpec,
    cfg: &ChainConfig,
    chains: usize,
    retain: Option<&[MagnetBox]>,
) -> Result<MultiChainResult> {
    let inits = vec![cfg.init.clone(); chains];
    multichain_with_inits(spec, cfg, &inits, retain)
}

/// [`multichain`] with one explicit init per chain (e.g. opposite phases).
pub fn multichain_with_inits(
    spec: &ModelSpec,
    cfg: &ChainConfig,
    inits: &[ChainInit],
    retain: Option<&[MagnetBox]>,
) -> Result<MultiChainResult> {
    if inits.is_empty() {
        return Err(McwError::Validation("at least one chain is required".into()));
    }
    let runs: Vec<Result<SampleSet>> = inits
        .par_iter()
        .enumerate()
        .map(|(i, init)| {
            let mut c = cfg.clone();
            c.seed = cfg.seed.wrapping_add((i as u64).wrapping_mul(SEED_STRIDE));
            c.init = init.clone();
            glauber_run(spec, &c, retain)
        })
        .collect();
    let mut sets = Vec::with_capacity(runs.len());
    for r in runs {
        sets.push(r?);
    }
    let k = spec.k();
    let rhats = if sets.len() >= 2 {
        let per_component: Vec<f64> = (0..k)
            .map(|l| {
                let series: Vec<Vec<f64>> = sets.iter().map(|s| s.component(l)).collect();
                split_rhat(&series).unwrap_or(f64::INFINITY)
            })
            .collect();
        Some(per_component)
    } else {
        None
    };
    if let Some(rs) = &rhats {
        let max_rhat = rs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max_rhat > RHAT_THRESHOLD {
            return Err(McwError::Mixing {
                max_rhat,
                threshold: RHAT_THRESHOLD,
                rhats: rs.clone(),
            });
        }
    }
    let mut pooled = SampleSet::new(k);
    for s in sets {
        pooled.rows.extend(s.rows);
    }
    if pooled.is_empty() {
        return Err(McwError::Numerical(
            "no samples retained; widen the retention box or lengthen the run".into(),
        ));
    }
    Ok(MultiChainResult { pooled, rhats })
}

/// Split-half potential scale reduction of one component across chains.
/// None when any half-series is shorter than 2 samples.
fn split_rhat(chains: &[Vec<f64>]) -> Option<f64> {
    let half = chains.iter().map(|c| c.len() / 2).min()?;
    if chains.len() < 2 || half < 2 {
        return None;
    }
    let mut seqs: Vec<&[f64]> = Vec::with_capacity(2 * chains.len());
    for c in chains {
        seqs.push(&c[..half]);
        seqs.push(&c[c.len() - half..]);
    }
    let m = seqs.len() as f64;
    let n = half as f64;
    let means: Vec<f64> = seqs.iter().map(|s| s.iter().sum::<f64>() / n).collect();
    let grand = means.iter().sum::<f64>() / m;
    let between = n / (m - 1.0) * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>();
    let within = seqs
        .iter()
        .zip(&means)
        .map(|(s, mu)| s.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if within <= 0.0 {
        return Some(if between <= 0.0 { 1.0 } else { f64::INFINITY });
    }
    Some((((n - 1.0) / n * within + between / n) / within).sqrt())
}
