//! Exact finite-N distributions by enumeration over magnetization sectors.
//!
//! For the two-valued prior the configuration space splits into sectors of
//! constant per-species magnetization: species l with N_l sites contributes
//! the N_l + 1 values x_l ∈ {−1 + 2n/N_l}, and the sector at x holds exactly
//! Π_l C(N_l, N_l(1+x_l)/2) configurations. Summing the sector weights
//! A(x)·e^{−H(x)} therefore reproduces the full 2^N partition sum with
//! Π(N_l+1) terms instead of 2^N — exact at every size the cell budget
//! admits.
//!
//! The module builds the (optionally tilted) sector law, its exact moments
//! and moment generating function, conditional restrictions to magnetization
//! boxes, the exact pressure, a second-order Laplace estimate of log Z for
//! comparison against the enumeration, and the probability mass escaping a
//! shrinking box around the dominant magnetization.
//!
//! Weights use the counting convention: every configuration carries weight 1,
//! so two free spins give Z = 4. The fair-coin convention differs by a global
//! 2^{−N}, i.e. subtract log 2 from the pressure.

use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{McwError, Result};
use crate::landscape::{
    binary_entropy, find_all_stationary, global_maximizers, FreeEnergy, StationaryPoint,
    DEFAULT_GRID_DENSITY, TIE_TOL,
};
use crate::model::{delta_with, finite_sizes, perturbed_sizes, FiniteSizes, ModelSpec};
use crate::numerics::kahan_add;

/// Cell budget above which exact enumeration refuses to run.
pub const DEFAULT_CELL_BUDGET: u128 = 20_000_000;
/// Tolerance for N_l(1+x)/2 to be accepted as an integer site occupancy.
pub const OCCUPANCY_TOL: f64 = 1e-6;
/// Chunk size for the parallel weight fill.
const FILL_CHUNK: usize = 8192;

/// log C(N_l, N_l(1+x)/2) through log-gamma.
///
/// Rejects x whose implied up-spin count is not an integer in [0, N_l]
/// within [`OCCUPANCY_TOL`] — such x is not a sector of an N_l-site species.
pub fn log_binomial_count(n_l: usize, x: f64) -> Result<f64> {
    let occ = 0.5 * n_l as f64 * (1.0 + x);
    let rounded = occ.round();
    if (occ - rounded).abs() > OCCUPANCY_TOL || rounded < 0.0 || rounded > n_l as f64 {
        return Err(McwError::Domain(format!(
            "magnetization {x} implies {occ} up spins out of {n_l}; not a sector value"
        )));
    }
    Ok(log_binomial(n_l, rounded as usize))
}

fn log_binomial(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Smallest constant C with A_N(x) ≥ e^{−N·I(x)}/(C·√N) for every N ≤ 10³
/// and every sector value x, giving the two-sided count bound
/// −N·I(x) − log(C√N) ≤ log A_N(x) ≤ −N·I(x).
///
/// Calibrated once and cached. The binding case is the central sector of the
/// smallest even size: A_2(0) = 2 against e^{2 log 2}/√2, forcing
/// C = 4/(2√2) = √2. Central sectors at larger N relax monotonically toward
/// the asymptotic √(π/2) ≈ 1.2533.
pub fn stirling_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        (1..=1000usize)
            .into_par_iter()
            .map(|n| {
                let mut worst = f64::NEG_INFINITY;
                for occ in 0..=n {
                    let x = (2.0 * occ as f64 - n as f64) / n as f64;
                    let i = binary_entropy(x).expect("sector value is in [-1, 1]");
                    let need = -(n as f64) * i - 0.5 * (n as f64).ln() - log_binomial(n, occ);
                    worst = worst.max(need);
                }
                worst
            })
            .reduce(|| f64::NEG_INFINITY, f64::max)
            .exp()
    })
}

// ---------------------------------------------------------------------------
// Sector grid
// ---------------------------------------------------------------------------

/// Product grid of the magnetization vectors attainable at integer sizes.
#[derive(Debug, Clone)]
pub struct SectorGrid {
    sizes: FiniteSizes,
    /// Per-species admissible values (2n − N_l)/N_l, strictly increasing
    /// from exactly −1 to exactly +1.
    values: Vec<Vec<f64>>,
}

impl SectorGrid {
    pub fn new(sizes: FiniteSizes) -> Self {
        let values = sizes
            .sizes
            .iter()
            .map(|&nl| (0..=nl).map(|n| (2.0 * n as f64 - nl as f64) / nl as f64).collect())
            .collect();
        SectorGrid { sizes, values }
    }

    pub fn sizes(&self) -> &FiniteSizes {
        &self.sizes
    }
    pub fn k(&self) -> usize {
        self.values.len()
    }
    /// Admissible magnetizations of species l (N_l + 1 of them).
    pub fn values(&self, l: usize) -> &[f64] {
        &self.values[l]
    }
    /// Π(N_l + 1) without overflow.
    pub fn cell_count(&self) -> u128 {
        self.values.iter().map(|v| v.len() as u128).product()
    }

    /// Occupancy indices of a flat cell id (last species varies fastest).
    pub fn decode(&self, flat: usize) -> Vec<usize> {
        let k = self.k();
        let mut idx = vec![0usize; k];
        let mut rem = flat;
        for l in (0..k).rev() {
            let len = self.values[l].len();
            idx[l] = rem % len;
            rem /= len;
        }
        idx
    }

    /// Magnetization vector of an occupancy multi-index.
    pub fn point(&self, idx: &[usize]) -> DVector<f64> {
        DVector::from_fn(self.k(), |l, _| self.values[l][idx[l]])
    }

    /// Advance a multi-index by one cell; false on wrap-around.
    fn advance(&self, idx: &mut [usize]) -> bool {
        for l in (0..self.k()).rev() {
            idx[l] += 1;
            if idx[l] < self.values[l].len() {
                return true;
            }
            idx[l] = 0;
        }
        false
    }
}

// ---------------------------------------------------------------------------
// Sector law
// ---------------------------------------------------------------------------

/// How integer populations realize the size perturbation at finite N.
///
/// Weights always use the realized fractions N_l/N of whichever
/// populations are built; the modes differ in the populations themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    /// Largest-remainder partition of exactly N sites. The perturbation
    /// survives only as far as an exact partition can express it — at
    /// K = 1 (or whenever Σβ_l ≠ 0) it is rounded away entirely.
    #[default]
    Realized,
    /// Per-species rounding N_l = round(N·(α_l + N^(−θ)β_l)) against the
    /// fixed normalizer N, so ΣN_l may differ from N. This realizes the
    /// perturbation in both the interaction and the entropy — the
    /// construction the noncentered fluctuation law describes.
    TargetRatios,
}

/// Exact (optionally tilted) distribution of the species magnetization,
/// stored as per-cell log weights plus the log partition sum.
#[derive(Debug, Clone)]
pub struct SectorLaw {
    grid: SectorGrid,
    /// log[A(x)·e^{−H_t(x)}] per cell, flat in grid order.
    log_weights: Vec<f64>,
    log_z: f64,
    t: DVector<f64>,
    /// Fraction vector that weighted the energy/tilt terms.
    alpha_w: DVector<f64>,
    mode: WeightMode,
}

/// Builds the sector law at size N with tilt t (realized-fraction weights,
/// default budget).
pub fn sector_law(spec: &ModelSpec, n: usize, t: &DVector<f64>) -> Result<SectorLaw> {
    sector_law_with(spec, n, t, WeightMode::Realized, DEFAULT_CELL_BUDGET)
}

/// [`sector_law`] with an explicit weight mode and cell budget.
pub fn sector_law_with(
    spec: &ModelSpec,
    n: usize,
    t: &DVector<f64>,
    mode: WeightMode,
    budget: u128,
) -> Result<SectorLaw> {
    if !spec.prior().is_ising() {
        return Err(McwError::Validation(
            "sector enumeration requires the two-valued prior; use the variational pressure for general priors"
                .into(),
        ));
    }
    if t.len() != spec.k() {
        return Err(McwError::Validation(format!(
            "tilt has {} components for {} species",
            t.len(),
            spec.k()
        )));
    }
    let sizes = match mode {
        WeightMode::Realized => finite_sizes(spec, n)?,
        WeightMode::TargetRatios => perturbed_sizes(spec, n)?,
    };
    let grid = SectorGrid::new(sizes);
    let cells = grid.cell_count();
    if cells > budget {
        return Err(McwError::Budget { cells, budget });
    }
    let alpha_w = grid.sizes().alpha_n.clone();
    // Each cell's weight is a pure function of its index, so the fill
    // parallelizes without changing any value; every reduction below walks
    // the stored array serially. The law is therefore bitwise reproducible
    // at any thread count.
    let log_weights = fill_log_weights(spec, &grid, t, &alpha_w);
    let log_z = log_sum_exp(&log_weights);
    if !log_z.is_finite() {
        return Err(McwError::Numerical("partition sum is not finite".into()));
    }
    Ok(SectorLaw { grid, log_weights, log_z, t: t.clone(), alpha_w, mode })
}

fn fill_log_weights(
    spec: &ModelSpec,
    grid: &SectorGrid,
    t: &DVector<f64>,
    alpha_w: &DVector<f64>,
) -> Vec<f64> {
    let k = grid.k();
    let n = grid.sizes().n as f64;
    let delta_w = delta_with(spec.j(), alpha_w);
    // Per cell: Σ_l log A_{N_l}(x_l) + N·[½(x,Δx) + (α∘h, x)] + √N·(t, √α∘x).
    // Field and tilt fold into one linear coefficient per species.
    let lin: Vec<f64> = (0..k)
        .map(|l| n * alpha_w[l] * spec.h()[l] + n.sqrt() * t[l] * alpha_w[l].sqrt())
        .collect();
    let log_a: Vec<Vec<f64>> = grid
        .sizes
        .sizes
        .iter()
        .map(|&nl| (0..=nl).map(|occ| log_binomial(nl, occ)).collect())
        .collect();
    let total = grid.cell_count() as usize;
    let mut ws = vec![0.0f64; total];
    ws.par_chunks_mut(FILL_CHUNK).enumerate().for_each(|(ci, chunk)| {
        let mut idx = grid.decode(ci * FILL_CHUNK);
        let mut x = vec![0.0f64; k];
        for w in chunk.iter_mut() {
            for l in 0..k {
                x[l] = grid.values[l][idx[l]];
            }
            let mut acc = 0.0;
            for l in 0..k {
                let mut row = 0.0;
                for m in 0..k {
                    row += delta_w[(l, m)] * x[m];
                }
                acc += log_a[l][idx[l]] + lin[l] * x[l] + 0.5 * n * row * x[l];
            }
            *w = acc;
            grid.advance(&mut idx);
        }
    });
    ws
}

/// Two-pass log-sum-exp over stored weights; −∞ entries (masked cells)
/// contribute nothing. Serial on purpose — reproducibility.
fn log_sum_exp(ws: &[f64]) -> f64 {
    let max = ws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let (mut s, mut c) = (0.0, 0.0);
    for &w in ws {
        if w == f64::NEG_INFINITY {
            continue;
        }
        kahan_add(&mut s, &mut c, (w - max).exp());
    }
    max + s.ln()
}

/// First two exact moments of a sector law.
#[derive(Debug, Clone)]
pub struct Moments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl SectorLaw {
    pub fn grid(&self) -> &SectorGrid {
        &self.grid
    }
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }
    pub fn log_z(&self) -> f64 {
        self.log_z
    }
    pub fn t(&self) -> &DVector<f64> {
        &self.t
    }
    pub fn alpha_w(&self) -> &DVector<f64> {
        &self.alpha_w
    }
    pub fn mode(&self) -> WeightMode {
        self.mode
    }
    pub fn n(&self) -> usize {
        self.grid.sizes().n
    }
    pub fn k(&self) -> usize {
        self.grid.k()
    }

    /// Probability of the flat-indexed cell.
    pub fn probability(&self, flat: usize) -> f64 {
        let w = self.log_weights[flat];
        if w == f64::NEG_INFINITY {
            0.0
        } else {
            (w - self.log_z).exp()
        }
    }

    /// Serial walk over all cells: callback(flat, occupancy indices, log w).
    fn for_each_cell(&self, mut f: impl FnMut(usize, &[usize], f64)) {
        let mut idx = vec![0usize; self.k()];
        for (flat, &w) in self.log_weights.iter().enumerate() {
            if flat > 0 {
                self.grid.advance(&mut idx);
            }
            f(flat, &idx, w);
        }
    }

    /// Exact mean and covariance of the magnetization vector: one pass of
    /// compensated raw-moment accumulation.
    pub fn moments(&self) -> Moments {
        let k = self.k();
        let mut mean = vec![(0.0f64, 0.0f64); k];
        let mut raw = vec![(0.0f64, 0.0f64); k * k];
        self.for_each_cell(|_, idx, w| {
            if w == f64::NEG_INFINITY {
                return;
            }
            let p = (w - self.log_z).exp();
            for l in 0..k {
                let xl = self.grid.values[l][idx[l]];
                let (sum, comp) = &mut mean[l];
                kahan_add(sum, comp, p * xl);
                for m in l..k {
                    let xm = self.grid.values[m][idx[m]];
                    let (sum, comp) = &mut raw[l * k + m];
                    kahan_add(sum, comp, p * xl * xm);
                }
            }
        });
        let mean = DVector::from_fn(k, |l, _| mean[l].0);
        let mut cov = DMatrix::zeros(k, k);
        for l in 0..k {
            for m in l..k {
                let c = raw[l * k + m].0 - mean[l] * mean[m];
                cov[(l, m)] = c;
                cov[(m, l)] = c;
            }
        }
        Moments { mean, cov }
    }

    /// Moments of the fluctuation variable √N·√α_w∘(m − center).
    pub fn rescaled_moments(&self, center: &DVector<f64>) -> Moments {
        let raw = self.moments();
        let n = self.n() as f64;
        let d = DVector::from_fn(self.k(), |l, _| (n * self.alpha_w[l]).sqrt());
        let mean = DVector::from_fn(self.k(), |l, _| d[l] * (raw.mean[l] - center[l]));
        let cov = DMatrix::from_fn(self.k(), self.k(), |l, m| d[l] * d[m] * raw.cov[(l, m)]);
        Moments { mean, cov }
    }

    /// log E[exp(√N·(probe, √α_w∘(m − center)))], computed by reweighting
    /// the stored law — no re-enumeration. At probe = 0 this is exactly 0.
    pub fn log_mgf(&self, probe: &DVector<f64>, center: &DVector<f64>) -> Result<f64> {
        let k = self.k();
        if probe.len() != k || center.len() != k {
            return Err(McwError::Validation(format!(
                "probe/center have {}/{} components for {} species",
                probe.len(),
                center.len(),
                k
            )));
        }
        let n = self.n() as f64;
        let coef: Vec<f64> = (0..k).map(|l| n.sqrt() * probe[l] * self.alpha_w[l].sqrt()).collect();
        let shift = |idx: &[usize]| -> f64 {
            (0..k).map(|l| coef[l] * self.grid.values[l][idx[l]]).sum()
        };
        let mut max = f64::NEG_INFINITY;
        self.for_each_cell(|_, idx, w| {
            if w != f64::NEG_INFINITY {
                max = max.max(w + shift(idx));
            }
        });
        let (mut s, mut c) = (0.0, 0.0);
        self.for_each_cell(|_, idx, w| {
            if w != f64::NEG_INFINITY {
                kahan_add(&mut s, &mut c, (w + shift(idx) - max).exp());
            }
        });
        let offset: f64 = (0..k).map(|l| coef[l] * center[l]).sum();
        Ok(max + s.ln() - self.log_z - offset)
    }

    /// Law restricted to {m ∈ box} and renormalized. The returned law's
    /// `log_z` is the partition value of the restricted event, so the box
    /// carries mass exp(restricted.log_z − self.log_z) under `self`.
    /// Nested restrictions compose exactly: masking is intersective and the
    /// surviving cells fold in the same order either way.
    pub fn conditional(&self, boxes: &[MagnetBox]) -> Result<SectorLaw> {
        let k = self.k();
        if boxes.len() != k {
            return Err(McwError::Validation(format!(
                "{} boxes for {} species",
                boxes.len(),
                k
            )));
        }
        for b in boxes {
            b.validate()?;
        }
        let mut masked = self.log_weights.clone();
        self.for_each_cell(|flat, idx, _| {
            let inside = (0..k).all(|l| boxes[l].contains(self.grid.values[l][idx[l]]));
            if !inside {
                masked[flat] = f64::NEG_INFINITY;
            }
        });
        let log_z = log_sum_exp(&masked);
        if log_z == f64::NEG_INFINITY {
            return Err(McwError::Domain(
                "conditioning box carries zero probability mass".into(),
            ));
        }
        Ok(SectorLaw {
            grid: self.grid.clone(),
            log_weights: masked,
            log_z,
            t: self.t.clone(),
            alpha_w: self.alpha_w.clone(),
            mode: self.mode,
        })
    }
}

// ---------------------------------------------------------------------------
// Magnetization boxes
// ---------------------------------------------------------------------------

/// One species' magnetization interval with per-endpoint openness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetBox {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl MagnetBox {
    pub fn closed(lo: f64, hi: f64) -> Self {
        MagnetBox { lo, hi, lo_open: false, hi_open: false }
    }

    /// The full cube slice [−1, 1].
    pub fn full() -> Self {
        Self::closed(-1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() || self.lo > self.hi {
            return Err(McwError::Validation(format!(
                "box [{}, {}] is not a finite interval",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        above && below
    }

    /// Parses "lo:hi" with optional delimiters marking open endpoints:
    /// "[-1:0)", "(0:1]", "(-0.5:0.5)". The bare form is closed-closed.
    pub fn parse(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        let (lo_open, rest) = match trimmed.strip_prefix('(') {
            Some(r) => (true, r),
            None => (false, trimmed.strip_prefix('[').unwrap_or(trimmed)),
        };
        let (hi_open, core) = match rest.strip_suffix(')') {
            Some(r) => (true, r),
            None => (false, rest.strip_suffix(']').unwrap_or(rest)),
        };
        let (a, b) = core
            .split_once(':')
            .ok_or_else(|| McwError::Validation(format!("box '{s}': expected lo:hi")))?;
        let lo = a.trim().parse::<f64>().map_err(|_| {
            McwError::Validation(format!("box '{s}': lower bound '{}' is not a number", a.trim()))
        })?;
        let hi = b.trim().parse::<f64>().map_err(|_| {
            McwError::Validation(format!("box '{s}': upper bound '{}' is not a number", b.trim()))
        })?;
        let out = MagnetBox { lo, hi, lo_open, hi_open };
        out.validate()?;
        Ok(out)
    }
}

impl std::fmt::Display for MagnetBox {
    /// Prints the same form [`MagnetBox::parse`] accepts, e.g. `(0:1]`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}{}:{}{}",
            if self.lo_open { '(' } else { '[' },
            self.lo,
            self.hi,
            if self.hi_open { ')' } else { ']' },
        )
    }
}

/// Parses a comma-separated list of per-species boxes.
pub fn parse_boxes(s: &str) -> Result<Vec<MagnetBox>> {
    s.split(',').map(MagnetBox::parse).collect()
}

// ---------------------------------------------------------------------------
// Pressure, Laplace estimate, concentration
// ---------------------------------------------------------------------------

/// log Z / N at zero tilt (counting convention). Subtract log 2 for the
/// fair-coin single-site convention.
pub fn exact_log_pressure(spec: &ModelSpec, n: usize) -> Result<f64> {
    let t = DVector::zeros(spec.k());
    Ok(sector_law(spec, n, &t)?.log_z / n as f64)
}

/// Second-order Laplace estimate of the tilted log partition sum.
#[derive(Debug, Clone)]
pub struct LaplaceEstimate {
    pub log_z_estimate: f64,
    /// Unique maximizer of the finite-size tilted functional.
    pub mu: DVector<f64>,
    /// Hessian of that functional at `mu`, in plain coordinates.
    pub hessian: DMatrix<f64>,
    /// Order of the neglected relative correction.
    pub error_order_note: String,
}

/// Estimates log Z by a Laplace expansion around the unique nondegenerate
/// maximizer μ of the finite-size tilted functional f:
///
/// ```text
/// log Z ≈ N·f(μ) − ½·log[det(−H̃(μ))·Π_l(1 − μ_l²)],
/// H̃_lm = H_lm / √(α_l·α_m)   (realized fractions),
/// ```
///
/// where H is the plain Hessian of f. The rescaling puts the Gaussian factor
/// on the per-species fluctuation scale √N_l·(x_l − μ_l), which is also the
/// scale whose cell spacing and Stirling prefactors cancel the N_l's — that
/// cancellation is what collapses the estimate to the closed form above.
pub fn laplace_log_z(spec: &ModelSpec, n: usize, t: &DVector<f64>) -> Result<LaplaceEstimate> {
    if t.len() != spec.k() {
        return Err(McwError::Validation(format!(
            "tilt has {} components for {} species",
            t.len(),
            spec.k()
        )));
    }
    let sizes = finite_sizes(spec, n)?;
    let fe = FreeEnergy::tilted(spec, &sizes, sizes.alpha_n.clone(), t);
    let best = unique_nondegenerate_maximizer(&fe)?;
    laplace_from_maximizer(&sizes, &best)
}

/// Locates the global maximizer of f and insists it is unique and has a
/// strictly negative-definite Hessian.
pub fn unique_nondegenerate_maximizer(fe: &FreeEnergy) -> Result<StationaryPoint> {
    let points = find_all_stationary(fe, DEFAULT_GRID_DENSITY);
    let set = global_maximizers(&points, TIE_TOL)?;
    if set.points.len() != 1 {
        return Err(McwError::Degenerate(format!(
            "{} tied global maximizers; the expansion needs a unique one",
            set.points.len()
        )));
    }
    let p = set.points[0].clone();
    if p.is_degenerate() {
        return Err(McwError::Degenerate(
            "maximizer Hessian has an eigenvalue inside the degeneracy band".into(),
        ));
    }
    Ok(p)
}

fn laplace_from_maximizer(sizes: &FiniteSizes, p: &StationaryPoint) -> Result<LaplaceEstimate> {
    let k = sizes.alpha_n.len();
    let scaled = DMatrix::from_fn(k, k, |l, m| {
        -p.hessian[(l, m)] / (sizes.alpha_n[l] * sizes.alpha_n[m]).sqrt()
    });
    let chol = Cholesky::new(scaled).ok_or_else(|| {
        McwError::Degenerate(
            "maximizer Hessian is not negative definite on the fluctuation scale".into(),
        )
    })?;
    let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let mut log_width = 0.0;
    for l in 0..k {
        let m = p.x[l];
        if m.abs() >= 1.0 {
            return Err(McwError::Degenerate("maximizer sits on the cube boundary".into()));
        }
        log_width += (1.0 - m * m).ln();
    }
    let n = sizes.n as f64;
    Ok(LaplaceEstimate {
        log_z_estimate: n * p.f_value - 0.5 * (log_det + log_width),
        mu: p.x.clone(),
        hessian: p.hessian.clone(),
        error_order_note: format!(
            "relative correction O(N^(-1/2 + {}*delta)) for delta in (0, 1/{})",
            k + 2,
            2 * k + 4
        ),
    })
}

/// Exact probability mass OUTSIDE the box of per-species half-width
/// N_l^(−1/2+δ) centered at the dominant magnetization of the tilted law.
pub fn concentration_probe(
    spec: &ModelSpec,
    n: usize,
    t: &DVector<f64>,
    delta: f64,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(McwError::Validation(format!("delta = {delta} must lie in (0, 1/2)")));
    }
    let law = sector_law(spec, n, t)?;
    let sizes = law.grid().sizes();
    let fe = FreeEnergy::tilted(spec, sizes, sizes.alpha_n.clone(), t);
    let mu = unique_nondegenerate_maximizer(&fe)?.x;
    let boxes: Vec<MagnetBox> = (0..spec.k())
        .map(|l| {
            let half = (sizes.sizes[l] as f64).powf(-0.5 + delta);
            MagnetBox::closed(mu[l] - half, mu[l] + half)
        })
        .collect();
    let inside = law.conditional(&boxes)?;
    Ok((1.0 - (inside.log_z - law.log_z).exp()).clamp(0.0, 1.0))
}
