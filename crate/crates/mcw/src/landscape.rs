//! Free-energy landscape over the magnetization cube [−1, 1]^K.
//!
//! The exponential-scale functional governing the sector decomposition of an
//! Ising-prior system is
//!
//! ```text
//! f(x) = ½·(x, Δx) + (h̃, x) − Σ_p α_p·I(x_p),
//! I(x) = ((1−x)/2)·log((1−x)/2) + ((1+x)/2)·log((1+x)/2),
//! ```
//!
//! whose stationary points are the mean-field solutions
//! x_l = tanh(h_l + Σ_p J_lp α_p x_p). This module evaluates f and its
//! derivatives, enumerates *all* stationary points (maxima, saddles,
//! minima) by multistart Newton with deduplication, and extracts the global
//! maximizer set with an explicit degeneracy flag.
//!
//! [`FreeEnergy`] generalizes f slightly: the quadratic/field weights and
//! the entropy weights can differ (finite-size work weights the entropy by
//! the realized integer fractions while the energy may carry target ratios),
//! and a linear tilt can be folded into the field term.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{McwError, Result};
use crate::model::{delta_with, FiniteSizes, ModelSpec};

/// Residual ‖∇f‖₂ below which a point is accepted as stationary.
pub const GRAD_TOL: f64 = 1e-10;
/// Hessian eigenvalues within this band of zero mark degeneracy.
pub const DEGENERACY_BAND: f64 = 1e-9;
/// ∞-norm radius used to merge duplicate stationary points.
pub const DEDUP_TOL: f64 = 1e-7;
/// Default f-value tie tolerance for the global maximizer set.
pub const TIE_TOL: f64 = 1e-9;
/// arctanh arguments are clamped to |x| ≤ 1 − this margin.
pub const ATANH_MARGIN: f64 = 1e-15;
/// Default seeding density per dimension for the stationary-point search.
pub const DEFAULT_GRID_DENSITY: usize = 7;
/// Seed cap beyond which the lattice is replaced by Latin hypercube samples.
pub const SEED_CAP: usize = 100_000;

/// Binary entropy-like term I(x) on [−1, 1]; I(±1) = 0 by continuity,
/// I(0) = −log 2. Errors outside the closed interval.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(McwError::Domain(format!("binary_entropy({x}): outside [-1, 1]")));
    }
    Ok(binary_entropy_unchecked(x))
}

#[inline]
fn binary_entropy_unchecked(x: f64) -> f64 {
    let mut s = 0.0;
    for half in [0.5 * (1.0 - x), 0.5 * (1.0 + x)] {
        if half > 0.0 {
            s += half * half.ln();
        }
    }
    s
}

/// arctanh with the argument clamped to |x| ≤ 1 − [`ATANH_MARGIN`] so
/// boundary evaluations stay finite. Delegates to the standard library's
/// relatively-accurate implementation: near x = 0 the error must scale with
/// |x| (a ½·log((1+x)/(1−x)) formulation has a constant ~1e−16 noise floor
/// that stalls Newton refinement of degenerate stationary points ~1e−5 away
/// from the truth).
#[inline]
pub fn atanh_clamped(x: f64) -> f64 {
    x.clamp(-1.0 + ATANH_MARGIN, 1.0 - ATANH_MARGIN).atanh()
}

/// A concrete free-energy functional ½(x,Δx) + (lin, x) − Σ_p ent_p·I(x_p).
#[derive(Debug, Clone)]
pub struct FreeEnergy {
    /// Fraction vector weighting the entropy term.
    alpha_entropy: DVector<f64>,
    delta: DMatrix<f64>,
    /// Full linear coefficient: α_energy∘h plus any tilt contribution.
    lin: DVector<f64>,
}

impl FreeEnergy {
    /// Limiting functional f with the model's α everywhere.
    pub fn limiting(spec: &ModelSpec) -> Self {
        Self::build(spec, spec.alpha().clone(), spec.alpha().clone(), None, 0)
    }

    /// Finite-size functional f_N at the realized fractions N_p/N.
    pub fn finite(spec: &ModelSpec, sizes: &FiniteSizes) -> Self {
        Self::build(spec, sizes.alpha_n.clone(), sizes.alpha_n.clone(), None, sizes.n)
    }

    /// f with an arbitrary fraction vector in every role (used for
    /// target-ratio continuations where no integer sizes exist).
    pub fn with_alpha(spec: &ModelSpec, alpha: &DVector<f64>) -> Self {
        Self::build(spec, alpha.clone(), alpha.clone(), None, 0)
    }

    /// Tilted finite-size functional f_{N,t}(x) = f_N(x) + (1/√N)(t, √α_w∘x)
    /// with energy/tilt fractions `alpha_energy` (realized or target) and
    /// entropy fractions fixed to the realized sizes.
    pub fn tilted(
        spec: &ModelSpec,
        sizes: &FiniteSizes,
        alpha_energy: DVector<f64>,
        t: &DVector<f64>,
    ) -> Self {
        Self::build(spec, alpha_energy, sizes.alpha_n.clone(), Some(t), sizes.n)
    }

    fn build(
        spec: &ModelSpec,
        alpha_energy: DVector<f64>,
        alpha_entropy: DVector<f64>,
        t: Option<&DVector<f64>>,
        n: usize,
    ) -> Self {
        let delta = delta_with(spec.j(), &alpha_energy);
        let mut lin = alpha_energy.component_mul(spec.h());
        if let Some(t) = t {
            // (1/√N)(t, √α∘x) contributes t_l·√(α_l/N) to the linear term.
            for l in 0..lin.len() {
                lin[l] += t[l] * (alpha_energy[l] / n as f64).sqrt();
            }
        }
        FreeEnergy { alpha_entropy, delta, lin }
    }

    pub fn k(&self) -> usize {
        self.lin.len()
    }
    pub fn delta(&self) -> &DMatrix<f64> {
        &self.delta
    }

    /// f(x); requires x ∈ [−1, 1]^K.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        debug_assert!(x.iter().all(|v| (-1.0..=1.0).contains(v)));
        let mut ent = 0.0;
        for l in 0..self.k() {
            ent += self.alpha_entropy[l] * binary_entropy_unchecked(x[l]);
        }
        0.5 * (&self.delta * x).dot(x) + self.lin.dot(x) - ent
    }

    /// ∇f(x)_l = (Δx)_l + lin_l − ent_l·arctanh(x_l).
    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = &self.delta * x + &self.lin;
        for l in 0..self.k() {
            g[l] -= self.alpha_entropy[l] * atanh_clamped(x[l]);
        }
        g
    }

    /// Symmetric Hessian H_lp = Δ_lp − δ_lp·ent_l/(1 − x_l²).
    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut h = self.delta.clone();
        for l in 0..self.k() {
            let xl = x[l].clamp(-1.0 + ATANH_MARGIN, 1.0 - ATANH_MARGIN);
            h[(l, l)] -= self.alpha_entropy[l] / (1.0 - xl * xl);
        }
        h
    }

    /// Mean-field map x ↦ tanh((Δx + lin)/ent) whose fixed points are the
    /// stationary points of f. With equal energy/entropy fractions this is
    /// exactly x_l = tanh(h_l + Σ_p J_lp α_p x_p).
    pub fn mean_field(&self, x: &DVector<f64>) -> DVector<f64> {
        let field = &self.delta * x + &self.lin;
        DVector::from_fn(self.k(), |l, _| (field[l] / self.alpha_entropy[l]).tanh())
    }
}

/// Classification of a stationary point by Hessian inertia.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    /// All Hessian eigenvalues < −[`DEGENERACY_BAND`].
    Maximum,
    /// Mixed signs, or eigenvalues inside the degeneracy band.
    Saddle,
    /// All Hessian eigenvalues > +[`DEGENERACY_BAND`].
    Minimum,
}

impl PointKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointKind::Maximum => "maximum",
            PointKind::Saddle => "saddle",
            PointKind::Minimum => "minimum",
        }
    }
}

/// A validated stationary point of a [`FreeEnergy`].
#[derive(Debug, Clone)]
pub struct StationaryPoint {
    pub x: DVector<f64>,
    pub f_value: f64,
    pub grad_norm: f64,
    pub hessian: DMatrix<f64>,
    /// Ascending Hessian eigenvalues.
    pub hess_eigs: DVector<f64>,
    pub kind: PointKind,
    /// Number of search seeds that converged to this point.
    pub basin_seed_count: usize,
}

impl StationaryPoint {
    /// True if any eigenvalue sits inside the degeneracy band.
    pub fn is_degenerate(&self) -> bool {
        self.hess_eigs.iter().any(|e| e.abs() <= DEGENERACY_BAND)
    }

    /// True if no eigenvalue exceeds +[`DEGENERACY_BAND`]: a strict maximum
    /// or a band-degenerate critical point, i.e. a maximizer candidate.
    pub fn is_max_like(&self) -> bool {
        self.hess_eigs.iter().all(|&e| e <= DEGENERACY_BAND)
    }
}

fn classify(eigs: &DVector<f64>) -> PointKind {
    if eigs.iter().all(|&e| e < -DEGENERACY_BAND) {
        PointKind::Maximum
    } else if eigs.iter().all(|&e| e > DEGENERACY_BAND) {
        PointKind::Minimum
    } else {
        PointKind::Saddle
    }
}

/// Packages x into a [`StationaryPoint`] (value, gradient, Hessian inertia).
pub fn stationary_point_at(fe: &FreeEnergy, x: DVector<f64>) -> StationaryPoint {
    let grad = fe.grad(&x);
    let hessian = fe.hessian(&x);
    let mut eigs = SymmetricEigen::new(hessian.clone()).eigenvalues;
    eigs.as_mut_slice().sort_by(|a, b| a.partial_cmp(b).unwrap());
    let kind = classify(&eigs);
    StationaryPoint {
        f_value: fe.value(&x),
        grad_norm: grad.norm(),
        x,
        hessian,
        hess_eigs: eigs,
        kind,
        basin_seed_count: 0,
    }
}

/// Outcome of the damped mean-field iteration.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

const FIXED_POINT_TOL: f64 = 1e-13;
const FIXED_POINT_MAX_ITERS: usize = 100_000;

/// Damped self-consistent iteration x ← (1−d)·x + d·tanh-field(x), stopped
/// when successive iterates move less than 1e−13 in ∞-norm, then polished by
/// Newton. Non-convergence is reported in the result, not fatal.
pub fn fixed_point_iterate(fe: &FreeEnergy, x0: &DVector<f64>, damping: f64) -> FixedPoint {
    assert!(damping > 0.0 && damping <= 1.0, "damping must lie in (0, 1]");
    let mut x = x0.clone();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..FIXED_POINT_MAX_ITERS {
        iterations = it + 1;
        let target = fe.mean_field(&x);
        let next = &x * (1.0 - damping) + target * damping;
        let step = (&next - &x).abs().max();
        x = next;
        if step <= FIXED_POINT_TOL {
            converged = true;
            break;
        }
    }
    x = newton_polish(fe, x);
    FixedPoint { x, iterations, converged }
}

/// Newton corrections on ∇f = 0 until the residual stops improving; skipped
/// silently when the Hessian is numerically singular. The generous iteration
/// budget matters at near-critical couplings: the self-consistent map stalls
/// ~1e−4 away from a marginal fixed point (its per-step movement is cubic in
/// the distance), and only a geometrically contracting polish pulls those
/// stalls close enough together to deduplicate.
fn newton_polish(fe: &FreeEnergy, mut x: DVector<f64>) -> DVector<f64> {
    for _ in 0..64 {
        let g = fe.grad(&x);
        if g.norm() == 0.0 {
            break;
        }
        let h = fe.hessian(&x);
        match h.lu().solve(&(-&g)) {
            Some(step) => {
                let mut xn = &x + step;
                clamp_interior(&mut xn);
                if fe.grad(&xn).norm() < g.norm() {
                    x = xn;
                } else {
                    break;
                }
            }
            None => break,
        }
    }
    x
}

fn clamp_interior(x: &mut DVector<f64>) {
    for v in x.iter_mut() {
        *v = v.clamp(-1.0 + 1e-12, 1.0 - 1e-12);
    }
}

/// Damped Newton iteration on ∇f = 0 from one seed. Converges locally to
/// stationary points of any index (maxima, saddles, minima).
fn newton_search(fe: &FreeEnergy, x0: &DVector<f64>) -> Option<DVector<f64>> {
    let mut x = x0.clone();
    // Convergence is judged by the step, not the gradient: at a degenerate
    // critical point the gradient is ~ x³ and falls below any tolerance long
    // before the iterate settles, which would scatter near-duplicates wider
    // than the dedup radius. Newton still contracts geometrically there, so
    // iterating until the step stalls collapses the whole cluster.
    for _ in 0..200 {
        let g = fe.grad(&x);
        let h = fe.hessian(&x);
        let mut step = match h.lu().solve(&(-&g)) {
            Some(s) => s,
            // Singular Hessian: nudge along the (descent) gradient to leave
            // the degenerate region, then keep iterating.
            None => -g.clone() * 0.1,
        };
        let max_step = step.abs().max();
        if max_step > 0.5 {
            step *= 0.5 / max_step;
        }
        let mut xn = &x + step;
        clamp_interior(&mut xn);
        let moved = (&xn - &x).abs().max();
        x = xn;
        if moved <= 1e-13 {
            break;
        }
    }
    let g = fe.grad(&x);
    if g.norm() <= 1e-9 {
        Some(newton_polish(fe, x))
    } else {
        None
    }
}

/// Enumerates stationary points of f: multistart Newton from a uniform
/// lattice over (−0.99, 0.99)^K plus the 2^K sign-pattern corners, the
/// damped mean-field iteration from the same lattice (robust for attracting
/// maxima), deduplication at 1e−7 in ∞-norm, and a final residual check at
/// [`GRAD_TOL`]. Results are sorted lexicographically for determinism.
pub fn find_all_stationary(fe: &FreeEnergy, grid_density: usize) -> Vec<StationaryPoint> {
    let k = fe.k();
    let density = grid_density.max(2);
    let mut seeds: Vec<DVector<f64>> = Vec::new();
    let lattice_total = density.checked_pow(k as u32).unwrap_or(usize::MAX);
    if lattice_total <= SEED_CAP {
        let mut idx = vec![0usize; k];
        loop {
            seeds.push(DVector::from_fn(k, |l, _| {
                -0.99 + 1.98 * idx[l] as f64 / (density - 1) as f64
            }));
            // Odometer over the lattice.
            let mut l = 0;
            loop {
                idx[l] += 1;
                if idx[l] < density {
                    break;
                }
                idx[l] = 0;
                l += 1;
                if l == k {
                    break;
                }
            }
            if l == k {
                break;
            }
        }
    } else {
        // Latin hypercube fallback at high dimension, fixed seed.
        use rand::{seq::SliceRandom, Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6d63_7731);
        let n = SEED_CAP;
        let mut strata: Vec<Vec<usize>> = (0..k)
            .map(|_| {
                let mut s: Vec<usize> = (0..n).collect();
                s.shuffle(&mut rng);
                s
            })
            .collect();
        // Latin-hypercube rows: component l of seed i reads stratum column i
        // of permutation l, so the outer index walks every permutation at once.
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            seeds.push(DVector::from_fn(k, |l, _| {
                let cell = strata[l][i] as f64 + rng.gen::<f64>();
                -0.99 + 1.98 * cell / n as f64
            }));
        }
        strata.clear();
    }
    // Sign-pattern corners at magnitude 0.95.
    if k <= 16 {
        for mask in 0u32..(1u32 << k) {
            seeds.push(DVector::from_fn(k, |l, _| {
                if mask >> l & 1 == 1 {
                    0.95
                } else {
                    -0.95
                }
            }));
        }
    }

    let mut found: Vec<(DVector<f64>, usize)> = Vec::new();
    let record = |x: DVector<f64>, found: &mut Vec<(DVector<f64>, usize)>| {
        for (y, count) in found.iter_mut() {
            if (&x - &*y).abs().max() <= DEDUP_TOL {
                *count += 1;
                return;
            }
        }
        found.push((x, 1));
    };
    for seed in &seeds {
        if let Some(x) = newton_search(fe, seed) {
            record(x, &mut found);
        }
        // The mean-field iteration finds attracting fixed points the Newton
        // run may have skipped past.
        let fp = fixed_point_iterate(fe, seed, 1.0);
        let fp = if fp.converged { fp } else { fixed_point_iterate(fe, seed, 0.5) };
        if fp.converged {
            record(fp.x, &mut found);
        }
    }
    let mut points: Vec<StationaryPoint> = found
        .into_iter()
        .filter_map(|(x, count)| {
            let mut p = stationary_point_at(fe, x);
            p.basin_seed_count = count;
            (p.grad_norm <= GRAD_TOL).then_some(p)
        })
        .collect();
    points.sort_by(|a, b| {
        a.x.iter()
            .zip(b.x.iter())
            .find_map(|(u, v)| {
                let c = u.partial_cmp(v).unwrap();
                (c != std::cmp::Ordering::Equal).then_some(c)
            })
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    points
}

/// Global maximizers of f with tie and degeneracy reporting.
#[derive(Debug, Clone)]
pub struct MaximizerSet {
    /// Top-value maximizer candidates (strict maxima or band-degenerate
    /// critical points), f within `tie_tol` of the best.
    pub points: Vec<StationaryPoint>,
    pub f_max: f64,
    /// True if any retained point has a Hessian eigenvalue with
    /// |λ| ≤ [`DEGENERACY_BAND`].
    pub degenerate: bool,
}

/// Filters `find_all_stationary` output down to the global maximizer set.
pub fn global_maximizers(points: &[StationaryPoint], tie_tol: f64) -> Result<MaximizerSet> {
    if points.is_empty() {
        return Err(McwError::Numerical(
            "no stationary points located; cannot form maximizer set".into(),
        ));
    }
    let f_max = points.iter().map(|p| p.f_value).fold(f64::NEG_INFINITY, f64::max);
    let retained: Vec<StationaryPoint> = points
        .iter()
        .filter(|p| p.f_value >= f_max - tie_tol && p.is_max_like())
        .cloned()
        .collect();
    if retained.is_empty() {
        return Err(McwError::Numerical(
            "top-value stationary points all have ascent directions; maximizer set empty".into(),
        ));
    }
    let degenerate = retained.iter().any(|p| p.is_degenerate());
    Ok(MaximizerSet { points: retained, f_max, degenerate })
}

/// Convenience: stationary points and maximizer set of the limiting f.
pub fn landscape_of(spec: &ModelSpec, grid_density: usize) -> (FreeEnergy, Vec<StationaryPoint>) {
    let fe = FreeEnergy::limiting(spec);
    let pts = find_all_stationary(&fe, grid_density);
    (fe, pts)
}
