//! Variational characterization of the limiting pressure.
//!
//! The limit of the (prior-measure) pressure is an inf-sup of
//!
//! ```text
//! p_var(x) = −½·(x, Δx) + Σ_p α_p · log ∫ dρ(σ) exp[σ·(Σ_l J_pl α_l x_l + h_p)]
//! ```
//!
//! over rotated coordinates: with Δ = O·diag(λ)·Oᵀ, eigenvalues ascending
//! and `a` of them nonpositive, the pressure is
//! inf_{z_1..z_a} sup_{z_{a+1}..z_K} p_var(Oz). Both the quadratic and the
//! field term vanish along null directions of Δ, so those coordinates are
//! pinned to zero and the search runs over the complement.
//!
//! The solver enumerates stationary points by damped multistart Newton and
//! keeps the ones whose Hessian has the correct block inertia (positive
//! semidefinite on the inf block, negative semidefinite on the sup block).
//! Every stationary value of p_var equals the mean-field free energy of the
//! corresponding self-consistent point minus the prior normalization, so all
//! candidates lower-bound the limiting value and the largest inertia-correct
//! one attains it; the solver returns that maximum. When a = K the functional
//! is strictly convex and the survivor is unique (plain minimization); when
//! a = 0 the rule is plain maximization. Disagreement among survivors is
//! reported in `multistart_spread` rather than silently resolved.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{McwError, Result};
use crate::model::{spectral_split, ModelSpec, PriorSpec, SpectralSplit, ZERO_EIG_TOL};

/// Gradient norm below which a point counts as stationary.
pub const GRAD_TOL: f64 = 1e-9;
/// Block-inertia tolerance: inf-block eigenvalues ≥ −this, sup ≤ +this.
pub const INERTIA_TOL: f64 = 1e-8;

/// log ∫ dρ(σ) e^{σc}, overflow-safe for |c| up to the f64 exponent range.
///
/// Ising: log cosh(c) = |c| + log1p(e^{−2|c|}) − log 2.
/// Discrete priors: shifted log-sum-exp over the atoms.
pub fn log_mgf(prior: &PriorSpec, c: f64) -> f64 {
    match prior {
        PriorSpec::Ising => {
            let a = c.abs();
            a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
        }
        PriorSpec::Atoms { points } => log_sum_weighted(points.iter().copied(), c),
        PriorSpec::Quadrature { nodes, weights } => {
            log_sum_weighted(nodes.iter().copied().zip(weights.iter().copied()), c)
        }
    }
}

fn log_sum_weighted(pairs: impl Iterator<Item = (f64, f64)> + Clone, c: f64) -> f64 {
    let m = pairs
        .clone()
        .map(|(v, _)| v * c)
        .fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = pairs.map(|(v, w)| w * (v * c - m).exp()).sum();
    m + s.ln()
}

/// Mean of σ under the c-tilted prior: Ψ(c) = d/dc log_mgf. Lies in [−1, 1].
pub fn mean_fn(prior: &PriorSpec, c: f64) -> f64 {
    match prior {
        PriorSpec::Ising => c.tanh(),
        PriorSpec::Atoms { points } => tilted_moments(points.iter().copied(), c).0,
        PriorSpec::Quadrature { nodes, weights } => {
            tilted_moments(nodes.iter().copied().zip(weights.iter().copied()), c).0
        }
    }
}

/// Variance of σ under the c-tilted prior: Ψ′(c) ≥ 0.
pub(crate) fn var_fn(prior: &PriorSpec, c: f64) -> f64 {
    match prior {
        PriorSpec::Ising => {
            let t = c.tanh();
            1.0 - t * t
        }
        PriorSpec::Atoms { points } => tilted_moments(points.iter().copied(), c).1,
        PriorSpec::Quadrature { nodes, weights } => {
            tilted_moments(nodes.iter().copied().zip(weights.iter().copied()), c).1
        }
    }
}

fn tilted_moments(pairs: impl Iterator<Item = (f64, f64)> + Clone, c: f64) -> (f64, f64) {
    let m = pairs
        .clone()
        .map(|(v, _)| v * c)
        .fold(f64::NEG_INFINITY, f64::max);
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (v, w) in pairs {
        let e = w * (v * c - m).exp();
        s0 += e;
        s1 += e * v;
        s2 += e * v * v;
    }
    let mean = s1 / s0;
    ((s1 / s0), (s2 / s0 - mean * mean).max(0.0))
}

/// Per-species tilted fields c_p(x) = Σ_l J_pl α_l x_l + h_p.
fn fields(spec: &ModelSpec, x: &DVector<f64>) -> DVector<f64> {
    spec.j() * spec.alpha().component_mul(x) + spec.h()
}

/// The variational functional p_var(x).
pub fn p_var(spec: &ModelSpec, x: &DVector<f64>) -> f64 {
    let (delta, _) = spec.build_delta();
    let c = fields(spec, x);
    let mut s = -0.5 * (&delta * x).dot(x);
    for p in 0..spec.k() {
        s += spec.alpha()[p] * log_mgf(spec.prior(), c[p]);
    }
    s
}

/// ∇p_var(x) = Δ·(Ψ(c(x)) − x), Ψ applied componentwise.
pub fn p_var_grad(spec: &ModelSpec, x: &DVector<f64>) -> DVector<f64> {
    let (delta, _) = spec.build_delta();
    let c = fields(spec, x);
    let psi = DVector::from_fn(spec.k(), |p, _| mean_fn(spec.prior(), c[p]));
    &delta * (psi - x)
}

/// Hessian of p_var: −Δ + Δ·diag(Ψ′(c_p)/α_p)·Δ.
pub fn p_var_hessian(spec: &ModelSpec, x: &DVector<f64>) -> DMatrix<f64> {
    let (delta, _) = spec.build_delta();
    let c = fields(spec, x);
    let d = DMatrix::from_diagonal(&DVector::from_fn(spec.k(), |p, _| {
        var_fn(spec.prior(), c[p]) / spec.alpha()[p]
    }));
    &delta * d * &delta - delta
}

/// Coordinate system for the saddle search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordMode {
    /// Eigenbasis of Δ (the general case).
    RotatedZ,
    /// Original x coordinates; only admissible when Δ is definite, where the
    /// problem is a plain max or min and the rotation is immaterial.
    OriginalX,
}

#[derive(Debug, Clone)]
pub struct InfSupOptions {
    /// Start-lattice spacing per active coordinate.
    pub grid_spacing: f64,
    /// Half-width of the start box; widened automatically when a solution
    /// lands near the boundary. Defaults to max(1.5, √K + 0.5).
    pub grid_halfwidth: Option<f64>,
    pub grad_tol: f64,
    pub inertia_tol: f64,
    /// Start cap; beyond it the lattice degrades to seeded random starts.
    pub max_starts: usize,
    pub coords: CoordMode,
    pub zero_tol: f64,
}

impl Default for InfSupOptions {
    fn default() -> Self {
        InfSupOptions {
            grid_spacing: 0.25,
            grid_halfwidth: None,
            grad_tol: GRAD_TOL,
            inertia_tol: INERTIA_TOL,
            max_starts: 20_000,
            coords: CoordMode::RotatedZ,
            zero_tol: ZERO_EIG_TOL,
        }
    }
}

/// Validated inf-sup solution.
#[derive(Debug, Clone)]
pub struct SaddleResult {
    pub value: f64,
    /// Saddle location in rotated coordinates (kernel entries are 0).
    pub z_star: DVector<f64>,
    /// O·z_star in the original coordinates.
    pub x_star: DVector<f64>,
    pub grad_norm: f64,
    pub converged: bool,
    /// Value spread among the validated solutions; ~0 when the search is
    /// unambiguous.
    pub multistart_spread: f64,
}

/// A located stationary point with its validation status; carried inside
/// [`McwError::NoSaddle`] for diagnosis.
#[derive(Debug, Clone)]
pub struct SaddleCandidate {
    pub z: DVector<f64>,
    pub x: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    /// Inf-block PSD / sup-block NSD within tolerance.
    pub inertia_ok: bool,
}

struct Search<'a> {
    spec: &'a ModelSpec,
    /// Orthogonal basis (identity in OriginalX mode).
    basis: DMatrix<f64>,
    /// Coordinates with |λ| above the zero band, in eigenvalue order.
    active: Vec<usize>,
    /// Per-active flag: true = inf block (λ < 0), false = sup block.
    is_inf: Vec<bool>,
    opts: &'a InfSupOptions,
}

impl Search<'_> {
    fn k(&self) -> usize {
        self.spec.k()
    }

    fn embed(&self, zr: &DVector<f64>) -> DVector<f64> {
        let mut z = DVector::zeros(self.k());
        for (i, &idx) in self.active.iter().enumerate() {
            z[idx] = zr[i];
        }
        z
    }

    fn x_of(&self, zr: &DVector<f64>) -> DVector<f64> {
        &self.basis * self.embed(zr)
    }

    fn value(&self, zr: &DVector<f64>) -> f64 {
        p_var(self.spec, &self.x_of(zr))
    }

    fn grad(&self, zr: &DVector<f64>) -> DVector<f64> {
        let g = self.basis.transpose() * p_var_grad(self.spec, &self.x_of(zr));
        DVector::from_fn(self.active.len(), |i, _| g[self.active[i]])
    }

    fn hess(&self, zr: &DVector<f64>) -> DMatrix<f64> {
        let h = self.basis.transpose() * p_var_hessian(self.spec, &self.x_of(zr)) * &self.basis;
        DMatrix::from_fn(self.active.len(), self.active.len(), |r, c| {
            h[(self.active[r], self.active[c])]
        })
    }

    /// Damped Newton toward ∇ = 0 over a subset of active coordinates
    /// (`free` selects them); the rest stay fixed.
    fn newton(&self, start: &DVector<f64>, free: &[usize]) -> Option<DVector<f64>> {
        let mut z = start.clone();
        // Step-based convergence: near a degenerate stationary point the
        // gradient underestimates the remaining distance, so iterate until
        // the step itself stalls (see the landscape Newton for the same
        // reasoning), then accept on the gradient residual.
        for _ in 0..300 {
            let g_full = self.grad(&z);
            let g = DVector::from_fn(free.len(), |i, _| g_full[free[i]]);
            let h_full = self.hess(&z);
            let h = DMatrix::from_fn(free.len(), free.len(), |r, c| h_full[(free[r], free[c])]);
            let mut step = match h.lu().solve(&(-&g)) {
                Some(s) => s,
                None => {
                    // Singular block: saddle-flow step (descend the inf
                    // coordinates, ascend the sup ones).
                    DVector::from_fn(free.len(), |i, _| {
                        let sign = if self.is_inf[free[i]] { -1.0 } else { 1.0 };
                        0.1 * sign * g[i]
                    })
                }
            };
            let m = step.abs().max();
            if m > 1.0 {
                step *= 1.0 / m;
            }
            let mut moved: f64 = 0.0;
            for (i, &fi) in free.iter().enumerate() {
                moved = moved.max(step[i].abs());
                z[fi] += step[i];
            }
            if moved <= 1e-13 {
                break;
            }
        }
        let g_full = self.grad(&z);
        let g = DVector::from_fn(free.len(), |i, _| g_full[free[i]]);
        (g.norm() <= self.opts.grad_tol).then_some(z)
    }

    /// Block inertia at zr: inf-block PSD, sup-block NSD within tolerance.
    fn inertia_ok(&self, zr: &DVector<f64>) -> bool {
        let h = self.hess(zr);
        let blocks = [
            (true, 1.0),   // inf block, require eigs ≥ −tol (PSD)
            (false, -1.0), // sup block, require eigs ≤ +tol (NSD)
        ];
        for (want_inf, sign) in blocks {
            let idx: Vec<usize> = (0..self.active.len())
                .filter(|&i| self.is_inf[i] == want_inf)
                .collect();
            if idx.is_empty() {
                continue;
            }
            let block = DMatrix::from_fn(idx.len(), idx.len(), |r, c| h[(idx[r], idx[c])]);
            let eigs = SymmetricEigen::new(block).eigenvalues;
            if eigs.iter().any(|&e| sign * e < -self.opts.inertia_tol) {
                return false;
            }
        }
        true
    }

}

/// Lattice of start values for the given coordinate count.
fn start_lattice(dims: usize, halfwidth: f64, spacing: f64, cap: usize) -> Vec<Vec<f64>> {
    if dims == 0 {
        return vec![Vec::new()];
    }
    let per_dim = ((2.0 * halfwidth / spacing).round() as usize + 1).max(2);
    let total = per_dim.checked_pow(dims as u32).unwrap_or(usize::MAX);
    if total <= cap {
        let axis: Vec<f64> = (0..per_dim)
            .map(|i| -halfwidth + 2.0 * halfwidth * i as f64 / (per_dim - 1) as f64)
            .collect();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; dims];
        loop {
            out.push(idx.iter().map(|&i| axis[i]).collect());
            let mut l = 0;
            loop {
                idx[l] += 1;
                if idx[l] < per_dim {
                    break;
                }
                idx[l] = 0;
                l += 1;
                if l == dims {
                    return out;
                }
            }
        }
    } else {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6d63_7732);
        (0..cap)
            .map(|_| (0..dims).map(|_| rng.gen_range(-halfwidth..halfwidth)).collect())
            .collect()
    }
}

/// Solves the inf-sup. See the module docs for the algorithm; failures carry
/// every located stationary point.
pub fn infsup_solve(spec: &ModelSpec, opts: &InfSupOptions) -> Result<SaddleResult> {
    let (delta, _) = spec.build_delta();
    let split: SpectralSplit = spectral_split(&delta, opts.zero_tol)?;

    let (basis, active, is_inf) = match opts.coords {
        CoordMode::RotatedZ => {
            let active = split.active_indices();
            let is_inf: Vec<bool> = active.iter().map(|&i| split.eigenvalues[i] < 0.0).collect();
            (split.basis.clone(), active, is_inf)
        }
        CoordMode::OriginalX => {
            if split.active_indices().len() != spec.k() {
                return Err(McwError::Validation(
                    "original-coordinate mode requires a definite interaction matrix".into(),
                ));
            }
            let all_inf = split.a == spec.k();
            if !(split.a == 0 || all_inf) {
                return Err(McwError::Validation(
                    "original-coordinate mode requires a definite interaction matrix".into(),
                ));
            }
            let k = spec.k();
            (DMatrix::identity(k, k), (0..k).collect(), vec![all_inf; k])
        }
    };

    // Everything is a kernel direction: p_var is globally constant.
    if active.is_empty() {
        let x0 = DVector::zeros(spec.k());
        return Ok(SaddleResult {
            value: p_var(spec, &x0),
            z_star: DVector::zeros(spec.k()),
            x_star: x0,
            grad_norm: 0.0,
            converged: true,
            multistart_spread: 0.0,
        });
    }

    let search = Search { spec, basis, active, is_inf, opts };
    let base_hw = opts
        .grid_halfwidth
        .unwrap_or_else(|| 1.5f64.max((spec.k() as f64).sqrt() + 0.5));

    let mut halfwidth = base_hw;
    for _round in 0..4 {
        let result = solve_round(&search, halfwidth)?;
        match result {
            RoundOutcome::Done(res) => return Ok(res),
            RoundOutcome::Widen => halfwidth *= 1.5,
            RoundOutcome::Failed(cands) => {
                return Err(McwError::NoSaddle { candidates: cands })
            }
        }
    }
    Err(McwError::Numerical(
        "inf-sup solutions kept landing on the start-box boundary after widening".into(),
    ))
}

enum RoundOutcome {
    Done(SaddleResult),
    Widen,
    Failed(Vec<SaddleCandidate>),
}

fn solve_round(search: &Search<'_>, halfwidth: f64) -> Result<RoundOutcome> {
    let opts = search.opts;
    let dims = search.active.len();
    let all: Vec<usize> = (0..dims).collect();
    let starts = start_lattice(dims, halfwidth, opts.grid_spacing, opts.max_starts);

    let mut found: Vec<DVector<f64>> = Vec::new();
    for s in &starts {
        let start = DVector::from_vec(s.clone());
        if let Some(z) = search.newton(&start, &all) {
            if !found.iter().any(|y| (&z - y).abs().max() <= 1e-7) {
                found.push(z);
            }
        }
    }
    found.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .find_map(|(u, v)| {
                let c = u.partial_cmp(v).unwrap();
                (c != std::cmp::Ordering::Equal).then_some(c)
            })
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut candidates: Vec<SaddleCandidate> = Vec::new();
    for z in &found {
        candidates.push(SaddleCandidate {
            z: search.embed(z),
            x: search.x_of(z),
            value: search.value(z),
            grad_norm: search.grad(z).norm(),
            inertia_ok: search.inertia_ok(z),
        });
    }

    let survivors: Vec<&SaddleCandidate> =
        candidates.iter().filter(|c| c.inertia_ok).collect();
    if survivors.is_empty() {
        return Ok(RoundOutcome::Failed(candidates));
    }

    // Every stationary value lower-bounds the limit (it is the free energy
    // of a self-consistent point, shifted); the largest inertia-correct one
    // attains it, so spread > 0 signals subdominant local solutions, not an
    // algorithmic tie to break.
    let best = survivors
        .iter()
        .max_by(|a, b| a.value.partial_cmp(&b.value).unwrap())
        .unwrap();
    let spread = best.value
        - survivors
            .iter()
            .map(|c| c.value)
            .fold(f64::INFINITY, f64::min);

    // Re-run wider if the chosen solution sits against the start box.
    let near_boundary = search
        .active
        .iter()
        .any(|&i| best.z[i].abs() >= halfwidth - opts.grid_spacing);
    if near_boundary && halfwidth < 64.0 {
        return Ok(RoundOutcome::Widen);
    }

    Ok(RoundOutcome::Done(SaddleResult {
        value: best.value,
        z_star: best.z.clone(),
        x_star: best.x.clone(),
        grad_norm: best.grad_norm,
        converged: true,
        multistart_spread: spread,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{find_all_stationary, global_maximizers, FreeEnergy, TIE_TOL};
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn scalar_spec(j: f64, h: f64) -> ModelSpec {
        ModelSpec::ising(
            DMatrix::from_element(1, 1, j),
            DVector::from_element(1, h),
            DVector::from_element(1, 1.0),
        )
        .unwrap()
    }

    /// Golden-section search for the max of a unimodal scalar function.
    fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let gr = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut c = b - gr * (b - a);
        let mut d = a + gr * (b - a);
        for _ in 0..300 {
            if f(c) > f(d) {
                b = d;
                d = c;
                c = b - gr * (b - a);
            } else {
                a = c;
                c = d;
                d = a + gr * (b - a);
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn log_mgf_frozen_values() {
        let ising = PriorSpec::Ising;
        assert_eq!(log_mgf(&ising, 0.0), 0.0);
        // Oracle: direct log(cosh(1)).
        assert_abs_diff_eq!(log_mgf(&ising, 1.0), 0.433_780_830_483_027_1, epsilon = 1e-14);
        // Two-atom prior must agree with the closed form everywhere.
        let atoms = PriorSpec::Atoms { points: vec![(-1.0, 0.5), (1.0, 0.5)] };
        for c in [-3.0, -0.7, 0.0, 0.4, 2.5] {
            assert_abs_diff_eq!(log_mgf(&atoms, c), log_mgf(&ising, c), epsilon = 1e-14);
        }
        // No overflow at |c| ≈ 700: log cosh(c) → |c| − log 2.
        let big = log_mgf(&ising, 700.0);
        assert!(big.is_finite());
        assert_abs_diff_eq!(big, 700.0 - std::f64::consts::LN_2, epsilon = 1e-12);
        assert!(log_mgf(&atoms, -700.0).is_finite());
    }

    #[test]
    fn mean_fn_values_and_derivative() {
        let ising = PriorSpec::Ising;
        assert_abs_diff_eq!(mean_fn(&ising, 2.0), 0.964_027_580_075_816_9, epsilon = 1e-14);
        // Point mass: mean is the atom regardless of tilt.
        let point = PriorSpec::Atoms { points: vec![(0.3, 1.0)] };
        for c in [-5.0, 0.0, 1.7] {
            assert_abs_diff_eq!(mean_fn(&point, c), 0.3, epsilon = 1e-14);
        }
        // Ψ = d/dc log_mgf by central differences.
        let quad = PriorSpec::Quadrature {
            nodes: vec![-0.9, -0.2, 0.5, 1.0],
            weights: vec![0.1, 0.4, 0.3, 0.2],
        };
        for prior in [&ising, &quad] {
            for c in [-1.3, 0.0, 0.8] {
                let eps = 1e-6;
                let fd = (log_mgf(prior, c + eps) - log_mgf(prior, c - eps)) / (2.0 * eps);
                assert_abs_diff_eq!(mean_fn(prior, c), fd, epsilon = 1e-8);
                assert!(mean_fn(prior, c).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn p_var_scalar_values() {
        // Free system: p_var ≡ 0.
        let free = scalar_spec(0.0, 0.0);
        for x in [-1.0, 0.0, 0.7] {
            assert_eq!(p_var(&free, &DVector::from_element(1, x)), 0.0);
        }
        // Oracle: scalar formula −½Jx² + log cosh(Jx + h) at J=1, x=0.5.
        let spec = scalar_spec(1.0, 0.0);
        assert_abs_diff_eq!(
            p_var(&spec, &DVector::from_element(1, 0.5)),
            -0.004_885_493_041_722_547,
            epsilon = 1e-14
        );
    }

    #[test]
    fn infsup_free_system() {
        let res = infsup_solve(&scalar_spec(0.0, 0.0), &InfSupOptions::default()).unwrap();
        assert_eq!(res.value, 0.0);
        assert_eq!(res.z_star[0], 0.0);
        // With a field the constant is Σ α_p log cosh(h_p).
        let res = infsup_solve(&scalar_spec(0.0, 0.3), &InfSupOptions::default()).unwrap();
        assert_abs_diff_eq!(res.value, 0.3f64.cosh().ln(), epsilon = 1e-12);
    }

    #[test]
    fn infsup_scalar_ferromagnet_matches_golden_section() {
        let spec = scalar_spec(0.5, 0.2);
        let res = infsup_solve(&spec, &InfSupOptions::default()).unwrap();
        let oracle_arg = golden_max(|x| p_var(&spec, &DVector::from_element(1, x)), -1.5, 1.5);
        let oracle_val = p_var(&spec, &DVector::from_element(1, oracle_arg));
        assert!(res.converged);
        assert_abs_diff_eq!(res.value, oracle_val, epsilon = 1e-9);
        assert_abs_diff_eq!(res.x_star[0], oracle_arg, epsilon = 1e-6);
        assert!(res.grad_norm <= GRAD_TOL);
        assert!(res.multistart_spread <= 1e-9);
    }

    #[test]
    fn infsup_scalar_negative_coupling_is_a_min() {
        // Δ < 0: a = K = 1, pure inf.
        let spec = scalar_spec(-0.7, 0.1);
        let res = infsup_solve(&spec, &InfSupOptions::default()).unwrap();
        let oracle_arg = golden_max(|x| -p_var(&spec, &DVector::from_element(1, x)), -1.5, 1.5);
        let oracle_val = p_var(&spec, &DVector::from_element(1, oracle_arg));
        assert_abs_diff_eq!(res.value, oracle_val, epsilon = 1e-9);
    }

    #[test]
    fn infsup_double_well_unambiguous() {
        let spec = scalar_spec(1.5, 0.0);
        let res = infsup_solve(&spec, &InfSupOptions::default()).unwrap();
        // Two symmetric maxima share the value; spread must reflect that.
        assert!(res.multistart_spread <= 1e-9);
        let fe = FreeEnergy::limiting(&spec);
        let pts = find_all_stationary(&fe, 7);
        let set = global_maximizers(&pts, TIE_TOL).unwrap();
        assert_abs_diff_eq!(
            res.value + std::f64::consts::LN_2,
            set.f_max,
            epsilon = 1e-9
        );
    }

    #[test]
    fn infsup_indefinite_antiferro_duality() {
        let spec = ModelSpec::ising(
            DMatrix::from_row_slice(2, 2, &[0.0, -4.0, -4.0, 0.0]),
            DVector::zeros(2),
            DVector::from_vec(vec![0.5, 0.5]),
        )
        .unwrap();
        let res = infsup_solve(&spec, &InfSupOptions::default()).unwrap();
        let fe = FreeEnergy::limiting(&spec);
        let set = global_maximizers(&find_all_stationary(&fe, 7), TIE_TOL).unwrap();
        assert_abs_diff_eq!(res.value + std::f64::consts::LN_2, set.f_max, epsilon = 1e-8);
    }

    #[test]
    fn infsup_rotated_and_original_agree_for_psd() {
        let spec = ModelSpec::ising(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.8]),
            DVector::from_vec(vec![0.05, -0.1]),
            DVector::from_vec(vec![0.4, 0.6]),
        )
        .unwrap();
        let rot = infsup_solve(&spec, &InfSupOptions::default()).unwrap();
        let orig = infsup_solve(
            &spec,
            &InfSupOptions { coords: CoordMode::OriginalX, ..Default::default() },
        )
        .unwrap();
        assert_abs_diff_eq!(rot.value, orig.value, epsilon = 1e-9);
    }

    #[test]
    fn original_mode_rejects_indefinite() {
        let spec = ModelSpec::ising(
            DMatrix::from_row_slice(2, 2, &[0.0, -4.0, -4.0, 0.0]),
            DVector::zeros(2),
            DVector::from_vec(vec![0.5, 0.5]),
        )
        .unwrap();
        let err = infsup_solve(
            &spec,
            &InfSupOptions { coords: CoordMode::OriginalX, ..Default::default() },
        )
        .unwrap_err();
        assert!(matches!(err, McwError::Validation(_)));
    }

    proptest! {
        /// ∇p_var by central finite differences.
        #[test]
        fn p_var_grad_matches_finite_differences(
            x0 in -1.2..1.2f64, x1 in -1.2..1.2f64,
            j00 in -2.0..2.0f64, j01 in -2.0..2.0f64,
            h0 in -1.0..1.0f64, a0 in 0.2..0.8f64,
        ) {
            let spec = ModelSpec::ising(
                DMatrix::from_row_slice(2, 2, &[j00, j01, j01, -0.4]),
                DVector::from_vec(vec![h0, 0.2]),
                DVector::from_vec(vec![a0, 1.0 - a0]),
            ).unwrap();
            let x = DVector::from_vec(vec![x0, x1]);
            let g = p_var_grad(&spec, &x);
            let eps = 1e-6;
            for l in 0..2 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[l] += eps;
                xm[l] -= eps;
                let fd = (p_var(&spec, &xp) - p_var(&spec, &xm)) / (2.0 * eps);
                prop_assert!((fd - g[l]).abs() <= 1e-6 * (1.0 + g[l].abs()));
            }
        }

        /// Duality against the landscape route across random Ising models:
        /// a successful solve must reproduce max f − log 2, and even a
        /// no-saddle failure must not have located a stationary value above
        /// that bound (stationary values are free energies of self-consistent
        /// points, shifted).
        #[test]
        fn duality_random_two_species(
            j00 in -1.5..1.5f64, j01 in -1.5..1.5f64, j11 in -1.5..1.5f64,
            h0 in -0.5..0.5f64, h1 in -0.5..0.5f64,
            a0 in 0.25..0.75f64,
        ) {
            let spec = ModelSpec::ising(
                DMatrix::from_row_slice(2, 2, &[j00, j01, j01, j11]),
                DVector::from_vec(vec![h0, h1]),
                DVector::from_vec(vec![a0, 1.0 - a0]),
            ).unwrap();
            let fe = FreeEnergy::limiting(&spec);
            let set = global_maximizers(&find_all_stationary(&fe, 7), TIE_TOL).unwrap();
            let limit = set.f_max - std::f64::consts::LN_2;
            match infsup_solve(&spec, &InfSupOptions::default()) {
                Ok(res) => {
                    prop_assert!((res.value - limit).abs() <= 1e-7,
                        "infsup {} vs limit {}", res.value, limit);
                }
                Err(McwError::NoSaddle { candidates }) => {
                    for c in &candidates {
                        prop_assert!(c.value <= limit + 1e-7,
                            "stationary value {} above limit {}", c.value, limit);
                    }
                }
                Err(e) => prop_assert!(false, "unexpected failure: {e}"),
            }
        }
    }
}
