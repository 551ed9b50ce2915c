//! Acceptance gate for the crate's shipped guarantees.
//!
//! Each test checks one end-to-end guarantee and prints exactly one
//! machine-greppable line `acceptance NN <name>: PASS|FAIL (<numbers>)`
//! (visible with `--nocapture`, always shown on failure). Tolerances and
//! runtime budgets are pinned as constants next to each test; loosening one
//! is an API-visible change, not a test tweak.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mcw::clt::{clt_params, conditional_clt_params, mu_shift_check};
use mcw::exact::{
    concentration_probe, laplace_log_z, sector_law, sector_law_with,
    unique_nondegenerate_maximizer, MagnetBox, WeightMode, DEFAULT_CELL_BUDGET,
};
use mcw::landscape::{
    find_all_stationary, global_maximizers, landscape_of, FreeEnergy, DEFAULT_GRID_DENSITY,
    TIE_TOL,
};
use mcw::model::{finite_sizes, hamiltonian_density};
use mcw::numerics::{
    laplace_integral, riemann_sum, BoxGrid, GradBound, TagPoint,
};
use mcw::sampler::{batch_means_se, glauber_run, ChainConfig, ChainInit};
use mcw::variational::{infsup_solve, InfSupOptions};
use mcw::ModelSpec;

// ---------------------------------------------------------------------------
// Shared fixtures and reporting
// ---------------------------------------------------------------------------

/// K=1 subcritical workhorse: J=0.5, h=0.2.
fn scalar_spec() -> ModelSpec {
    ModelSpec::ising(
        DMatrix::from_element(1, 1, 0.5),
        DVector::from_element(1, 0.2),
        DVector::from_element(1, 1.0),
    )
    .unwrap()
}

/// K=2 indefinite-interaction spec with a unique maximizer.
fn two_species_spec() -> ModelSpec {
    ModelSpec::ising(
        DMatrix::from_row_slice(2, 2, &[0.5, -0.7, -0.7, 0.2]),
        DVector::from_vec(vec![0.1, -0.1]),
        DVector::from_vec(vec![0.5, 0.5]),
    )
    .unwrap()
}

/// K=1 two-phase spec: J=1.5, h=0.
fn two_phase_spec() -> ModelSpec {
    ModelSpec::ising(
        DMatrix::from_element(1, 1, 1.5),
        DVector::from_element(1, 0.0),
        DVector::from_element(1, 1.0),
    )
    .unwrap()
}

/// Prints the one-line verdict and fails the test on FAIL.
fn verdict(name: &str, started: Instant, budget_s: f64, pass: bool, detail: &str) {
    let elapsed = started.elapsed().as_secs_f64();
    let in_budget = elapsed <= budget_s;
    let ok = pass && in_budget;
    println!(
        "acceptance {name}: {} ({detail}; {elapsed:.2}s of {budget_s:.0}s budget)",
        if ok { "PASS" } else { "FAIL" },
    );
    assert!(pass, "{name}: {detail}");
    assert!(in_budget, "{name}: {elapsed:.2}s exceeded {budget_s:.0}s budget");
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|&t| (t - max).exp()).sum::<f64>().ln()
}

// ---------------------------------------------------------------------------
// 01 — exact sector law vs exhaustive configuration sum
// ---------------------------------------------------------------------------

/// Sums all 2^N configurations directly: each weight exp(N·energy density).
fn brute_force_log_z(spec: &ModelSpec, n: usize) -> f64 {
    let sizes = finite_sizes(spec, n).unwrap();
    let k = spec.k();
    let mut species = Vec::with_capacity(n);
    for (p, &count) in sizes.sizes.iter().enumerate() {
        species.extend(std::iter::repeat_n(p, count));
    }
    let mut terms = Vec::with_capacity(1usize << n);
    for mask in 0u64..(1u64 << n) {
        let mut up = vec![0i64; k];
        for (i, &p) in species.iter().enumerate() {
            if mask >> i & 1 == 1 {
                up[p] += 1;
            }
        }
        let m = DVector::from_fn(k, |p, _| {
            (2 * up[p] - sizes.sizes[p] as i64) as f64 / sizes.sizes[p] as f64
        });
        terms.push(n as f64 * hamiltonian_density(spec, &sizes, &m));
    }
    log_sum_exp(&terms)
}

const BRUTE_FORCE_CASES: usize = 25;
const BRUTE_FORCE_TOL: f64 = 1e-10;

#[test]
fn acceptance_01_sector_law_matches_exhaustive_sum() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EC7_0201);
    let mut worst = 0.0f64;
    for _ in 0..BRUTE_FORCE_CASES {
        let k = rng.gen_range(1..=3usize);
        let n = rng.gen_range(2 * k.max(2)..=14);
        let mut j = DMatrix::zeros(k, k);
        for r in 0..k {
            for c in r..k {
                let v = rng.gen_range(-2.0..=2.0);
                j[(r, c)] = v;
                j[(c, r)] = v;
            }
        }
        let h = DVector::from_fn(k, |_, _| rng.gen_range(-1.0..=1.0));
        // Fractions bounded away from zero so every species gets sites.
        let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.15..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let alpha = DVector::from_vec(raw.iter().map(|r| r / total).collect());
        let spec = ModelSpec::ising(j, h, alpha).unwrap();
        let law = sector_law(&spec, n, &DVector::zeros(k)).unwrap();
        let err = (law.log_z() - brute_force_log_z(&spec, n)).abs();
        worst = worst.max(err);
    }
    verdict(
        "01 sector-law-vs-exhaustive",
        started,
        10.0,
        worst <= BRUTE_FORCE_TOL,
        &format!("worst |log Z error| {worst:.3e} over {BRUTE_FORCE_CASES} random specs, tol {BRUTE_FORCE_TOL:.0e}"),
    );
}

// ---------------------------------------------------------------------------
// 02 — finite-size pressure sandwiched by the free-energy maximum
// ---------------------------------------------------------------------------

const PRESSURE_SIZES: [usize; 3] = [100, 200, 400];

#[test]
fn acceptance_02_pressure_gap_within_entropy_bound() {
    let started = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    for (tag, spec) in [("K=1", scalar_spec()), ("K=2", two_species_spec())] {
        let mut prev_gap = f64::INFINITY;
        for n in PRESSURE_SIZES {
            let law = sector_law(&spec, n, &DVector::zeros(spec.k())).unwrap();
            let p_n = law.log_z() / n as f64;
            let sizes = law.grid().sizes();
            let fe = FreeEnergy::finite(&spec, sizes);
            let points = find_all_stationary(&fe, DEFAULT_GRID_DENSITY);
            let f_max = global_maximizers(&points, TIE_TOL).unwrap().f_max;
            let gap = (p_n - f_max).abs();
            let bound: f64 =
                sizes.sizes.iter().map(|&s| ((s + 1) as f64).ln()).sum::<f64>() / n as f64;
            pass &= gap <= bound && gap < prev_gap;
            detail.push_str(&format!("{tag} N={n}: gap {gap:.2e} ≤ {bound:.2e}; "));
            prev_gap = gap;
        }
    }
    verdict("02 pressure-gap-bound", started, 60.0, pass, detail.trim_end_matches("; "));
}

// ---------------------------------------------------------------------------
// 03 — inf-sup dual value equals the free-energy maximum
// ---------------------------------------------------------------------------

const DUALITY_TOL: f64 = 1e-7;

#[test]
fn acceptance_03_infsup_value_equals_max_free_energy() {
    let started = Instant::now();
    // Interaction signatures covered: all-negative, all-positive (both K=1
    // and K=3), indefinite, and singular (zero eigenvalue) blocks.
    let battery: Vec<(&str, ModelSpec)> = vec![
        ("free", ModelSpec::ising(DMatrix::from_element(1, 1, 0.0), DVector::from_element(1, 0.0), DVector::from_element(1, 1.0)).unwrap()),
        ("K1 pos", scalar_spec()),
        ("K1 neg", ModelSpec::ising(DMatrix::from_element(1, 1, -0.8), DVector::from_element(1, 0.3), DVector::from_element(1, 1.0)).unwrap()),
        ("K1 two-phase", two_phase_spec()),
        ("K2 indefinite", two_species_spec()),
        ("K2 pos", ModelSpec::ising(DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.8]), DVector::from_vec(vec![0.1, 0.0]), DVector::from_vec(vec![0.6, 0.4])).unwrap()),
        ("K2 neg", ModelSpec::ising(DMatrix::from_row_slice(2, 2, &[-1.0, 0.2, 0.2, -0.8]), DVector::from_vec(vec![0.2, -0.1]), DVector::from_vec(vec![0.5, 0.5])).unwrap()),
        ("K2 singular", ModelSpec::ising(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -0.5]), DVector::from_vec(vec![0.3, 0.2]), DVector::from_vec(vec![0.5, 0.5])).unwrap()),
        ("K3 indefinite", ModelSpec::ising(DMatrix::from_row_slice(3, 3, &[1.2, 0.3, -0.4, 0.3, -0.9, 0.1, -0.4, 0.1, 0.5]), DVector::from_vec(vec![0.1, -0.2, 0.05]), DVector::from_vec(vec![0.4, 0.35, 0.25])).unwrap()),
        ("K3 pos", ModelSpec::ising(DMatrix::from_row_slice(3, 3, &[1.0, 0.1, 0.1, 0.1, 0.9, 0.1, 0.1, 0.1, 0.8]), DVector::from_vec(vec![0.0, 0.1, -0.1]), DVector::from_vec(vec![1.0 / 3.0; 3])).unwrap()),
    ];
    let mut worst = 0.0f64;
    let mut pass = true;
    for (tag, spec) in &battery {
        let saddle = infsup_solve(spec, &InfSupOptions::default()).unwrap();
        let (_, points) = landscape_of(spec, DEFAULT_GRID_DENSITY);
        let f_max = global_maximizers(&points, TIE_TOL).unwrap().f_max;
        let err = (saddle.value + std::f64::consts::LN_2 - f_max).abs();
        worst = worst.max(err);
        pass &= saddle.converged && err <= DUALITY_TOL;
        if err > DUALITY_TOL {
            eprintln!("duality mismatch on {tag}: {err:.3e}");
        }
    }
    verdict(
        "03 infsup-duality",
        started,
        30.0,
        pass,
        &format!("worst |infsup+log2 − max f| {worst:.3e} over {} specs, tol {DUALITY_TOL:.0e}", battery.len()),
    );
}

// ---------------------------------------------------------------------------
// 04 — Laplace log-partition estimate converges to the exact value
// ---------------------------------------------------------------------------

const LAPLACE_SIZES: [usize; 4] = [100, 200, 400, 800];
const LAPLACE_TOL_AT_400: f64 = 0.01;

#[test]
fn acceptance_04_laplace_log_z_converges() {
    let started = Instant::now();
    let spec = scalar_spec();
    let t = DVector::zeros(1);
    let mut errs = Vec::new();
    for n in LAPLACE_SIZES {
        let exact = sector_law(&spec, n, &t).unwrap().log_z();
        let est = laplace_log_z(&spec, n, &t).unwrap().log_z_estimate;
        errs.push((est - exact).abs());
    }
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let pass = decreasing && errs[2] <= LAPLACE_TOL_AT_400;
    verdict(
        "04 laplace-convergence",
        started,
        30.0,
        pass,
        &format!(
            "|err| along N={LAPLACE_SIZES:?}: {:?}, need err(400) ≤ {LAPLACE_TOL_AT_400} and decreasing",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()
        ),
    );
}

// ---------------------------------------------------------------------------
// 05 — centered fluctuation law: covariance and mean of the rescaled field
// ---------------------------------------------------------------------------

const CENTERED_N: usize = 800;
const CENTERED_COV_REL_TOL: f64 = 0.05;
const CENTERED_MEAN_TOL: f64 = 0.02;

#[test]
fn acceptance_05_centered_fluctuations_match_prediction() {
    let started = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    for (tag, spec) in [("K=1", scalar_spec()), ("K=2", two_species_spec())] {
        let fe = FreeEnergy::limiting(&spec);
        let point = unique_nondegenerate_maximizer(&fe).unwrap();
        let params = clt_params(&spec, &point).unwrap();
        let law = sector_law(&spec, CENTERED_N, &DVector::zeros(spec.k())).unwrap();
        let rescaled = law.rescaled_moments(&point.x);
        let cov_err = (&rescaled.cov - &params.sigma).amax() / params.sigma.amax();
        let mean_err = rescaled.mean.amax();
        pass &= cov_err <= CENTERED_COV_REL_TOL && mean_err <= CENTERED_MEAN_TOL;
        detail.push_str(&format!("{tag}: cov rel {cov_err:.2e}, mean {mean_err:.2e}; "));
    }
    verdict(
        "05 centered-fluctuations",
        started,
        60.0,
        pass,
        &format!(
            "{}tols cov {CENTERED_COV_REL_TOL}, mean {CENTERED_MEAN_TOL} at N={CENTERED_N}",
            detail
        ),
    );
}

// ---------------------------------------------------------------------------
// 06 — non-centered fluctuations under a critical-rate size perturbation
// ---------------------------------------------------------------------------

const NONCENTERED_N: usize = 800;
const NONCENTERED_MEAN_REL_TOL: f64 = 0.15;
const SHIFT_N: usize = 10_000;
const SHIFT_REL_TOL: f64 = 0.02;

#[test]
fn acceptance_06_noncentered_mean_and_maximizer_shift() {
    let started = Instant::now();
    let spec = ModelSpec::new(
        DMatrix::from_element(1, 1, 0.5),
        DVector::from_element(1, 0.2),
        mcw::PriorSpec::Ising,
        DVector::from_element(1, 1.0),
        DVector::from_element(1, 0.5),
        0.5,
    )
    .unwrap();
    let fe = FreeEnergy::limiting(&spec);
    let point = unique_nondegenerate_maximizer(&fe).unwrap();
    let params = clt_params(&spec, &point).unwrap();
    let law = sector_law_with(
        &spec,
        NONCENTERED_N,
        &DVector::zeros(1),
        WeightMode::TargetRatios,
        DEFAULT_CELL_BUDGET,
    )
    .unwrap();
    let mean = law.rescaled_moments(&point.x).mean;
    let mean_err = (mean[0] - params.nu[0]).abs() / params.nu[0].abs();

    let shift = mu_shift_check(&spec, &[SHIFT_N]).unwrap();
    let shift_err = shift.rows[0].err;

    let pass = mean_err <= NONCENTERED_MEAN_REL_TOL && shift_err <= SHIFT_REL_TOL;
    verdict(
        "06 noncentered-fluctuations",
        started,
        60.0,
        pass,
        &format!(
            "rescaled mean {:.4} vs drift {:.4} (rel {mean_err:.2e} ≤ {NONCENTERED_MEAN_REL_TOL}); scaled maximizer shift rel err {shift_err:.2e} ≤ {SHIFT_REL_TOL} at N={SHIFT_N}",
            mean[0], params.nu[0]
        ),
    );
}

// ---------------------------------------------------------------------------
// 07 — conditional fluctuations in a two-phase landscape
// ---------------------------------------------------------------------------

const CONDITIONAL_N: usize = 800;
const CONDITIONAL_MEAN_TOL: f64 = 0.02;
const CONDITIONAL_COV_REL_TOL: f64 = 0.07;
const MIRROR_TOL: f64 = 1e-10;

#[test]
fn acceptance_07_conditional_fluctuations_per_phase() {
    let started = Instant::now();
    let spec = two_phase_spec();
    let (_, points) = landscape_of(&spec, DEFAULT_GRID_DENSITY);
    let maximizers = global_maximizers(&points, TIE_TOL).unwrap();
    let m_star = maximizers.points.iter().map(|p| p.x[0].abs()).fold(0.0, f64::max);

    let box_plus = vec![MagnetBox::parse("(0:1]").unwrap()];
    let box_minus = vec![MagnetBox::parse("[-1:0)").unwrap()];
    let params = conditional_clt_params(&spec, &maximizers, &[box_plus.clone(), box_minus.clone()])
        .unwrap();
    let sigma_plus = params[0].sigma[(0, 0)];

    let law = sector_law(&spec, CONDITIONAL_N, &DVector::zeros(1)).unwrap();
    let plus = law.conditional(&box_plus).unwrap().moments();
    let minus = law.conditional(&box_minus).unwrap().moments();
    let n = CONDITIONAL_N as f64;

    let mean_err =
        (plus.mean[0] - m_star).abs().max((minus.mean[0] + m_star).abs());
    let cov_err = (n * plus.cov[(0, 0)] - sigma_plus)
        .abs()
        .max((n * minus.cov[(0, 0)] - sigma_plus).abs())
        / sigma_plus;
    let mirror = (plus.mean[0] + minus.mean[0])
        .abs()
        .max((plus.cov[(0, 0)] - minus.cov[(0, 0)]).abs());

    let pass = mean_err <= CONDITIONAL_MEAN_TOL
        && cov_err <= CONDITIONAL_COV_REL_TOL
        && mirror <= MIRROR_TOL;
    verdict(
        "07 conditional-fluctuations",
        started,
        60.0,
        pass,
        &format!(
            "basin means ±{m_star:.4} err {mean_err:.2e} ≤ {CONDITIONAL_MEAN_TOL}; rescaled cov rel err {cov_err:.2e} ≤ {CONDITIONAL_COV_REL_TOL}; mirror asymmetry {mirror:.1e} ≤ {MIRROR_TOL:.0e}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 08 — Gibbs mass concentrates in a shrinking window
// ---------------------------------------------------------------------------

const CONCENTRATION_SIZES: [usize; 3] = [200, 400, 800];
const CONCENTRATION_DELTA: f64 = 0.2;
const CONCENTRATION_FINAL_TOL: f64 = 0.05;

#[test]
fn acceptance_08_gibbs_mass_concentrates() {
    let started = Instant::now();
    let spec = scalar_spec();
    let t = DVector::zeros(1);
    let masses: Vec<f64> = CONCENTRATION_SIZES
        .iter()
        .map(|&n| concentration_probe(&spec, n, &t, CONCENTRATION_DELTA).unwrap())
        .collect();
    let decreasing = masses.windows(2).all(|w| w[1] < w[0]);
    let pass = decreasing && masses[2] <= CONCENTRATION_FINAL_TOL;
    verdict(
        "08 concentration",
        started,
        30.0,
        pass,
        &format!(
            "outside mass along N={CONCENTRATION_SIZES:?}: {:?}, need final ≤ {CONCENTRATION_FINAL_TOL} and decreasing",
            masses.iter().map(|m| format!("{m:.2e}")).collect::<Vec<_>>()
        ),
    );
}

// ---------------------------------------------------------------------------
// 09 — quadrature helpers: rigorous Riemann bound and Gaussian Laplace forms
// ---------------------------------------------------------------------------

const POLYNOMIAL_CASES: usize = 20;
const GAUSSIAN_CLOSED_FORM_TOL: f64 = 1e-12;
const DECAY_SIZES: [f64; 3] = [20.0, 80.0, 320.0];

/// Random univariate cubic with its exact integral and interval sups.
struct Cubic {
    c: [f64; 4],
    lo: f64,
    hi: f64,
}

impl Cubic {
    fn eval(&self, x: f64) -> f64 {
        self.c[0] + x * (self.c[1] + x * (self.c[2] + x * self.c[3]))
    }
    fn deriv(&self, x: f64) -> f64 {
        self.c[1] + x * (2.0 * self.c[2] + x * 3.0 * self.c[3])
    }
    fn integral(&self) -> f64 {
        let prim = |x: f64| {
            x * (self.c[0]
                + x * (self.c[1] / 2.0 + x * (self.c[2] / 3.0 + x * self.c[3] / 4.0)))
        };
        prim(self.hi) - prim(self.lo)
    }
    /// Sups of |p| and |p'| over [lo, hi] via the critical points.
    fn sups(&self) -> (f64, f64) {
        let mut val_candidates = vec![self.lo, self.hi];
        // p' is quadratic: roots of c1 + 2 c2 x + 3 c3 x^2.
        let (a, b, c) = (3.0 * self.c[3], 2.0 * self.c[2], self.c[1]);
        if a.abs() > 1e-14 {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let r = disc.sqrt();
                val_candidates.push((-b + r) / (2.0 * a));
                val_candidates.push((-b - r) / (2.0 * a));
            }
        } else if b.abs() > 1e-14 {
            val_candidates.push(-c / b);
        }
        let sup_val = val_candidates
            .iter()
            .filter(|x| (self.lo..=self.hi).contains(x))
            .map(|&x| self.eval(x).abs())
            .fold(0.0, f64::max);
        // p'' is linear: root −c2/(3 c3).
        let mut der_candidates = vec![self.lo, self.hi];
        if self.c[3].abs() > 1e-14 {
            der_candidates.push(-self.c[2] / (3.0 * self.c[3]));
        }
        let sup_der = der_candidates
            .iter()
            .filter(|x| (self.lo..=self.hi).contains(x))
            .map(|&x| self.deriv(x).abs())
            .fold(0.0, f64::max);
        (sup_val, sup_der)
    }
}

#[test]
fn acceptance_09_quadrature_bound_and_gaussian_forms() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EC7_0901);
    let mut bound_holds = true;
    let mut worst_ratio = 0.0f64;
    for _ in 0..POLYNOMIAL_CASES {
        let k = rng.gen_range(1..=3usize);
        let polys: Vec<Cubic> = (0..k)
            .map(|_| {
                let lo = rng.gen_range(-2.0..0.0);
                let hi = lo + rng.gen_range(0.5..2.0);
                Cubic { c: std::array::from_fn(|_| rng.gen_range(-1.0..1.0)), lo, hi }
            })
            .collect();
        let grid = BoxGrid::uniform(
            polys.iter().map(|p| (p.lo, p.hi)).collect(),
            rng.gen_range(8..=24),
        )
        .unwrap();
        // Product integrand: exact integral and gradient sup factorize.
        let exact: f64 = polys.iter().map(Cubic::integral).product();
        let sups: Vec<(f64, f64)> = polys.iter().map(Cubic::sups).collect();
        let grad_sup = (0..k)
            .map(|d| {
                let partial: f64 = sups
                    .iter()
                    .enumerate()
                    .map(|(e, &(v, dv))| if e == d { dv } else { v })
                    .product();
                partial * partial
            })
            .sum::<f64>()
            .sqrt();
        let g = |x: &[f64]| -> f64 { polys.iter().zip(x).map(|(p, &xi)| p.eval(xi)).product() };
        let r = riemann_sum(&g, &grid, TagPoint::LowerCorner, GradBound::Analytic(grad_sup));
        let true_err = (r.sum - exact).abs();
        bound_holds &= true_err <= r.error_bound;
        if r.error_bound > 0.0 {
            worst_ratio = worst_ratio.max(true_err / r.error_bound);
        }
    }

    // Pure Gaussian integrands: the leading Laplace term is the whole answer.
    let mut gaussian_err = 0.0f64;
    for (k, n) in [(1usize, 50.0f64), (2, 30.0), (3, 20.0)] {
        let mut a = DMatrix::zeros(k, k);
        for d in 0..k {
            a[(d, d)] = 1.0 + d as f64;
            if d + 1 < k {
                a[(d, d + 1)] = 0.2;
                a[(d + 1, d)] = 0.2;
            }
        }
        let mu = DVector::from_element(k, 0.1);
        let f = |x: &DVector<f64>| -> f64 {
            let d = x - &mu;
            -0.5 * (&a * &d).dot(&d)
        };
        let grid = BoxGrid::uniform(vec![(-4.0, 4.0); k], 10).unwrap();
        let est = laplace_integral(&f, &mu, &(-a.clone()), &|_: &DVector<f64>| 1.0, n, &grid)
            .unwrap();
        let closed = 0.5
            * (k as f64 * (2.0 * std::f64::consts::PI / n).ln()
                - nalgebra::Cholesky::new(a.clone())
                    .unwrap()
                    .l()
                    .diagonal()
                    .iter()
                    .map(|d| 2.0 * d.ln())
                    .sum::<f64>());
        gaussian_err = gaussian_err.max((est.log_value - closed).abs());
    }

    // Quartic well: the leading-term error must decay as the scale grows.
    let f_quartic = |x: &DVector<f64>| -> f64 { -0.5 * x[0] * x[0] - 0.25 * x[0].powi(4) };
    let mu0 = DVector::zeros(1);
    let hess = DMatrix::from_element(1, 1, -1.0);
    let coarse = BoxGrid::uniform(vec![(-1.0, 1.0)], 4).unwrap();
    let fine = BoxGrid::uniform(vec![(-1.0, 1.0)], 400_000).unwrap();
    let mut rel_errs = Vec::new();
    for n in DECAY_SIZES {
        let est = laplace_integral(&f_quartic, &mu0, &hess, &|_: &DVector<f64>| 1.0, n, &coarse)
            .unwrap();
        let g = |x: &[f64]| (n * (-0.5 * x[0] * x[0] - 0.25 * x[0].powi(4))).exp();
        let oracle = riemann_sum(&g, &fine, TagPoint::Midpoint, GradBound::Analytic(0.0)).sum;
        rel_errs.push((est.log_value.exp() - oracle).abs() / oracle);
    }
    let decays = rel_errs.windows(2).all(|w| w[1] < w[0]);

    let pass = bound_holds && gaussian_err <= GAUSSIAN_CLOSED_FORM_TOL && decays;
    verdict(
        "09 quadrature-helpers",
        started,
        20.0,
        pass,
        &format!(
            "bound dominated true error on {POLYNOMIAL_CASES} cases (worst ratio {worst_ratio:.2e}); Gaussian closed-form err {gaussian_err:.1e} ≤ {GAUSSIAN_CLOSED_FORM_TOL:.0e}; quartic rel errs {:?} decaying",
            rel_errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()
        ),
    );
}

// ---------------------------------------------------------------------------
// 10 — sampler agrees with the exact law
// ---------------------------------------------------------------------------

const TV_SWEEPS: usize = 1_000_000;
const TV_TOL: f64 = 0.01;
const VARIANCE_N: usize = 400;
const VARIANCE_SE_FACTOR: f64 = 3.0;

#[test]
fn acceptance_10_sampler_matches_exact_law() {
    let started = Instant::now();
    // Three spins: compare the empirical sector distribution to the exact one.
    let spec3 = ModelSpec::ising(
        DMatrix::from_element(1, 1, 0.8),
        DVector::from_element(1, 0.15),
        DVector::from_element(1, 1.0),
    )
    .unwrap();
    let cfg3 = ChainConfig {
        n: 3,
        seed: 11,
        burn_in_sweeps: 100,
        sample_sweeps: TV_SWEEPS,
        thinning: 1,
        init: ChainInit::Random,
    };
    let samples3 = glauber_run(&spec3, &cfg3, None).unwrap();
    let exact3 = sector_law(&spec3, 3, &DVector::zeros(1)).unwrap();
    let mut counts = [0usize; 4];
    for row in samples3.rows() {
        // m ∈ {−1, −1/3, 1/3, 1} ↦ up-count 0..3.
        let ups = ((row[0] + 1.0) * 1.5).round() as usize;
        counts[ups.min(3)] += 1;
    }
    let total = samples3.len() as f64;
    let tv: f64 = (0..4)
        .map(|s| (counts[s] as f64 / total - exact3.probability(s)).abs())
        .sum::<f64>()
        / 2.0;

    // Rescaled variance at N=400 against the exact law, within batch-means SE.
    let spec = scalar_spec();
    let cfg = ChainConfig {
        n: VARIANCE_N,
        seed: 5,
        burn_in_sweeps: 500,
        sample_sweeps: 20_000,
        thinning: 1,
        init: ChainInit::Random,
    };
    let samples = glauber_run(&spec, &cfg, None).unwrap();
    let series = samples.component(0);
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let n = VARIANCE_N as f64;
    let sq: Vec<f64> = series.iter().map(|&m| n * (m - mean) * (m - mean)).collect();
    let sampled_var = sq.iter().sum::<f64>() / sq.len() as f64;
    let se = batch_means_se(&sq, 32);
    let exact_var = {
        let law = sector_law(&spec, VARIANCE_N, &DVector::zeros(1)).unwrap();
        let mu = unique_nondegenerate_maximizer(&FreeEnergy::limiting(&spec)).unwrap().x;
        law.rescaled_moments(&mu).cov[(0, 0)]
    };
    let var_gap = (sampled_var - exact_var).abs();

    let pass = tv <= TV_TOL && var_gap <= VARIANCE_SE_FACTOR * se;
    verdict(
        "10 sampler-validation",
        started,
        120.0,
        pass,
        &format!(
            "3-spin TV {tv:.4} ≤ {TV_TOL}; Var(√N m) {sampled_var:.3} vs exact {exact_var:.3} (gap {var_gap:.3} ≤ {VARIANCE_SE_FACTOR}·SE {:.3})",
            VARIANCE_SE_FACTOR * se
        ),
    );
}
