//! Limiting fluctuation laws of the rescaled magnetization and their
//! verification against exact or sampled finite-N statistics.
//!
//! At a unique nondegenerate maximizer μ of the limiting free energy f, the
//! rescaled magnetization √N·√α_N∘(m − μ) is asymptotically Gaussian with
//!
//! ```text
//! Σ = √α · (−H_f(μ))^(−1) · √α,
//! ν = √α · (−H_f(μ))^(−1) · diag(α)·J·diag(μ)·β   (θ = 1/2; else ν = 0),
//! ```
//!
//! where √α = diag(√α_p). The quadratic form is stated in the
//! positive-definite orientation: H_f(μ) ≺ 0 at a strict maximum, so −H_f
//! inverts by Cholesky and Σ is PD. When several global maximizers tie, the
//! same formulas hold per maximizer, conditionally on the magnetization
//! staying in a box that isolates its basin.
//!
//! `verify_clt` compares these predictions to the finite-N law — mean,
//! covariance, and the moment generating function on a fixed probe set —
//! computed exactly from the sector law or estimated by Glauber sampling.
//! `mu_shift_check` verifies the companion expansion of the finite-N
//! maximizer, μ_N − μ ≈ N^(−θ)·(−H_f)^(−1)·diag(α)·J·diag(μ)·β.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{McwError, Result};
use crate::exact::{
    sector_law_with, unique_nondegenerate_maximizer, MagnetBox, WeightMode, DEFAULT_CELL_BUDGET,
};
use crate::landscape::{
    find_all_stationary, FreeEnergy, MaximizerSet, PointKind, StationaryPoint,
    DEFAULT_GRID_DENSITY,
};
use crate::model::{finite_sizes, ModelSpec};
use crate::sampler::{multichain, ChainConfig, ChainInit};

/// Smallest admissible eigenvalue of Σ.
pub const SIGMA_EIG_FLOOR: f64 = 1e-12;
/// Boundary values of f must stay below f(μ) by at least this margin for a
/// conditioning box to be accepted.
pub const BOUNDARY_MARGIN: f64 = 1e-9;
/// Approximate number of f evaluations per box face in the boundary check.
const BOUNDARY_SAMPLES_PER_FACE: usize = 1000;

/// Parameters of the limiting Gaussian fluctuation law.
#[derive(Debug, Clone)]
pub struct CltParams {
    /// Maximizer the law is centered at.
    pub mu: DVector<f64>,
    /// Limit mean of the rescaled magnetization (zero unless θ = 1/2).
    pub nu: DVector<f64>,
    /// Limit covariance, symmetric positive definite.
    pub sigma: DMatrix<f64>,
    pub theta: f64,
    /// Box the law is conditioned on, in the multi-maximizer mode.
    pub conditioned_box: Option<Vec<MagnetBox>>,
}

impl CltParams {
    /// Predicted log moment generating function ½(t,Σt) + (ν,t).
    pub fn predicted_log_mgf(&self, t: &DVector<f64>) -> f64 {
        0.5 * (&self.sigma * t).dot(t) + self.nu.dot(t)
    }
}

fn params_at(
    spec: &ModelSpec,
    point: &StationaryPoint,
    conditioned_box: Option<Vec<MagnetBox>>,
) -> Result<CltParams> {
    if point.kind != PointKind::Maximum || point.is_degenerate() {
        return Err(McwError::Degenerate(format!(
            "fluctuation law needs a strict nondegenerate maximum; got a {} with \
             Hessian eigenvalues {:?}",
            point.kind.as_str(),
            point.hess_eigs.as_slice()
        )));
    }
    let k = spec.k();
    let neg_h = -&point.hessian;
    let chol = Cholesky::new(neg_h).ok_or_else(|| {
        McwError::Degenerate("−H_f(μ) is not positive definite; no fluctuation law".into())
    })?;
    let inv = chol.inverse();
    let sqrt_a = DMatrix::from_diagonal(&spec.alpha().map(f64::sqrt));
    let sigma_raw = &sqrt_a * &inv * &sqrt_a;
    let sigma = 0.5 * (&sigma_raw + sigma_raw.transpose());
    let eigs = SymmetricEigen::new(sigma.clone()).eigenvalues;
    if eigs.iter().any(|&e| e <= SIGMA_EIG_FLOOR) {
        return Err(McwError::Numerical(format!(
            "covariance eigenvalues {:?} fell below {SIGMA_EIG_FLOOR:e}",
            eigs.as_slice()
        )));
    }
    let nu = if spec.theta() == 0.5 {
        let drive = DVector::from_fn(k, |l, _| {
            spec.alpha()[l]
                * (0..k).map(|m| spec.j()[(l, m)] * point.x[m] * spec.beta()[m]).sum::<f64>()
        });
        &sqrt_a * (&inv * drive)
    } else {
        DVector::zeros(k)
    };
    Ok(CltParams { mu: point.x.clone(), nu, sigma, theta: spec.theta(), conditioned_box })
}

/// Fluctuation parameters at a unique nondegenerate maximizer.
pub fn clt_params(spec: &ModelSpec, point: &StationaryPoint) -> Result<CltParams> {
    params_at(spec, point, None)
}

fn strictly_inside(boxes: &[MagnetBox], x: &DVector<f64>) -> bool {
    boxes.iter().zip(x.iter()).all(|(b, &v)| v > b.lo && v < b.hi)
}

/// Grid-samples a box's boundary faces, about 10³ points per face.
fn boundary_points(boxes: &[MagnetBox]) -> Vec<DVector<f64>> {
    let k = boxes.len();
    let mut points = Vec::new();
    if k == 1 {
        points.push(DVector::from_element(1, boxes[0].lo));
        points.push(DVector::from_element(1, boxes[0].hi));
        return points;
    }
    let per_axis = ((BOUNDARY_SAMPLES_PER_FACE as f64).powf(1.0 / (k as f64 - 1.0)).ceil()
        as usize)
        .max(2);
    for fixed in 0..k {
        for end in [boxes[fixed].lo, boxes[fixed].hi] {
            let free: Vec<usize> = (0..k).filter(|&d| d != fixed).collect();
            let mut idx = vec![0usize; free.len()];
            loop {
                let mut x = DVector::zeros(k);
                x[fixed] = end;
                for (pos, &d) in free.iter().enumerate() {
                    let frac = idx[pos] as f64 / (per_axis - 1) as f64;
                    x[d] = boxes[d].lo + frac * (boxes[d].hi - boxes[d].lo);
                }
                points.push(x);
                let mut carry = idx.len();
                for pos in (0..idx.len()).rev() {
                    idx[pos] += 1;
                    if idx[pos] < per_axis {
                        carry = pos;
                        break;
                    }
                    idx[pos] = 0;
                }
                if carry == idx.len() {
                    break;
                }
            }
        }
    }
    points
}

/// Per-maximizer fluctuation parameters, conditioned on the given boxes.
///
/// Each box must isolate one global maximizer: exactly one strictly inside,
/// no other stationary point of f in the box, and f on the box boundary
/// staying below f(μ^i) − [`BOUNDARY_MARGIN`] (grid-checked).
pub fn conditional_clt_params(
    spec: &ModelSpec,
    maximizers: &MaximizerSet,
    boxes: &[Vec<MagnetBox>],
) -> Result<Vec<CltParams>> {
    let k = spec.k();
    let fe = FreeEnergy::limiting(spec);
    let stationary = find_all_stationary(&fe, DEFAULT_GRID_DENSITY);
    let mut out = Vec::with_capacity(boxes.len());
    for (i, bx) in boxes.iter().enumerate() {
        if bx.len() != k {
            return Err(McwError::Validation(format!(
                "box {i} has {} slices for {k} species",
                bx.len()
            )));
        }
        for b in bx {
            b.validate()?;
        }
        let inside: Vec<&StationaryPoint> = maximizers
            .points
            .iter()
            .filter(|p| strictly_inside(bx, &p.x))
            .collect();
        if inside.len() != 1 {
            return Err(McwError::Validation(format!(
                "box {i} contains {} global maximizers strictly inside; need exactly one",
                inside.len()
            )));
        }
        let point = inside[0];
        for s in &stationary {
            if (&s.x - &point.x).amax() <= 1e-6 {
                continue;
            }
            if strictly_inside(bx, &s.x) {
                return Err(McwError::Validation(format!(
                    "box {i} contains another stationary point at {:?}",
                    s.x.as_slice()
                )));
            }
        }
        let floor = point.f_value - BOUNDARY_MARGIN;
        for b in boundary_points(bx) {
            let fv = fe.value(&b);
            if fv >= floor {
                return Err(McwError::Validation(format!(
                    "box {i} boundary point {:?} has f = {fv}, within {BOUNDARY_MARGIN:e} \
                     of the maximizer value {}",
                    b.as_slice(),
                    point.f_value
                )));
            }
        }
        out.push(params_at(spec, point, Some(bx.clone()))?);
    }
    Ok(out)
}

/// Where verification statistics come from.
#[derive(Debug, Clone)]
pub enum VerifySource {
    /// Exact sector-law enumeration (errors beyond the cell budget).
    Exact,
    /// Glauber multichain estimates.
    Sampler {
        chains: usize,
        seed: u64,
        burn_in_sweeps: usize,
        sample_sweeps: usize,
        thinning: usize,
    },
}

/// Acceptance thresholds for one verification row.
#[derive(Debug, Clone, Copy)]
pub struct VerifyTols {
    /// Max absolute component error of the rescaled mean vs ν.
    pub mean_abs: f64,
    /// Max entrywise covariance error relative to Σ's largest entry.
    pub cov_rel: f64,
    /// Max absolute log-MGF error over the probe set.
    pub mgf_abs: f64,
}

impl Default for VerifyTols {
    fn default() -> Self {
        VerifyTols { mean_abs: 0.05, cov_rel: 0.10, mgf_abs: 0.05 }
    }
}

/// One system size's comparison against the predicted law.
#[derive(Debug, Clone)]
pub struct VerifyRow {
    pub n: usize,
    /// |mean_l − ν_l| per component.
    pub mean_err: Vec<f64>,
    /// max_{lm} |C_lm − Σ_lm| / max_{lm} |Σ_lm|.
    pub cov_rel_err: f64,
    /// max over probes of |log M̂(t) − (½(t,Σt) + (ν,t))|.
    pub mgf_err: f64,
    pub pass: bool,
}

/// Prediction, per-N comparisons, and the cross-N convergence trend.
#[derive(Debug, Clone)]
pub struct CltReport {
    pub params: CltParams,
    pub tols: VerifyTols,
    pub rows: Vec<VerifyRow>,
    /// Covariance error at the largest N is below the smallest N's.
    pub trend_ok: bool,
}

/// Fixed MGF probe set {±0.5·e_l, ±1.0·e_l, 0.5·(e_l + e_m)}; magnitudes
/// stay ≤ 1 so Monte Carlo MGF estimates keep finite variance.
pub fn probe_set(k: usize) -> Vec<DVector<f64>> {
    let mut probes = Vec::new();
    for l in 0..k {
        for s in [0.5, -0.5, 1.0, -1.0] {
            let mut t = DVector::zeros(k);
            t[l] = s;
            probes.push(t);
        }
    }
    for l in 0..k {
        for m in l + 1..k {
            let mut t = DVector::zeros(k);
            t[l] = 0.5;
            t[m] = 0.5;
            probes.push(t);
        }
    }
    probes
}

/// Predicted fluctuation parameters for a model: without a box this needs
/// a unique global maximizer; with one it runs the conditional validation.
pub fn predicted_params(spec: &ModelSpec, boxes: Option<&[MagnetBox]>) -> Result<CltParams> {
    let fe = FreeEnergy::limiting(spec);
    let stationary = find_all_stationary(&fe, DEFAULT_GRID_DENSITY);
    let maxset = crate::landscape::global_maximizers(&stationary, crate::landscape::TIE_TOL)?;
    match boxes {
        Some(bx) => {
            let mut list = conditional_clt_params(spec, &maxset, &[bx.to_vec()])?;
            Ok(list.remove(0))
        }
        None => {
            if maxset.points.len() != 1 {
                return Err(McwError::Degenerate(format!(
                    "{} tied global maximizers; verify each basin with a conditioning box",
                    maxset.points.len()
                )));
            }
            clt_params(spec, &maxset.points[0])
        }
    }
}

/// Compares the predicted law against the finite-N law for each size.
///
/// The finite statistics are rescaled as √N·√α_N∘(m − μ) with the realized
/// fractions; when the size perturbation β is nonzero, exact-mode energies
/// are weighted by the target ratios so integer rounding of the species
/// sizes does not drown the N^(−1/2)-scale mean shift under test.
pub fn verify_clt(
    spec: &ModelSpec,
    n_list: &[usize],
    source: &VerifySource,
    boxes: Option<&[MagnetBox]>,
    tols: &VerifyTols,
) -> Result<CltReport> {
    if n_list.is_empty() {
        return Err(McwError::Validation("verification needs at least one size".into()));
    }
    let params = predicted_params(spec, boxes)?;
    let probes = probe_set(spec.k());
    let mode = if spec.beta().iter().any(|&b| b != 0.0) {
        WeightMode::TargetRatios
    } else {
        WeightMode::Realized
    };
    let rows: Vec<Result<VerifyRow>> = n_list
        .par_iter()
        .map(|&n| verify_one(spec, n, source, boxes, &params, &probes, mode, tols))
        .collect();
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        out.push(r?);
    }
    let trend_ok =
        out.len() < 2 || out.last().unwrap().cov_rel_err < out.first().unwrap().cov_rel_err;
    Ok(CltReport { params, tols: *tols, rows: out, trend_ok })
}

#[allow(clippy::too_many_arguments)]
fn verify_one(
    spec: &ModelSpec,
    n: usize,
    source: &VerifySource,
    boxes: Option<&[MagnetBox]>,
    params: &CltParams,
    probes: &[DVector<f64>],
    mode: WeightMode,
    tols: &VerifyTols,
) -> Result<VerifyRow> {
    let k = spec.k();
    let (mean, cov, mgf): (DVector<f64>, DMatrix<f64>, Vec<f64>) = match source {
        VerifySource::Exact => {
            let mut law = sector_law_with(spec, n, &DVector::zeros(k), mode, DEFAULT_CELL_BUDGET)?;
            if let Some(bx) = boxes {
                law = law.conditional(bx)?;
            }
            let m = law.rescaled_moments(&params.mu);
            let lm: Result<Vec<f64>> =
                probes.iter().map(|t| law.log_mgf(t, &params.mu)).collect();
            (m.mean, m.cov, lm?)
        }
        VerifySource::Sampler { chains, seed, burn_in_sweeps, sample_sweeps, thinning } => {
            let cfg = ChainConfig {
                n,
                seed: *seed,
                burn_in_sweeps: *burn_in_sweeps,
                sample_sweeps: *sample_sweeps,
                thinning: *thinning,
                init: if boxes.is_some() {
                    ChainInit::AtPoint(params.mu.clone())
                } else {
                    ChainInit::Random
                },
            };
            let sizes = finite_sizes(spec, n)?;
            let run = multichain(spec, &cfg, *chains, boxes)?;
            let scale = DVector::from_fn(k, |l, _| (n as f64 * sizes.alpha_n[l]).sqrt());
            let rescaled: Vec<DVector<f64>> = run
                .pooled
                .rows()
                .iter()
                .map(|m| scale.component_mul(&(m - &params.mu)))
                .collect();
            let count = rescaled.len() as f64;
            let mut mean = DVector::zeros(k);
            for y in &rescaled {
                mean += y;
            }
            mean /= count;
            let mut cov = DMatrix::zeros(k, k);
            for y in &rescaled {
                let d = y - &mean;
                cov += &d * d.transpose();
            }
            cov /= count - 1.0;
            let mgf = probes
                .iter()
                .map(|t| {
                    let s: f64 = rescaled.iter().map(|y| t.dot(y).exp()).sum();
                    (s / count).ln()
                })
                .collect();
            (mean, cov, mgf)
        }
    };
    let mean_err: Vec<f64> = (0..k).map(|l| (mean[l] - params.nu[l]).abs()).collect();
    let sigma_scale = params.sigma.amax();
    let cov_rel_err = (&cov - &params.sigma).amax() / sigma_scale;
    let mgf_err = probes
        .iter()
        .zip(&mgf)
        .map(|(t, &actual)| (actual - params.predicted_log_mgf(t)).abs())
        .fold(0.0f64, f64::max);
    let pass = mean_err.iter().all(|&e| e <= tols.mean_abs)
        && cov_rel_err <= tols.cov_rel
        && mgf_err <= tols.mgf_abs;
    Ok(VerifyRow { n, mean_err, cov_rel_err, mgf_err, pass })
}

/// One size's finite-maximizer shift measurement.
#[derive(Debug, Clone)]
pub struct MuShiftRow {
    pub n: usize,
    /// N^θ·(μ_N − μ).
    pub scaled_shift: DVector<f64>,
    /// ‖scaled_shift − predicted‖∞, relative to ‖predicted‖∞ when nonzero.
    pub err: f64,
    /// ‖μ_N − μ − N^(−θ)·predicted‖∞ — the second-order remainder.
    pub residual: f64,
}

/// Report of `mu_shift_check`.
#[derive(Debug, Clone)]
pub struct MuShiftReport {
    pub mu: DVector<f64>,
    /// Predicted shift constant (−H_f(μ))^(−1)·diag(α)·J·diag(μ)·β.
    pub predicted: DVector<f64>,
    pub rows: Vec<MuShiftRow>,
    /// Log-log slope of the residual across sizes (expected ≈ −2θ);
    /// `None` when the prediction is zero or residuals underflow.
    pub slope: Option<f64>,
}

/// Verifies μ_N − μ ≈ N^(−θ)·(−H_f)^(−1)·diag(α)·J·diag(μ)·β by solving the
/// maximization at the target ratios α + N^(−θ)β for each size.
///
/// Target ratios, not rounded integer sizes, isolate the continuum
/// statement from O(1/N) rounding noise.
pub fn mu_shift_check(spec: &ModelSpec, n_list: &[usize]) -> Result<MuShiftReport> {
    if n_list.is_empty() {
        return Err(McwError::Validation("shift check needs at least one size".into()));
    }
    let k = spec.k();
    let fe = FreeEnergy::limiting(spec);
    let base = unique_nondegenerate_maximizer(&fe)?;
    let neg_h = -&base.hessian;
    let chol = Cholesky::new(neg_h).ok_or_else(|| {
        McwError::Degenerate("−H_f(μ) is not positive definite; no shift prediction".into())
    })?;
    let drive = DVector::from_fn(k, |l, _| {
        spec.alpha()[l]
            * (0..k).map(|m| spec.j()[(l, m)] * base.x[m] * spec.beta()[m]).sum::<f64>()
    });
    let predicted = chol.solve(&drive);
    let pred_scale = predicted.amax();
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let ratios = spec.target_ratios(n)?;
        let fe_n = FreeEnergy::with_alpha(spec, &ratios);
        let point = unique_nondegenerate_maximizer(&fe_n).map_err(|e| {
            McwError::Numerical(format!(
                "maximizer structure changed at N = {n} (phase boundary crossed?): {e}"
            ))
        })?;
        let scale = (n as f64).powf(spec.theta());
        let shift = (&point.x - &base.x) * scale;
        let err_abs = (&shift - &predicted).amax();
        let err = if pred_scale > 0.0 { err_abs / pred_scale } else { err_abs };
        let residual = (&point.x - &base.x - &predicted / scale).amax();
        rows.push(MuShiftRow { n, scaled_shift: shift, err, residual });
    }
    let slope = if pred_scale > 0.0
        && rows.len() >= 2
        && rows.iter().all(|r| r.residual > 1e-14)
    {
        let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.residual.ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 =
            xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        Some(sxy / sxx)
    } else {
        None
    };
    Ok(MuShiftReport { mu: base.x.clone(), predicted, rows, slope })
}
