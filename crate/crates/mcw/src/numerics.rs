//! Controlled numerical primitives: multidimensional Riemann sums with a
//! rigorous error bound, and the leading-order multivariate Laplace
//! approximation.
//!
//! The Riemann bound is
//!
//! ```text
//! |∫_Q g − Σ_cells g(tag)·Πε_i| ≤ K·n^(K−1)·max_i(b_i−a_i)·sup_Q‖∇g‖·Π_i ε_i
//! ```
//!
//! with n the per-dimension subdivision count (the maximum, for anisotropic
//! grids) — valid for any tag point inside each cell, which is why the
//! reported bound does not depend on the tag choice.
//!
//! The Laplace approximation returns the leading term
//! g(μ)·e^{N f(μ)}·√((2π)^K / (N^K det(−H))) for an interior nondegenerate
//! maximizer; callers that need per-coordinate scalings pass them through
//! [`gaussian_log_norm`] directly.

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{McwError, Result};

/// Cells per parallel evaluation chunk; chunk partials are reduced in index
/// order so the result is independent of thread scheduling.
const CHUNK: usize = 8_192;
/// Cap on the number of cells probed when sampling a gradient bound.
const GRAD_SAMPLE_CAP: usize = 2_048;

/// Axis-aligned box partitioned into uniform cells per dimension.
#[derive(Debug, Clone)]
pub struct BoxGrid {
    intervals: Vec<(f64, f64)>,
    cells: Vec<usize>,
}

impl BoxGrid {
    pub fn new(intervals: Vec<(f64, f64)>, cells: Vec<usize>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(McwError::Validation("grid needs at least one dimension".into()));
        }
        if intervals.len() != cells.len() {
            return Err(McwError::Validation(format!(
                "{} intervals vs {} cell counts",
                intervals.len(),
                cells.len()
            )));
        }
        for &(a, b) in &intervals {
            if !a.is_finite() || !b.is_finite() || a >= b {
                return Err(McwError::Validation(format!("invalid interval [{a}, {b}]")));
            }
        }
        if cells.contains(&0) {
            return Err(McwError::Validation("cell counts must be ≥ 1".into()));
        }
        Ok(BoxGrid { intervals, cells })
    }

    /// Same subdivision count along every dimension.
    pub fn uniform(intervals: Vec<(f64, f64)>, n: usize) -> Result<Self> {
        let cells = vec![n; intervals.len()];
        BoxGrid::new(intervals, cells)
    }

    pub fn k(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// Mesh sizes ε_i = (b_i − a_i)/n_i.
    pub fn mesh(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .zip(&self.cells)
            .map(|(&(a, b), &n)| (b - a) / n as f64)
            .collect()
    }

    /// Total cell count (u128: K counts multiply quickly).
    pub fn cell_count(&self) -> u128 {
        self.cells.iter().map(|&n| n as u128).product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.mesh().iter().product()
    }

    /// Tag coordinate of the flat-indexed cell (row-major, first dimension
    /// slowest).
    fn tag_point(&self, flat: u128, tag: TagPoint, mesh: &[f64]) -> Vec<f64> {
        let k = self.k();
        let mut x = vec![0.0; k];
        let mut rem = flat;
        for d in (0..k).rev() {
            let n = self.cells[d] as u128;
            let j = (rem % n) as f64;
            rem /= n;
            let lower = self.intervals[d].0 + j * mesh[d];
            x[d] = match tag {
                TagPoint::LowerCorner => lower,
                TagPoint::Midpoint => lower + 0.5 * mesh[d],
            };
        }
        x
    }
}

/// Where inside each cell the integrand is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagPoint {
    /// Grid-vertex evaluation: the choice the error bound is stated for.
    LowerCorner,
    /// Practical default with a smaller effective constant.
    Midpoint,
}

/// Supremum of ‖∇g‖ over the box: caller-provided, or estimated by central
/// finite differences (step ε_i/4) at a deterministic stride of cell
/// midpoints.
#[derive(Debug, Clone, Copy)]
pub enum GradBound {
    Analytic(f64),
    Sampled,
}

#[derive(Debug, Clone)]
pub struct RiemannResult {
    pub sum: f64,
    /// Rigorous bound K·n^(K−1)·max(b−a)·G·Πε with G the gradient sup used.
    pub error_bound: f64,
    /// The gradient sup that entered the bound.
    pub grad_bound: f64,
    /// True when the gradient sup was caller-provided rather than sampled.
    pub analytic_grad_bound: bool,
}

pub(crate) fn kahan_add(sum: &mut f64, comp: &mut f64, term: f64) {
    let y = term - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

/// Riemann sum of `g` over the grid with the rigorous error bound.
///
/// Cells are evaluated in parallel chunks and the chunk partials are folded
/// in index order, so the value is bit-stable across thread counts.
pub fn riemann_sum<G>(g: &G, grid: &BoxGrid, tag: TagPoint, grad: GradBound) -> RiemannResult
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let mesh = grid.mesh();
    let volume: f64 = mesh.iter().product();
    let total = grid.cell_count();
    assert!(total <= usize::MAX as u128, "cell count exceeds addressable range");
    let total = total as usize;

    let chunk_sums: Vec<f64> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(total);
            let (mut s, mut comp) = (0.0, 0.0);
            for flat in lo..hi {
                let x = grid.tag_point(flat as u128, tag, &mesh);
                kahan_add(&mut s, &mut comp, g(&x));
            }
            s
        })
        .collect();
    let (mut sum, mut comp) = (0.0, 0.0);
    for s in chunk_sums {
        kahan_add(&mut sum, &mut comp, s);
    }
    sum *= volume;

    let (grad_bound, analytic) = match grad {
        GradBound::Analytic(b) => (b, true),
        GradBound::Sampled => (sample_grad_sup(g, grid, &mesh), false),
    };

    let k = grid.k() as f64;
    let n_max = *grid.cells().iter().max().expect("nonempty") as f64;
    let widest = grid
        .intervals()
        .iter()
        .map(|&(a, b)| b - a)
        .fold(f64::NEG_INFINITY, f64::max);
    let error_bound = k * n_max.powi(grid.k() as i32 - 1) * widest * grad_bound * volume;

    RiemannResult { sum, error_bound, grad_bound, analytic_grad_bound: analytic }
}

/// Max finite-difference gradient norm over a stride of cell midpoints.
fn sample_grad_sup<G>(g: &G, grid: &BoxGrid, mesh: &[f64]) -> f64
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let total = grid.cell_count() as usize;
    let stride = total.div_ceil(GRAD_SAMPLE_CAP).max(1);
    let samples: Vec<usize> = (0..total).step_by(stride).collect();
    samples
        .par_iter()
        .map(|&flat| {
            let x = grid.tag_point(flat as u128, TagPoint::Midpoint, mesh);
            let mut norm2 = 0.0;
            for d in 0..grid.k() {
                let h = 0.25 * mesh[d];
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[d] += h;
                xm[d] -= h;
                let der = (g(&xp) - g(&xm)) / (2.0 * h);
                norm2 += der * der;
            }
            norm2.sqrt()
        })
        .reduce(|| 0.0, f64::max)
}

/// log √((2π)^K / (Π_i scales_i · det A)) for symmetric positive definite A,
/// via Cholesky. The shared core of the Laplace prefactor: `exact` composes
/// the per-species weighting by passing the species sizes as scales.
pub fn gaussian_log_norm(scales: &[f64], a: &DMatrix<f64>) -> Result<f64> {
    if scales.len() != a.nrows() || a.nrows() != a.ncols() {
        return Err(McwError::Validation(format!(
            "{} scales vs {}×{} matrix",
            scales.len(),
            a.nrows(),
            a.ncols()
        )));
    }
    if scales.iter().any(|&s| !s.is_finite() || s <= 0.0) {
        return Err(McwError::Validation("scales must be positive and finite".into()));
    }
    let chol = Cholesky::new(a.clone()).ok_or_else(|| {
        McwError::Numerical("matrix in Gaussian normalization is not positive definite".into())
    })?;
    let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let k = scales.len() as f64;
    let log_scales: f64 = scales.iter().map(|s| s.ln()).sum();
    Ok(0.5 * (k * (2.0 * std::f64::consts::PI).ln() - log_scales - log_det))
}

#[derive(Debug, Clone)]
pub struct LaplaceResult {
    pub value: f64,
    pub log_value: f64,
}

/// Leading-order Laplace approximation of ∫_box g(x)·e^{n·f(x)} dx around an
/// interior maximizer `mu` with Hessian `hess` ≺ 0:
/// g(μ)·exp(n·f(μ))·√((2π)^K / (n^K·det(−H))). The relative error is
/// O(n^(−1/2+δ)); only the leading term is computed.
pub fn laplace_integral<F, G>(
    f: &F,
    mu: &DVector<f64>,
    hess: &DMatrix<f64>,
    g: &G,
    n: f64,
    grid: &BoxGrid,
) -> Result<LaplaceResult>
where
    F: Fn(&DVector<f64>) -> f64,
    G: Fn(&DVector<f64>) -> f64,
{
    let k = grid.k();
    if mu.len() != k || hess.nrows() != k || hess.ncols() != k {
        return Err(McwError::Validation("dimension mismatch in Laplace approximation".into()));
    }
    if !n.is_finite() || n <= 0.0 {
        return Err(McwError::Validation(format!(
            "Laplace scale n = {n} must be positive and finite"
        )));
    }
    for (d, &(a, b)) in grid.intervals().iter().enumerate() {
        if !(a < mu[d] && mu[d] < b) {
            return Err(McwError::Validation(format!(
                "maximizer component {} = {} not interior to [{a}, {b}]",
                d, mu[d]
            )));
        }
    }
    let scales = vec![n; k];
    let log_norm = gaussian_log_norm(&scales, &(-hess))?;
    let g_mu = g(mu);
    let log_value = n * f(mu) + log_norm;
    Ok(LaplaceResult { value: g_mu * log_value.exp(), log_value: log_value + g_mu.abs().ln() })
}
