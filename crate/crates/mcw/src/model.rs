//! Model definition for a K-species mean-field spin system with
//! block-constant couplings of arbitrary signature.
//!
//! A model is (J, h, ρ, α, β, θ): a symmetric K×K coupling matrix J, external
//! fields h, a single-site prior ρ supported in [−1, 1], limiting species
//! fractions α (positive, summing to 1), and a size perturbation
//! α_N = α + N^{−θ}·β describing how the finite-N fractions approach α.
//!
//! Everything downstream is phrased through two derived objects:
//! the effective interaction Δ = diag(α)·J·diag(α) and the effective field
//! h̃ = α∘h. The per-configuration energy density only sees the species
//! magnetization vector m:
//!
//! ```text
//! −H_N(σ)/N = ½·(m, Δ_N m) + (h̃_N, m)
//! ```
//!
//! with Δ_N, h̃_N built from the realized fractions N_p/N (self-pairs i = j
//! are included in the double sum, which is what makes the identity exact at
//! finite N).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Deserialize;

use crate::error::{McwError, Result};

/// Tolerated asymmetry in J before the model is rejected.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Tolerated deviation of Σα_p (and prior weights) from 1.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Default band around 0 inside which Δ-eigenvalues are treated as zero.
pub const ZERO_EIG_TOL: f64 = 1e-10;

/// Single-site prior distribution, supported in [−1, 1].
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PriorSpec {
    /// Symmetric two-point prior on {−1, +1}.
    Ising,
    /// Finite list of (value, weight) atoms.
    Atoms { points: Vec<(f64, f64)> },
    /// Quadrature discretization of a density: nodes with weights.
    Quadrature { nodes: Vec<f64>, weights: Vec<f64> },
}

impl PriorSpec {
    /// Support/weight validation: every atom in [−1, 1], weights positive and
    /// summing to 1 within [`NORMALIZATION_TOL`].
    pub fn validate(&self) -> Result<()> {
        let check = |pairs: &mut dyn Iterator<Item = (f64, f64)>| -> Result<()> {
            let mut total = 0.0;
            let mut any = false;
            for (v, w) in pairs {
                any = true;
                if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
                    return Err(McwError::Validation(format!(
                        "prior support point {v} outside [-1, 1]"
                    )));
                }
                if !w.is_finite() || w <= 0.0 {
                    return Err(McwError::Validation(format!(
                        "prior weight {w} must be positive"
                    )));
                }
                total += w;
            }
            if !any {
                return Err(McwError::Validation("prior has no support points".into()));
            }
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(McwError::Validation(format!(
                    "prior weights sum to {total}, expected 1 within {NORMALIZATION_TOL:e}"
                )));
            }
            Ok(())
        };
        match self {
            PriorSpec::Ising => Ok(()),
            PriorSpec::Atoms { points } => check(&mut points.iter().copied()),
            PriorSpec::Quadrature { nodes, weights } => {
                if nodes.len() != weights.len() {
                    return Err(McwError::Validation(format!(
                        "quadrature has {} nodes but {} weights",
                        nodes.len(),
                        weights.len()
                    )));
                }
                check(&mut nodes.iter().copied().zip(weights.iter().copied()))
            }
        }
    }

    pub fn is_ising(&self) -> bool {
        matches!(self, PriorSpec::Ising)
    }
}

/// Validated model. Construct through [`ModelSpec::new`] (or the JSON
/// loaders); fields are read-only thereafter.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    k: usize,
    j: DMatrix<f64>,
    h: DVector<f64>,
    prior: PriorSpec,
    alpha: DVector<f64>,
    beta: DVector<f64>,
    theta: f64,
}

impl ModelSpec {
    /// Validates and symmetrizes the inputs.
    ///
    /// J is replaced by (J + Jᵀ)/2 and rejected if any entry moves by more
    /// than [`SYMMETRY_TOL`]; α must be strictly positive and sum to 1 within
    /// [`NORMALIZATION_TOL`]; θ must lie in [1/2, ∞).
    pub fn new(
        j: DMatrix<f64>,
        h: DVector<f64>,
        prior: PriorSpec,
        alpha: DVector<f64>,
        beta: DVector<f64>,
        theta: f64,
    ) -> Result<Self> {
        let k = alpha.len();
        if k == 0 {
            return Err(McwError::Validation("model needs at least one species".into()));
        }
        if j.nrows() != k || j.ncols() != k {
            return Err(McwError::Validation(format!(
                "J is {}x{}, expected {k}x{k}",
                j.nrows(),
                j.ncols()
            )));
        }
        if h.len() != k || beta.len() != k {
            return Err(McwError::Validation(format!(
                "h has {} entries and beta {}, expected {k}",
                h.len(),
                beta.len()
            )));
        }
        if j.iter().any(|v| !v.is_finite()) {
            return Err(McwError::Validation("J has non-finite entries".into()));
        }
        if h.iter().chain(alpha.iter()).chain(beta.iter()).any(|v| !v.is_finite()) {
            return Err(McwError::Validation("h/alpha/beta have non-finite entries".into()));
        }
        let sym = (&j + j.transpose()) * 0.5;
        let asym = (&j - &sym).abs().max();
        if asym > SYMMETRY_TOL {
            return Err(McwError::Validation(format!(
                "J asymmetry {asym:e} exceeds {SYMMETRY_TOL:e}"
            )));
        }
        if alpha.iter().any(|&a| a <= 0.0) {
            return Err(McwError::Validation("alpha entries must be positive".into()));
        }
        let alpha_sum: f64 = alpha.iter().sum();
        if (alpha_sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(McwError::Validation(format!(
                "alpha sums to {alpha_sum}, expected 1 within {NORMALIZATION_TOL:e}"
            )));
        }
        if !theta.is_finite() || theta < 0.5 {
            return Err(McwError::Validation(format!(
                "theta = {theta} outside [1/2, inf)"
            )));
        }
        prior.validate()?;
        Ok(ModelSpec { k, j: sym, h, prior, alpha, beta, theta })
    }

    /// Ising model with no size perturbation (β = 0, θ = 1/2).
    pub fn ising(j: DMatrix<f64>, h: DVector<f64>, alpha: DVector<f64>) -> Result<Self> {
        let k = alpha.len();
        Self::new(j, h, PriorSpec::Ising, alpha, DVector::zeros(k), 0.5)
    }

    pub fn k(&self) -> usize {
        self.k
    }
    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }
    pub fn h(&self) -> &DVector<f64> {
        &self.h
    }
    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }
    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Target species ratios r_p = α_p + N^{−θ}·β_p at size `n`.
    ///
    /// Errors if the perturbation drives any ratio to ≤ 0.
    pub fn target_ratios(&self, n: usize) -> Result<DVector<f64>> {
        let scale = (n as f64).powf(-self.theta);
        let r = &self.alpha + &self.beta * scale;
        if r.iter().any(|&v| v <= 0.0) {
            return Err(McwError::Validation(format!(
                "perturbation too large for N = {n}: nonpositive target ratio"
            )));
        }
        Ok(r)
    }

    /// Effective interaction and field for the limiting fractions:
    /// Δ = diag(α)·J·diag(α), h̃ = α∘h.
    pub fn build_delta(&self) -> (DMatrix<f64>, DVector<f64>) {
        (delta_with(&self.j, &self.alpha), self.alpha.component_mul(&self.h))
    }
}

/// Δ for an arbitrary fraction vector: diag(a)·J·diag(a).
pub fn delta_with(j: &DMatrix<f64>, a: &DVector<f64>) -> DMatrix<f64> {
    let k = a.len();
    DMatrix::from_fn(k, k, |r, c| a[r] * j[(r, c)] * a[c])
}

/// Spectral decomposition of Δ split into PSD and NSD parts.
///
/// Eigenvalues are sorted ascending; `a` counts those ≤ `zero_tol` (the
/// inf-block of the limiting inf-sup). Eigenvalues within `zero_tol` of 0
/// are zeroed in both parts, so Δ₊ + Δ₋ reconstructs Δ up to that band.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub delta: DMatrix<f64>,
    /// Ascending eigenvalues of Δ (as computed, before zeroing).
    pub eigenvalues: DVector<f64>,
    /// Number of nonpositive eigenvalues (λ ≤ zero_tol).
    pub a: usize,
    /// Orthogonal eigenbasis; column i pairs with `eigenvalues[i]`.
    pub basis: DMatrix<f64>,
    pub delta_plus: DMatrix<f64>,
    pub delta_minus: DMatrix<f64>,
    pub zero_tol: f64,
}

impl SpectralSplit {
    /// Indices whose eigenvalue is nonzero beyond the tolerance band;
    /// p_var is exactly constant along the complementary (kernel) directions.
    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.eigenvalues.len())
            .filter(|&i| self.eigenvalues[i].abs() > self.zero_tol)
            .collect()
    }
}

/// Symmetric eigendecomposition of Δ with the signed split.
pub fn spectral_split(delta: &DMatrix<f64>, zero_tol: f64) -> Result<SpectralSplit> {
    let k = delta.nrows();
    if delta.ncols() != k {
        return Err(McwError::Validation("delta must be square".into()));
    }
    let eig = SymmetricEigen::new(delta.clone());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("non-finite eigenvalue")
    });
    let eigenvalues = DVector::from_fn(k, |i, _| eig.eigenvalues[order[i]]);
    let basis = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
    let a = eigenvalues.iter().filter(|&&l| l <= zero_tol).count();
    let clipped = |l: f64, keep_negative: bool| -> f64 {
        if l.abs() <= zero_tol {
            0.0
        } else if keep_negative {
            l.min(0.0)
        } else {
            l.max(0.0)
        }
    };
    let rebuild = |keep_negative: bool| -> DMatrix<f64> {
        let lam = DMatrix::from_diagonal(&DVector::from_fn(k, |i, _| {
            let in_block = if keep_negative { i < a } else { i >= a };
            if in_block {
                clipped(eigenvalues[i], keep_negative)
            } else {
                0.0
            }
        }));
        &basis * lam * basis.transpose()
    };
    let delta_plus = rebuild(false);
    let delta_minus = rebuild(true);
    Ok(SpectralSplit {
        delta: delta.clone(),
        eigenvalues,
        a,
        basis,
        delta_plus,
        delta_minus,
        zero_tol,
    })
}

/// Integer species sizes at total size N, apportioned to the target ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSizes {
    pub n: usize,
    pub sizes: Vec<usize>,
    /// Realized fractions N_p/N.
    pub alpha_n: DVector<f64>,
    /// Target ratios α + N^{−θ}β the apportionment aimed at.
    pub target: DVector<f64>,
}

/// Largest-remainder apportionment of N sites to the target ratios, with
/// every species guaranteed at least one site.
pub fn finite_sizes(spec: &ModelSpec, n: usize) -> Result<FiniteSizes> {
    let k = spec.k();
    if n < k {
        return Err(McwError::Validation(format!(
            "N = {n} too small for {k} species (each needs at least one site)"
        )));
    }
    let target = spec.target_ratios(n)?;
    let total: f64 = target.iter().sum();
    // Quotas proportional to the targets. For Σ-consistent targets this is
    // the classic largest-remainder scheme with |N_p − N·r_p| < 1.
    let quota: Vec<f64> = target.iter().map(|r| n as f64 * r / total).collect();
    let mut sizes: Vec<usize> = quota.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut remainder: Vec<(usize, f64)> = quota
        .iter()
        .enumerate()
        .map(|(p, q)| (p, q - q.floor()))
        .collect();
    // Ties broken by species index for determinism.
    remainder.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
    for &(p, _) in remainder.iter().take(n.saturating_sub(assigned)) {
        sizes[p] += 1;
    }
    // Guarantee N_p ≥ 1 by taking from the largest species.
    while sizes.contains(&0) {
        let zero = sizes.iter().position(|&s| s == 0).unwrap();
        let largest = (0..k).max_by_key(|&p| sizes[p]).unwrap();
        if sizes[largest] <= 1 {
            return Err(McwError::Validation(format!(
                "cannot give every species a site at N = {n}"
            )));
        }
        sizes[largest] -= 1;
        sizes[zero] += 1;
    }
    debug_assert_eq!(sizes.iter().sum::<usize>(), n);
    let alpha_n = DVector::from_fn(k, |p, _| sizes[p] as f64 / n as f64);
    Ok(FiniteSizes { n, sizes, alpha_n, target })
}

/// Species populations realizing the target ratios against the normalizer
/// N by per-species rounding: N_p = round(N·r_p), each at least 1.
///
/// Unlike [`finite_sizes`], the populations are not forced to sum to N —
/// when the perturbation directions do not cancel (Σβ_p ≠ 0, including
/// every K = 1 perturbed model), no exact partition of N realizes the
/// ratios, and rounding against the fixed normalizer is what keeps the
/// realized fractions N_p/N tracking α + N^(−θ)β in *both* the interaction
/// and the entropy. The realized fractions then drive all downstream
/// formulas exactly as for an exact partition.
pub fn perturbed_sizes(spec: &ModelSpec, n: usize) -> Result<FiniteSizes> {
    let k = spec.k();
    if n < k {
        return Err(McwError::Validation(format!(
            "N = {n} too small for {k} species (each needs at least one site)"
        )));
    }
    let target = spec.target_ratios(n)?;
    let sizes: Vec<usize> = target
        .iter()
        .map(|&r| ((n as f64 * r).round() as usize).max(1))
        .collect();
    let alpha_n = DVector::from_fn(k, |p, _| sizes[p] as f64 / n as f64);
    Ok(FiniteSizes { n, sizes, alpha_n, target })
}

/// Energy density −H_N/N = ½(m, Δ_N m) + (h̃_N, m) at the realized fractions.
pub fn hamiltonian_density(spec: &ModelSpec, sizes: &FiniteSizes, m: &DVector<f64>) -> f64 {
    let delta_n = delta_with(spec.j(), &sizes.alpha_n);
    let h_n = sizes.alpha_n.component_mul(spec.h());
    0.5 * (&delta_n * m).dot(m) + h_n.dot(m)
}

// ---------------------------------------------------------------------------
// JSON model files
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "J")]
    j: Vec<Vec<f64>>,
    h: Vec<f64>,
    prior: PriorSpec,
    alpha: Vec<f64>,
    #[serde(default)]
    beta: Option<Vec<f64>>,
    #[serde(default)]
    theta: Option<f64>,
}

impl ModelSpec {
    /// Parses and validates a JSON model document.
    ///
    /// Expected shape: `{"K": 2, "J": [[..],[..]], "h": [..], "prior":
    /// {"type": "ising"}, "alpha": [..], "beta": [..], "theta": 0.5}` with
    /// `beta` defaulting to the zero vector and `theta` to 1/2.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| McwError::Validation(format!("model json: {e}")))?;
        let k = file.k;
        if file.j.len() != k || file.j.iter().any(|row| row.len() != k) {
            return Err(McwError::Validation(format!("J must be a {k}x{k} row-major array")));
        }
        let flat: Vec<f64> = file.j.iter().flatten().copied().collect();
        let j = DMatrix::from_row_slice(k, k, &flat);
        let beta = file.beta.unwrap_or_else(|| vec![0.0; k]);
        ModelSpec::new(
            j,
            DVector::from_vec(file.h),
            file.prior,
            DVector::from_vec(file.alpha),
            DVector::from_vec(beta),
            file.theta.unwrap_or(0.5),
        )
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }
}
