//! Crate-wide error type with a stable split between *validation* failures
//! (bad input: malformed model files, out-of-range arguments, misuse of a
//! grid) and *numerical* failures (degenerate Hessians, non-mixing chains,
//! saddle searches that come up empty). The CLI maps the former to exit
//! code 1 and the latter to exit code 2.

use thiserror::Error;

use crate::variational::SaddleCandidate;

#[derive(Debug, Error)]
pub enum McwError {
    /// Malformed or inconsistent input (model file, CLI argument, box, grid).
    #[error("{0}")]
    Validation(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("{0}")]
    Domain(String),

    /// A computation that is well-posed in exact arithmetic failed
    /// numerically (singular solve, eigensolver breakdown, non-convergence).
    #[error("{0}")]
    Numerical(String),

    /// Exact enumeration would exceed the configured cell budget.
    #[error("sector enumeration needs {cells} cells but the budget is {budget}; use the Monte Carlo sampler at this size")]
    Budget { cells: u128, budget: u128 },

    /// A maximizer requirement failed because the Hessian is (near-)singular.
    #[error("degenerate maximizer: {0}")]
    Degenerate(String),

    /// The inf-sup search found stationary points but none with admissible
    /// inertia; all located candidates are carried for diagnosis.
    #[error("no stationary point with inf-sup inertia found among {} candidates", .candidates.len())]
    NoSaddle { candidates: Vec<SaddleCandidate> },

    /// Between-chain disagreement: pooling refused.
    #[error("chains failed to mix: max split-Rhat {max_rhat:.4} exceeds {threshold}")]
    Mixing {
        max_rhat: f64,
        threshold: f64,
        /// Per-component split-Rhat values.
        rhats: Vec<f64>,
    },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl McwError {
    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            McwError::Validation(_)
            | McwError::Domain(_)
            | McwError::Budget { .. }
            | McwError::Io(_)
            | McwError::Json(_) => 1,
            McwError::Numerical(_)
            | McwError::Degenerate(_)
            | McwError::NoSaddle { .. }
            | McwError::Mixing { .. } => 2,
        }
    }

    /// Short machine-parsable category tag for the one-line error stream.
    pub fn category(&self) -> &'static str {
        match self {
            McwError::Validation(_) => "validation",
            McwError::Domain(_) => "domain",
            McwError::Numerical(_) => "numerical",
            McwError::Budget { .. } => "budget",
            McwError::Degenerate(_) => "degenerate",
            McwError::NoSaddle { .. } => "no-saddle",
            McwError::Mixing { .. } => "mixing",
            McwError::Io(_) => "io",
            McwError::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, McwError>;
