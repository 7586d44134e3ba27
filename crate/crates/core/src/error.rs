//! Crate-wide error type.
//!
//! Variants are grouped by how the command-line front end must report them:
//! configuration/input problems exit with code 2, numerical refusals with
//! code 3 and fit non-convergence with code 4.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VbError {
    /// Invalid physical or run configuration (bad field, bad grid, unknown key).
    #[error("configuration error: {0}")]
    Config(String),

    /// A mathematical precondition was violated (non-Hermitian input,
    /// non-half-integer spin, fidelity out of range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The integrator or solver refused to proceed rather than return an
    /// under-resolved or degenerate answer.
    #[error("numerical refusal: {0}")]
    Numerical(String),

    /// The least-squares engine did not converge. Carries the best point
    /// found so that callers can still report a diagnostic.
    #[error("fit did not converge after {iterations} iterations (cost {best_cost:.6e})")]
    NonConvergence {
        iterations: usize,
        best_cost: f64,
        best_params: Vec<f64>,
    },

    /// The normal equations are singular; `combination` names the parameter
    /// direction that the data cannot determine.
    #[error("rank-deficient fit: unidentifiable combination {combination}")]
    RankDeficient { combination: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, VbError>;

impl VbError {
    /// Stable process exit code for the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            VbError::Config(_) | VbError::Domain(_) | VbError::Io(_) => 2,
            VbError::Numerical(_) | VbError::RankDeficient { .. } => 3,
            VbError::NonConvergence { .. } => 4,
        }
    }
}
