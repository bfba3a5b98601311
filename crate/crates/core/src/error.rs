//! Error types shared by all modules, with an exhaustive severity
//! classification used by the CLI exit-code mapping.

use thiserror::Error;

/// Coarse classification of an error for process exit codes.
///
/// `Usage` maps to exit 1, `Domain` to exit 2, `Numeric` to exit 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Domain,
    Numeric,
}

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("matrix is not Hermitian: max |A - A†| entry = {max_dev:.3e} exceeds {tol:.1e}")]
    NotHermitian { max_dev: f64, tol: f64 },

    #[error("matrix dimension mismatch: {left} vs {right} in {context}")]
    DimensionMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    #[error(
        "singular matrix: eigenvalue {eigenvalue:.3e} is below the floor {floor:.3e} for {op}"
    )]
    SingularMatrix {
        eigenvalue: f64,
        floor: f64,
        op: &'static str,
    },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:.3e}")]
    NotPsd { eigenvalue: f64 },

    #[error(
        "eigensolver failed to converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})"
    )]
    EigNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("parameter out of domain: {what}")]
    ParameterDomain { what: String },

    #[error("Fock truncation insufficient: tail mass {tail_mass:.3e} exceeds {max:.1e} (increase fock_dim)")]
    TruncationInsufficient { tail_mass: f64, max: f64 },

    #[error("dimension cap exceeded: requested {requested}, cap {cap}")]
    CapacityExceeded { requested: usize, cap: usize },

    #[error("derivative has weight {weight:.3e} outside the state support; SLD undefined")]
    SupportMismatch { weight: f64 },

    #[error("RLD requires a faithful state: smallest eigenvalue {eigenvalue:.3e} below floor {floor:.3e}")]
    SingularState { eigenvalue: f64, floor: f64 },

    #[error(
        "family is not locally identifiable at this point: Fisher eigenvalue {eigenvalue:.3e}"
    )]
    NotIdentifiable { eigenvalue: f64 },

    #[error("zero-probability outcome {outcome} carries score {score:.3e}; information escapes the probability floor")]
    DegenerateOutcome { outcome: usize, score: f64 },

    #[error("POVM cannot support a locally unbiased estimator: classical Fisher eigenvalue {eigenvalue:.3e}")]
    InfeasiblePovm { eigenvalue: f64 },

    #[error(
        "RLD bound oracle did not converge after {iters} iterations; best value so far {best:.12e}"
    )]
    OracleFailure { iters: usize, best: f64 },

    #[error("frontier minimization did not converge: {trace}")]
    FrontierNoConvergence { trace: String },

    #[error("POVM search failed: {reason}")]
    SearchFailure { reason: String },

    #[error("unsupported family kind for this operation: {what}")]
    UnsupportedFamily { what: String },

    #[error("invalid configuration: {what}")]
    InvalidConfig { what: String },
}

impl CoreError {
    /// Every error class maps to exactly one exit-code bucket.
    pub fn class(&self) -> ErrorClass {
        match self {
            CoreError::InvalidConfig { .. } => ErrorClass::Usage,

            CoreError::NotHermitian { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::SingularMatrix { .. }
            | CoreError::NotPsd { .. }
            | CoreError::ParameterDomain { .. }
            | CoreError::TruncationInsufficient { .. }
            | CoreError::CapacityExceeded { .. }
            | CoreError::SupportMismatch { .. }
            | CoreError::SingularState { .. }
            | CoreError::NotIdentifiable { .. }
            | CoreError::UnsupportedFamily { .. } => ErrorClass::Domain,

            CoreError::EigNoConvergence { .. }
            | CoreError::DegenerateOutcome { .. }
            | CoreError::InfeasiblePovm { .. }
            | CoreError::OracleFailure { .. }
            | CoreError::FrontierNoConvergence { .. }
            | CoreError::SearchFailure { .. } => ErrorClass::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
