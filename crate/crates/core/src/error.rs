use thiserror::Error;

/// Failures reported by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("no sign change on bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("bracket failure: {0}")]
    Bracket(String),
    #[error("iteration cap of {cap} reached in {what}")]
    IterationCap { what: String, cap: usize },
    #[error("eigensolver did not converge for matrix `{label}`")]
    EigenConvergence { label: String },
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("lattice-sum truncation: tail bound {bound:e} exceeds tolerance {tol:e}")]
    Truncation { bound: f64, tol: f64 },
    #[error("wells overlap: {0}")]
    Overlap(String),
    #[error("profile is not smooth enough: {0}")]
    NotSmooth(String),
    #[error("singular point: {0}")]
    SingularPoint(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
