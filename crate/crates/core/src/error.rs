use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, FinslerError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FinslerError {
    #[error("point outside the domain of {metric}: {detail}")]
    Domain { metric: String, detail: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("derivative of order {requested} requested from a jet of order {available}")]
    Order { requested: usize, available: usize },

    #[error("Levi form not positive-definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotStronglyPseudoconvex {
        min_eigenvalue: f64,
        v: Vec<Complex64>,
    },

    #[error("Levi form is singular")]
    SingularLeviForm,

    #[error("degenerate point: condition number {condition:e} exceeds {limit:e}")]
    Degenerate { condition: f64, limit: f64 },

    #[error("Jacobian disagrees with finite differences (relative error {error:e})")]
    JacobianMismatch { error: f64 },

    #[error("pullback metric vanishes at w = {w}")]
    DegeneratePullback { w: Complex64 },

    #[error("curvature bound not certified: {0}")]
    BoundsNotCertified(String),

    #[error("chart v^{chart} is degenerate at this point")]
    ChartDegenerate { chart: usize },

    #[error("too many rejected fiber samples: {rejected} of {total}")]
    TooManyRejects { rejected: usize, total: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FinslerError {
    fn from(e: std::io::Error) -> Self {
        FinslerError::Io(e.to_string())
    }
}
