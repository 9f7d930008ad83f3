use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("ambient dimension {n} not supported: {reason}")]
    UnsupportedDimension { n: usize, reason: &'static str },

    #[error("matrix is not symmetric (max deviation {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not skew-symmetric (max deviation {0:e})")]
    NotSkew(f64),

    #[error("first Bianchi identity violated (residual {0:e})")]
    BianchiViolation(f64),

    #[error("scalar curvature {0} is not 1 within tolerance")]
    NotUnitScalar(f64),

    #[error("scalar curvature {0} is not positive")]
    NonPositiveScalar(f64),

    #[error("operator is zero")]
    ZeroOperator,

    #[error("operator is not an eigenvector of Q (relative defect {0:e})")]
    NotSoliton(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigenvalue iteration did not converge within {0} iterations")]
    EigenNonConvergence(usize),

    #[error("integration aborted at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
