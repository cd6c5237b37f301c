use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum S3vmError {
    #[error("kernel matrix factorization failed: {0}")]
    Factorization(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("label {0} is not -1 or +1")]
    InvalidLabel(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("gap undefined for upper bound {0}")]
    NonPositiveUpperBound(f64),
    #[error("labeling admits no point satisfying the balancing constraint")]
    LabelingInfeasible,
    #[error("solver failure: {0}")]
    Solver(String),
}

impl From<s3vm_conic::ModelError> for S3vmError {
    fn from(e: s3vm_conic::ModelError) -> Self {
        S3vmError::Solver(e.to_string())
    }
}
