use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty dataset")]
    Empty,
    #[error("class {class} would receive no labeled points")]
    EmptyClass { class: f64 },
    #[error("no ground truth available for {0}")]
    NoTruth(&'static str),
    #[error("cross-validation: {0}")]
    CrossValidation(String),
    #[error("unknown synthetic dataset {0:?}")]
    UnknownSynthetic(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] s3vm_core::S3vmError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
