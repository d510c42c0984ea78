use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid display: {0}")]
    InvalidDisplay(String),

    #[error("invalid inset: {0}")]
    InvalidInset(String),

    #[error("invalid gaze parameters: {0}")]
    InvalidParams(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("trial generation failed: {0}")]
    Generation(String),

    /// The display/protocol combination makes the search task impossible.
    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("incomplete condition grid: {0}")]
    IncompleteGrid(String),

    #[error("oracle refuses {0} objects (limit {1})")]
    TooManyObjects(usize, usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
