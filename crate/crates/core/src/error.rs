use thiserror::Error;

pub type Result<T> = std::result::Result<T, ShapeError>;

#[derive(Debug, Error)]
pub enum ShapeError {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("grid dimensions must be positive, got {height}x{width}")]
    EmptyGrid { height: usize, width: usize },
    #[error("expected {expected} values for the grid, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value at pixel {index}")]
    NonFinite { index: usize },
    #[error("weight must be strictly positive, found {value} at pixel {index}")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("negative value {value} at pixel {index}")]
    NegativeValue { index: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("level list is empty but the field is not constant")]
    EmptyLevels,
    #[error("candidate list is empty")]
    EmptyCandidates,
    #[error("frame list is empty")]
    EmptyFrames,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
