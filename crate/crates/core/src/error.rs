use thiserror::Error;

/// Errors produced by the landscape pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {relative_residual:e})")]
    NotConverged {
        iterations: usize,
        relative_residual: f64,
    },

    #[error("landscape is not positive at index {index} (u = {value:e})")]
    NonPositiveLandscape { index: usize, value: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("seed value {value} at index {index} lies above the level {energy}")]
    SeedAboveLevel {
        index: usize,
        value: f64,
        energy: f64,
    },

    #[error("sublevel set {{W <= {level}}} is empty (min W = {min})")]
    EmptySublevelSet { level: f64, min: f64 },

    #[error("requested {requested} items but only {available} are available")]
    Insufficient { requested: usize, available: usize },

    #[error("input is not sorted in nondecreasing order")]
    Unsorted,

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::NonFinite { .. } => "non_finite",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::GridMismatch => "grid_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InvalidPotential(_) => "invalid_potential",
            Error::NotConverged { .. } => "not_converged",
            Error::NonPositiveLandscape { .. } => "non_positive_landscape",
            Error::Empty(_) => "empty",
            Error::SeedAboveLevel { .. } => "seed_above_level",
            Error::EmptySublevelSet { .. } => "empty_sublevel_set",
            Error::Insufficient { .. } => "insufficient",
            Error::Unsorted => "unsorted",
            Error::Eigensolver(_) => "eigensolver",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
