use crate::dataset::Parameter;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input shape mismatch: expected length {expected}, got {got}")]
    InputShape { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("csv error at line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("degenerate normalization stats for {parameter}: min {min} must be < max {max}")]
    DegenerateStats {
        parameter: Parameter,
        min: f64,
        max: f64,
    },

    #[error("normalization stats mismatch between model and data")]
    StatsMismatch,

    #[error("training diverged (non-finite loss) at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },

    #[error("non-finite gradient encountered at step {step}")]
    NonFiniteGradient { step: u64 },

    #[error("coupled model has no calibrated hop error; run calibration first")]
    MissingCalibration,

    #[error("empty validation set")]
    EmptyValidation,

    #[error("every candidate in the grid diverged")]
    AllCandidatesDiverged,

    #[error("unsupported model format version {0}")]
    FormatVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
