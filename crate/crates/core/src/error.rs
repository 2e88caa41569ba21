use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("integration produced a non-finite state at step {index} (t = {time})")]
    Integration { index: usize, time: f64 },

    #[error("cannot lift sample {index}: zero tangent vector")]
    ZeroTangent { index: usize },

    #[error("boxes {from} and {to} are not adjacent; evaluation radius exceeds the comparison grid")]
    EdgeTooLong { from: String, to: String },

    #[error("point {0} does not lie in the comparison space")]
    OutsideSpace(String),

    #[error("evaluation radius {radius} exceeds the space box size {box_size}")]
    RadiusTooLarge { radius: f64, box_size: f64 },

    #[error("segment length {length} exceeds series length {available}")]
    SegmentTooLong { length: usize, available: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("stage {stage} failed: {source}")]
    Stage { stage: String, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
