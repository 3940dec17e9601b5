use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} needs {actual} but the cap is {cap}")]
    ResourceLimit {
        what: &'static str,
        actual: usize,
        cap: usize,
    },

    #[error("fingerprint mismatch: {0}")]
    FingerprintMismatch(&'static str),

    /// The successive-cancellation pass reached a state of zero likelihood.
    /// With a valid payload this means an earlier prediction was wrong.
    #[error("impossible observation at column {column}")]
    ImpossibleObservation { column: usize },

    #[error("payload exhausted after {consumed} bits")]
    PayloadExhausted { consumed: usize },

    #[error("payload has {actual} bits, expected {expected}")]
    PayloadLength { expected: usize, actual: usize },

    #[error("malformed {kind} data: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error(
        "Monte-Carlo resolution too coarse: {ambiguous} positions straddle the threshold \
         {threshold:e} with standard error up to {worst_stderr:e}"
    )]
    InsufficientSamples {
        ambiguous: usize,
        worst_stderr: f64,
        threshold: f64,
    },

    #[error("no payload for user {0}")]
    MissingUser(usize),

    #[error("more than one payload for user {0}")]
    DuplicateUser(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn format(kind: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            kind,
            reason: reason.into(),
        }
    }
}
