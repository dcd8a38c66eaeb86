use thiserror::Error;

/// Errors raised anywhere in the simulator, the training harness or the data
/// loaders.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cutoff dimension must be at least 2, got {0}")]
    CutoffTooSmall(usize),

    #[error("index {index} out of range for bound {bound}")]
    OutOfRange { index: usize, bound: usize },

    #[error("cutoff mismatch: {left} vs {right}")]
    CutoffMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode {mode} out of range for a {modes}-mode register")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{name} magnitude {value} exceeds the limit {limit}")]
    ParameterTooLarge {
        name: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown gate `{0}`")]
    UnknownGate(String),

    #[error("malformed IDX data: {0}")]
    Idx(String),

    #[error("insufficient samples for class {class}: need {needed}, have {available}")]
    InsufficientSamples {
        class: u8,
        needed: usize,
        available: usize,
    },

    #[error("training diverged at epoch {epoch}: {reason}")]
    Divergence { epoch: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
