use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// Classical noise is zero, so the quantum-to-classical ratio diverges.
    #[error("QCNR is infinite: classical noise sigma_e is zero")]
    InfiniteQcnr,

    #[error(
        "entropy budget exhausted: {samples} samples x {h_min} bits leaves {budget:.3} bits \
         after the {penalty:.1}-bit security penalty (deficit {deficit:.3} bits)"
    )]
    EntropyBudget {
        samples: usize,
        h_min: f64,
        penalty: f64,
        budget: f64,
        deficit: f64,
    },

    #[error("seed length mismatch: expected {expected} bits, got {got}")]
    SeedLength { expected: usize, got: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("input of {got} samples is shorter than the {taps}-tap filter")]
    InputTooShort { got: usize, taps: usize },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient data: need {required} bits, got {got}")]
    InsufficientData { required: usize, got: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("malformed file at byte offset {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

impl Error {
    /// Process exit status: 4 for I/O and file-format problems, 2 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Io(_) | Error::Format { .. } => 4,
            _ => 2,
        }
    }
}
