use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("signal too short: {len} samples, frame needs {frame_len}")]
    SignalTooShort { len: usize, frame_len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("factor {alpha} does not divide frame length {len}")]
    NotDivisible { len: usize, alpha: usize },

    #[error("unsupported factor: {0} (only 2 is supported)")]
    UnsupportedFactor(usize),

    #[error("type D bank needs an even filter count, got {0}")]
    OddFilterCount(usize),

    #[error("negative frequency: {0}")]
    NegativeFrequency(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("degenerate vector (zero variance)")]
    DegenerateVector,

    #[error("frequency {freq} Hz is not below the Nyquist frequency {nyquist} Hz")]
    AboveNyquist { freq: f64, nyquist: f64 },

    #[error("malformed WAV header: {0}")]
    MalformedHeader(String),

    #[error("unsupported WAV codec: format tag {0}")]
    UnsupportedCodec(u16),

    #[error("unsupported bit depth: {0} (only 16-bit PCM is supported)")]
    UnsupportedBitDepth(u16),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by reading or writing files.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::MalformedHeader(_)
                | Error::UnsupportedCodec(_)
                | Error::UnsupportedBitDepth(_)
        )
    }
}
