use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample rate {sample_rate} Hz cannot represent {frequency} Hz (Nyquist violation)")]
    RateViolation { frequency: f64, sample_rate: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fft length {fft_length} exceeds buffer length {available}")]
    FftTooLong { fft_length: usize, available: usize },

    #[error("harmonic at {frequency} Hz lies outside the analyzed range 0..={limit} Hz")]
    HarmonicOutOfRange { frequency: f64, limit: f64 },

    #[error("character {0:?} has no Morse code")]
    UnsupportedCharacter(char),

    #[error("modulation stream is empty")]
    EmptyStream,

    #[error("input is empty")]
    EmptyInput,

    #[error("malformed sequence record #{index}: {record:?} ({reason})")]
    MalformedRecord {
        index: usize,
        record: String,
        reason: String,
    },

    #[error("cannot parse pitch {0:?}")]
    BadPitch(String),

    #[error("line {line}: {reason}")]
    Csv { line: usize, reason: String },

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
