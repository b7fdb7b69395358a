use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("insufficient samples: accepted {accepted} of {requested} after {attempts} attempts (acceptance rate {rate:.4})")]
    InsufficientSamples {
        requested: usize,
        accepted: usize,
        attempts: usize,
        rate: f64,
    },

    #[error("loss undefined: {0}")]
    LossUndefined(String),

    #[error("degenerate affine fit (normalized determinant {0:e})")]
    DegenerateFit(f64),

    #[error("no usable pixels: {0}")]
    NoUsablePixels(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed file: {0}")]
    Malformed(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable short name, used for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::EmptyCloud => "empty_cloud",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::LossUndefined(_) => "loss_undefined",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::NoUsablePixels(_) => "no_usable_pixels",
            Error::Config(_) => "config",
            Error::UnsupportedFormat(_) => "unsupported_format",
            Error::Malformed(_) => "malformed",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
