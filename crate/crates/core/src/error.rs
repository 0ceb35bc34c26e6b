use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The chain-to-scattering denominator vanished.
    #[error("degenerate network: {0}")]
    DegenerateNetwork(String),

    /// A query outside its admissible interval: a steering angle beyond the
    /// reachable range, or a frequency outside a configured band.
    #[error("{target} outside admissible interval [{lo}, {hi}]")]
    OutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("{path}:{line}: {key}: {message}")]
    Config {
        path: String,
        line: usize,
        key: String,
        message: String,
    },

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// I/O error with the offending path prefixed to its message.
    pub(crate) fn io_at(path: &std::path::Path, e: std::io::Error) -> Self {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    }
}
