use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("ambiguous tracker layout: {0}")]
    AmbiguousLayout(String),

    #[error("invalid snapshot: {0}")]
    InvalidSnapshot(String),

    #[error("accumulator already converged")]
    AlreadyConverged,

    #[error("calibration did not converge: {0}")]
    CalibrationTimeout(String),

    #[error("insufficient head motion: max cell displacement {max_displacement:.4} m")]
    InsufficientMotion { max_displacement: f64 },

    #[error("implausible measurement: {0}")]
    ImplausibleMeasurement(String),

    #[error("non-positive chain: {0}")]
    NonPositiveChain(String),

    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),

    #[error("pole hint is collinear with the limb axis")]
    DegeneratePole,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn parse(file: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.to_string(),
            line,
            msg: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
