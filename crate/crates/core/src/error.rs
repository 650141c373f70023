use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected SO({expected}), got SO({found})")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid dimension {n}: {reason}")]
    InvalidDimension { n: usize, reason: &'static str },
    #[error("not a rotation matrix: {0}")]
    NotRotation(String),
    #[error("not a unit quaternion: squared norm {0}")]
    NotUnit(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quadrature did not converge after {intervals} subintervals (estimated error {error:e})")]
    QuadratureDiverged { intervals: usize, error: f64 },
    #[error("non-finite distance between points {0} and {1}")]
    NonFiniteDistance(usize, usize),
    #[error("kernel not PSD: Cholesky failed with jitter up to {max_jitter:e}")]
    KernelNotPsd { max_jitter: f64 },
    #[error("no witness found in {trials} trials of {points} points")]
    WitnessNotFound { trials: usize, points: usize },
    #[error("certificate verification failed: {0}")]
    InvalidCertificate(String),
    #[error("eigen decomposition did not converge")]
    EigenFailed,
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
