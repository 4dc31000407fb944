use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("size mismatch: {left} modes vs {right} modes")]
    SizeMismatch { left: usize, right: usize },

    #[error("grid size {0} must be a positive even integer")]
    InvalidGridSize(usize),

    #[error("power exponent must be at least 1 (got {0})")]
    ZeroPower(u32),

    #[error("map is not a diffeomorphism: min d(gamma)/dx = {min_jacobian:e}")]
    Breakdown { min_jacobian: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("time step {dt:e} exceeds the advective bound; use dt <= {suggested:e}")]
    Cfl { dt: f64, suggested: f64 },

    #[error("harmonic {harmonic} exceeds the dealiasing headroom n_modes/3 = {limit}")]
    Resolution { harmonic: u32, limit: usize },

    #[error(transparent)]
    Parse(#[from] crate::initcond::ParseError),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
