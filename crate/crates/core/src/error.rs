use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("operator is not in S^{{1,1}}: third eigenvalue magnitude {third} exceeds tolerance {tol}")]
    NotInS11 { third: f64, tol: f64 },

    #[error("full-spark check needs {subsets} subsets, budget is {budget}")]
    SparkBudgetExceeded { subsets: u128, budget: u128 },

    #[error("phase misalignment: <x, z0> = {re} + {im}i must be real and positive")]
    PhaseMisaligned { re: f64, im: f64 },

    #[error("projected Fisher information has rank {rank}, expected {expected}")]
    DegenerateFisher { rank: usize, expected: usize },

    #[error("linear system is not positive definite (lambda + mu = {0})")]
    SingularSystem(f64),

    #[error("csv: {0}")]
    Csv(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
