use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the fitting and analysis routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("argument {0} lies outside the validity radius of the J0 series")]
    Domain(Complex64),
    #[error("sample point {0} is a pole of the oracle (|J0| = {1:e})")]
    Pole(Complex64, f64),
    #[error("conjugate closure cannot be preserved: {0}")]
    Symmetry(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cannot partition data: {0}")]
    PartitionImpossible(String),
    #[error("left point {mu} coincides with right point {lambda}")]
    CoincidentPoints { mu: Complex64, lambda: Complex64 },
    #[error("Loewner pencil has rank zero")]
    RankZero,
    #[error("E has condition number {cond:e}; choose an order below {order}")]
    IllConditioned { cond: f64, order: usize },
    #[error("s = {0} is a pole of the model")]
    SingularAt(Complex64),
    #[error("matrix pencil is singular")]
    SingularPencil,
    #[error("{0} failed to converge")]
    NoConvergence(&'static str),
    #[error("projected Loewner matrix is singular; truncation order too high")]
    SingularProjection,
    #[error("projected Sylvester residual {0:e} exceeds tolerance")]
    SylvesterResidual(f64),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("AAA stagnated at order {0} before reaching the tolerance")]
    Stagnation(usize),
    #[error("vector fitting diverged: pole magnitude {0:e}")]
    Divergence(f64),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Pole(..) => "pole",
            Error::Symmetry(_) => "symmetry",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::PartitionImpossible(_) => "partition_impossible",
            Error::CoincidentPoints { .. } => "coincident_points",
            Error::RankZero => "rank_zero",
            Error::IllConditioned { .. } => "ill_conditioned",
            Error::SingularAt(_) => "singular_at",
            Error::SingularPencil => "singular_pencil",
            Error::NoConvergence(_) => "no_convergence",
            Error::SingularProjection => "singular_projection",
            Error::SylvesterResidual(_) => "sylvester_residual",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Stagnation(_) => "stagnation",
            Error::Divergence(_) => "divergence",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
