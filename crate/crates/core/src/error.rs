use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    DimensionMismatch { expected: usize, found: usize },
    NotPositiveDefinite,
    NonSymmetric,
    NoConvergence,
    Singular,
    NegativeQuadraticForm,
    NonPositiveCurvature,
    BracketInvalid,
    MaxIters,
    EmptyBatch,
    NonFiniteGradient,
    SingularHessian,
    NotConjugate,
    NotSpd,
    InvalidSpec(&'static str),
}

impl Error {
    /// True for failures that come from the numbers rather than the inputs' shape.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite
                | Error::Singular
                | Error::SingularHessian
                | Error::NotSpd
                | Error::NegativeQuadraticForm
                | Error::NonPositiveCurvature
                | Error::NoConvergence
                | Error::NonFiniteGradient
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NotPositiveDefinite => f.write_str("matrix is not positive definite"),
            Error::NonSymmetric => f.write_str("matrix is not symmetric"),
            Error::NoConvergence => f.write_str("eigensolver did not converge"),
            Error::Singular => f.write_str("matrix is singular"),
            Error::NegativeQuadraticForm => f.write_str("quadratic form is negative"),
            Error::NonPositiveCurvature => f.write_str("non-positive curvature along direction"),
            Error::BracketInvalid => f.write_str("derivative signs do not bracket a minimum"),
            Error::MaxIters => f.write_str("iteration limit reached"),
            Error::EmptyBatch => f.write_str("empty mini-batch"),
            Error::NonFiniteGradient => f.write_str("gradient has non-finite entries"),
            Error::SingularHessian => f.write_str("hessian system is singular"),
            Error::NotConjugate => f.write_str("directions are not conjugate"),
            Error::NotSpd => f.write_str("matrix is not symmetric positive definite"),
            Error::InvalidSpec(why) => write!(f, "invalid specification: {why}"),
        }
    }
}

impl core::error::Error for Error {}
