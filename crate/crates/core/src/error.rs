use thiserror::Error;

use crate::sdp::SdpStatus;

/// Errors produced by the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("monomial basis size C({n}+{t}, {n}) exceeds the representable index range")]
    SizeOverflow { n: usize, t: usize },

    #[error("monomial {monomial} has degree above the available bound {bound}")]
    DegreeOverflow { monomial: String, bound: usize },

    #[error("matrix is not positive definite (pivot {index})")]
    NotPositiveDefinite { index: usize },

    #[error("moment matrix singular at degree {degree}")]
    SingularMomentMatrix { degree: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empirical point cloud is empty")]
    EmptyCloud,

    #[error("semidefinite solver stopped with status {status:?} during {stage}")]
    Solver { stage: String, status: SdpStatus },

    #[error("{0}")]
    NotInterior(String),

    #[error("minimizer extraction unstable: {0}")]
    ExtractionUnstable(String),
}

impl Error {
    /// Validation-type errors (bad input) as opposed to numerical breakdowns.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::SizeOverflow { .. }
                | Error::DegreeOverflow { .. }
                | Error::InvalidArgument(_)
                | Error::EmptyCloud
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
