use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("grid too coarse: {interior} interior points per axis (need at least 2)")]
    GridTooCoarse { interior: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shift {shift} is within the pivot threshold of an eigenvalue (pivot {pivot:e})")]
    NearSingularShift { shift: f64, pivot: f64 },
    #[error("factorization failed: {0}")]
    FactorizationFailure(String),
    #[error("eigensolver failed: {0}")]
    EigensolveFailure(String),
    #[error("sampling box is empty: support of V does not meet the domain")]
    EmptySamplingBox,
    #[error("window [{lo}, {hi}) is not covered by the step curve [{min}, {max}]")]
    OutsideCoverage { lo: f64, hi: f64, min: f64, max: f64 },
}

impl Error {
    /// Failures of the linear algebra, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NearSingularShift { .. } | Error::FactorizationFailure(_) | Error::EigensolveFailure(_)
        )
    }
}
