use thiserror::Error;

pub type Result<T> = std::result::Result<T, WishartError>;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WishartError {
    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e} below -{bound:e}")]
    NotPsd { min_eigenvalue: f64, bound: f64 },

    #[error("matrix is not symmetric: max asymmetry {asymmetry:e}")]
    NotSymmetric { asymmetry: f64 },

    #[error("linear operator is numerically singular (reciprocal condition {rcond:e})")]
    SingularOperator { rcond: f64 },

    #[error("covariance parameter is numerically singular (reciprocal condition {rcond:e})")]
    SingularSigma { rcond: f64 },

    #[error("drift matrix has an eigenvalue with non-negative real part ({max_real_part:e})")]
    UnstableDrift { max_real_part: f64 },

    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("step size underflow at t = {t}: h = {h:e}")]
    StepUnderflow { t: f64, h: f64 },

    #[error("degrees of freedom {dof} invalid for dimension {dim}")]
    BadDof { dof: f64, dim: usize },

    #[error("diffusion coefficient is zero; the transition law is degenerate")]
    DegenerateDiffusion,

    #[error("empty sample")]
    EmptySample,

    #[error("non-finite value in sample at index {0}")]
    NonFiniteSample(usize),

    #[error("index {index} out of range for bound {bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl WishartError {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numeric_failure(&self) -> bool {
        matches!(
            self,
            WishartError::StepUnderflow { .. }
                | WishartError::SingularOperator { .. }
                | WishartError::SingularSigma { .. }
                | WishartError::NonFiniteSample(_)
                | WishartError::NotPsd { .. }
        )
    }
}
