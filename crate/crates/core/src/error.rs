use thiserror::Error;

/// Errors raised by the library. Non-convergence of an integrator is not an
/// error: it is reported through [`crate::LoopValue::converged`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("integrand is not finite at {point:?}")]
    NonFinite { point: Vec<f64> },

    #[error("shape mismatch: expected dimension {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("lindblad kernel is not positive semidefinite: eigenvalue {min:e} against largest {max:e}")]
    KernelNotPsd { min: f64, max: f64 },

    #[error(
        "weak-coupling guard violated: |L[rho]| * dt = {0:.3e} exceeds 0.1; \
         lower the coupling, the time regulator or the step"
    )]
    ValidityGuard(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
