use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("unknown kernel family `{0}`")]
    UnknownFamily(String),

    #[error("{0}")]
    InvalidSpec(String),

    #[error("kernel value at ({x}, {y}) is not finite")]
    NonFiniteKernel { x: f64, y: f64 },

    #[error("kernel operator has eigenvalue {eigenvalue:.6e} outside [{lo}, {hi}]")]
    KernelInvalid { eigenvalue: f64, lo: f64, hi: f64 },

    #[error("eigenvalue {0:.15} is numerically 1; projection directions are not supported")]
    DegenerateProjection(f64),

    #[error("ratio (k(0) - k(t)) / t^alpha drifts with slope {slope:.3} in log t; exponent {alpha} does not match")]
    HolderMismatch { alpha: f64, slope: f64 },

    #[error("points {i} and {j} coincide or are out of order")]
    SingularConfiguration { i: usize, j: usize },

    #[error("density {value:.3e} is not positive at a finite-difference stencil point")]
    NearSingular { value: f64 },

    #[error("sampling failed: {0}")]
    SamplingFailed(String),

    #[error("integration failed at t = {time}: {reason}")]
    IntegrationFailure { time: f64, reason: String },

    #[error("empty sample batch")]
    EmptyBatch,

    #[error("eigensolver did not converge")]
    Eigensolve,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(
    ok: bool,
    name: &'static str,
    value: f64,
    reason: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
