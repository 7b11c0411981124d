use alloc::string::String;

/// Errors raised by the exploration core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("degenerate surface parametrization at ({u}, {v})")]
    DegenerateSurface { u: f64, v: f64 },

    #[error("projection did not converge after {iterations} iterations (residual {residual:e})")]
    ProjectionFailed { iterations: usize, residual: f64 },

    #[error("constraint jacobian is rank deficient (smallest singular value {sigma_min:e})")]
    Singular { sigma_min: f64 },

    #[error("tool axis is not aligned with the surface normal (dot product {dot})")]
    Misaligned { dot: f64 },

    #[error("geodesic traversal stalled after {steps} steps")]
    InterpolationFailed { steps: usize },

    #[error("no on-manifold sample after {attempts} attempts")]
    SampleFailed { attempts: usize },

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("coverage is undefined for an empty baseline")]
    EmptyBaseline,

    #[error("grid resolution mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
