use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Checks that sample a property (validation, residual sweeps) report
/// failures as data and never use this type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("point {point:?} is outside the cone")]
    NotInCone { point: Vec<f64> },

    #[error("root finder did not converge: {0}")]
    NonConvergence(String),

    #[error("field is not positive at {point:?} (value {value})")]
    Positivity { point: Vec<f64>, value: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("singular evaluation at {point:?}")]
    Singularity { point: Vec<f64> },

    #[error("inconsistent initial data: {0}")]
    InconsistentInitialData(String),

    #[error("eigenvalues leave the cone at nodes {nodes:?}")]
    ConeExit {
        nodes: Vec<usize>,
        eigenvalues: Vec<Vec<f64>>,
    },

    #[error("newton iteration stagnated after {iterations} iterations (residual {residual:e})")]
    Stagnation {
        iterations: usize,
        residual: f64,
        iterate: Vec<f64>,
    },

    #[error("inadmissible configuration: {0}")]
    Inadmissible(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
