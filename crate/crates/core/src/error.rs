//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid problem specification: {0}")]
    InvalidSpec(String),

    #[error("modulus domain error: t = {t} outside (0, {t_max}]")]
    ModulusDomain { t: f64, t_max: f64 },

    #[error("modulus is not strictly increasing on its domain")]
    ModulusNotMonotone,

    #[error("ellipticity violation: coefficient a({x}) = {value} <= 0")]
    EllipticityViolation { x: f64, value: f64 },

    #[error("vector field returned a non-finite value at X = {x:?}, xi = {xi:?}")]
    InvalidField { x: [f64; 2], xi: [f64; 2] },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver did not converge at eps = {eps}: residual {residual:.3e} after {iterations} iterations")]
    SolverNonConvergence {
        eps: f64,
        residual: f64,
        iterations: usize,
        /// Residual norms recorded before the failure.
        history: Vec<f64>,
        /// Last iterate, row-major node values.
        last_iterate: Vec<f64>,
    },

    #[error("non-finite value detected during solve: {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed field file: {0}")]
    MalformedField(String),
}

pub type Result<T> = std::result::Result<T, Error>;
