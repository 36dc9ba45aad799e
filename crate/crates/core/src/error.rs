use thiserror::Error;

/// Errors raised by the reconstruction library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PatError {
    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("unsupported: {0}")]
    Capability(String),

    /// A complex exponential would leave the double-precision range.
    #[error("exponent overflow: |Im {what}| = {im:.6e} over a length of {length:.6e} exceeds the guard {guard}")]
    Range {
        what: &'static str,
        im: f64,
        length: f64,
        guard: f64,
    },

    #[error("singular evaluation: {0}")]
    Singularity(String),

    #[error("final time T too small: trailing residual {residual:.3e} of the trace maximum (tolerance {tolerance:.1e}) at sensor {sensor}")]
    NotQuiescent {
        sensor: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("non-finite value at x = {x:?}, omega = {omega}")]
    Numeric { x: [f64; 3], omega: f64 },
}

pub type Result<T> = std::result::Result<T, PatError>;
