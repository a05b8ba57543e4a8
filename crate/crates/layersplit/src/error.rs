use thiserror::Error;

/// Errors reported by tensor construction, operators, the solver, and the
/// compression simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("axis {axis} out of range for order-{order} tensor")]
    AxisOutOfRange { axis: usize, order: usize },

    #[error("non-finite value {value} at flat index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "solver diverged at iteration {iter}: residual {residual:.3e} stayed above \
         10x the best seen ({best:.3e}) for {window} consecutive iterations"
    )]
    Diverged {
        iter: usize,
        residual: f64,
        best: f64,
        window: usize,
    },

    #[error("spectral inverse left imaginary residue {residue:.3e} above 1e-10")]
    ImaginaryResidue { residue: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
