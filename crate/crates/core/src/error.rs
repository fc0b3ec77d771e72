use thiserror::Error;

/// Errors raised by density algebra, models, and fusion.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },

    #[error("degenerate geometry: state coincides with sensor position")]
    DegenerateGeometry,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

pub type Result<T> = core::result::Result<T, Error>;
