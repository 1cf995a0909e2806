use thiserror::Error;

/// Errors raised anywhere in the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("rank deficient: pivot {pivot:e} at column {column}")]
    RankDeficient { column: usize, pivot: f64 },
    #[error("singular matrix at pivot {0}")]
    Singular(usize),
    #[error("matrix is not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("exterior power order {order} out of range for dimension {dim}")]
    BadOrder { order: usize, dim: usize },
    #[error("symplectic checks need an even dimension, got {0}")]
    OddDimension(usize),
    #[error("chart is degenerate: {0}")]
    ChartDegenerate(String),
    #[error("lower-right block is singular (condition {0:e})")]
    DBlockSingular(f64),
    #[error("hopping matrix is singular")]
    SingularHopping,
    #[error("hopping sampler rejected {0} consecutive draws")]
    ResampleLimit(usize),
    #[error("window mismatch: {0}")]
    WindowMismatch(String),
    #[error("Green's function closed form needs (even, odd) sites with x > y, got ({0}, {1})")]
    ParityError(i64, i64),
    #[error("energy is numerically in the spectrum (pivot ratio {0:e})")]
    NearSingular(f64),
    #[error("distance bucket {distance} has only {count} samples")]
    TooFewSamples { distance: usize, count: usize },
    #[error("zero-energy sector decomposition requires a chiral model")]
    NotChiral,
    #[error("insufficient steps: {0}")]
    InsufficientSteps(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("eigenvalue within {0:e} of the Fermi energy")]
    EigenfailureAtFermi(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
