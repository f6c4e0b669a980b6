use crate::fields::FieldError;
use crate::tensions::TensionError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MboError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Tension(#[from] TensionError),
    #[error("tension matrix has {sigma} phases but the partition has {partition}")]
    PhaseCountMismatch { sigma: usize, partition: usize },
    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),
    #[error("brute-force search over {phases}^{cells} candidates is out of range")]
    TooLargeForBruteForce { cells: usize, phases: usize },
    #[error("thresholding objective {scheme} differs from the brute-force optimum {oracle}")]
    OracleMismatch { scheme: f64, oracle: f64 },
    #[error("weight field must be nonnegative")]
    NegativeWeight,
    #[error("scale {scale} is not resolved (needs at least {required})")]
    UnresolvedScale { scale: f64, required: f64 },
    #[error("vector field has {got} components, grid dimension is {expected}")]
    VectorFieldDimension { expected: usize, got: usize },
    #[error("trajectory snapshots are too sparse: {0}")]
    InsufficientSnapshots(String),
    #[error("not a triple junction: {0}")]
    NotATripleJunction(String),
    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T, E = MboError> = std::result::Result<T, E>;
