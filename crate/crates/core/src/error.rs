use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid ancillary state: {0}")]
    InvalidAncillary(String),

    #[error("no samples left after burn-in (chain length {samples}, burn-in {burn_in})")]
    EmptyChain { samples: usize, burn_in: usize },

    #[error("every sample hit the amplitude underflow floor")]
    AllSamplesDiscarded,

    #[error("estimator inconsistency: imaginary residue {0:e} in S/F")]
    EstimatorInconsistency(f64),

    #[error("singular SR system: {0}")]
    SingularSystem(String),

    #[error("system of {sites} sites exceeds the dense limit of {max} sites")]
    Capacity { sites: usize, max: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("exceptional point: vanishing denominator {0:e} in eigenstate recursion")]
    ExceptionalPoint(f64),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
