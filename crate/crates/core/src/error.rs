use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("hypergeometric series hits a pole: c + {step} = 0 before termination")]
    Pole { step: usize },

    #[error("series failed to converge within {terms} terms")]
    ConvergenceFailure { terms: usize },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("region has zero volume; covering is empty")]
    EmptyCover,

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("insufficient points: need at least {needed} other point(s), found {available}")]
    InsufficientPoints { needed: usize, available: usize },

    #[error("regions {first} and {second} overlap")]
    OverlappingRegions { first: usize, second: usize },

    #[error("component {index} has zero sample variance")]
    DegenerateComponent { index: usize },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("evaluation grid has {nodes} node evaluations, budget is {budget}; use a coarser grid")]
    GridTooLarge { nodes: usize, budget: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("replicate {replicate} failed after {attempts} attempts: {source}")]
    ReplicateFailed {
        replicate: usize,
        attempts: usize,
        source: Box<Error>,
    },
}
