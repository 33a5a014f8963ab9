use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid bounds in dimension {dim}: min {min} must be below max {max}")]
    InvalidBounds { dim: usize, min: f64, max: f64 },

    #[error("bounds are not a hypercube: extent {extent} in dimension {dim} differs from {expected}")]
    NonCubicBounds { dim: usize, extent: f64, expected: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("node {0} is not a leaf")]
    NotALeaf(usize),

    #[error("maximum tree depth {0} reached")]
    DepthLimit(u32),

    #[error("degenerate mixture: no leaf has a positive weight")]
    DegenerateMixture,

    #[error("target density is negative or non-finite ({value}) at {point:?}")]
    InvalidDensity { value: f64, point: Vec<f64> },

    #[error("proposal density is zero at a sample it generated")]
    ZeroProposalDensity,

    #[error("all weights are zero")]
    AllZeroWeights,

    #[error("chain is constant in dimension {0}; autocorrelation undefined")]
    ConstantChain(usize),

    #[error("chain needs at least 2 states, got {0}")]
    ChainTooShort(usize),

    #[error("population collapse: all importance weights are zero")]
    PopulationCollapse,

    #[error("initial point has zero target density")]
    ZeroInitialDensity,

    #[error("too many mixture components: 4^{dims} exceeds the supported size")]
    TooManyComponents { dims: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
