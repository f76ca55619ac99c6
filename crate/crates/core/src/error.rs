use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: malformed edge record: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: edge weight must be positive, got {weight}")]
    NonPositiveWeight { line: usize, weight: f64 },
    #[error("vertex {0} out of range (n = {1})")]
    VertexOutOfRange(u64, u64),
    #[error("number of workers must be at least 1")]
    ZeroWorkers,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("adjacency cache: {0}")]
    Cache(String),
}

#[derive(Debug, Error)]
pub enum RmatError {
    #[error("rmat scale K = {0} exceeds the supported id width (max 34)")]
    ScaleTooLarge(u32),
    #[error("quadrant probabilities must be in [0,1] and sum to 1, got ({a}, {b}, {c}, {d})")]
    BadQuadrants { a: f64, b: f64, c: f64, d: f64 },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("skew factor must be >= 1, got {0}")]
    BadSkew(f64),
}

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("walk parameters invalid: {0}")]
    BadConfig(String),
    #[error("alias table requires at least one positive weight")]
    AllZeroWeights,
    #[error("degree-0 vertex cannot occur mid-walk")]
    EmptyNeighborhood,
    #[error("approx bounds preconditions violated: {0}")]
    BadBoundsInput(String),
    #[error(
        "transition-probability precomputation needs {needed} bytes, above the {cap} byte cap"
    )]
    OracleCapExceeded { needed: u128, cap: u128 },
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("vertex {vertex} failed at superstep {superstep}: {reason}")]
    VertexFailure {
        vertex: u64,
        superstep: usize,
        reason: String,
    },
    #[error("send to vertex {0} out of range (n = {1})")]
    SendOutOfRange(u64, u64),
    #[error("max_supersteps must be at least 1")]
    ZeroSupersteps,
    #[error("protocol violation at vertex {vertex}, superstep {superstep}: {reason}")]
    Protocol {
        vertex: u64,
        superstep: usize,
        reason: String,
    },
}
