use thiserror::Error;

/// Errors raised while building or parsing a reaction network.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("network must declare at least one species")]
    NoSpecies,
    #[error("duplicate species identifier `{0}`")]
    DuplicateSpecies(String),
    #[error("reaction {index}: unknown species `{species}`")]
    UnknownSpecies { index: usize, species: String },
    #[error("reaction {index}: rate constant must be positive, got {rate}")]
    NonPositiveRate { index: usize, rate: f64 },
    #[error("reaction {index}: reactants equal products (self-loop), rejected")]
    SelfLoop { index: usize },
    #[error("malformed model file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("i/o error reading model: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors raised during simulation or analysis.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("negative component in state: x[{index}] = {value}")]
    NegativeState { index: usize, value: f64 },
    #[error("initial counts round(x0*V) have a negative component at index {0}")]
    NegativeInitialCounts(usize),
    #[error("event cap of {cap} exceeded at t = {time}; reduce T or V")]
    EventCapExceeded { cap: u64, time: f64 },
    #[error("state left the positive orthant at t = {time}: x[{index}] = {value}")]
    LeftDomain { index: usize, value: f64, time: f64 },
    #[error("non-finite state at t = {time}; reduce the step or check parameters")]
    NonFiniteState { time: f64 },
    #[error("reaction index {0} out of range")]
    BadReactionIndex(usize),
    #[error("increment length {0} is not a power of two >= 2; round the horizon up")]
    NotPowerOfTwo(usize),
    #[error("value {0} is off the Poisson count lattice")]
    OffLattice(f64),
    #[error("probability argument {0} must lie in (0, 1)")]
    BadProbability(f64),
    #[error("mismatched increment grids: {0} vs {1} points")]
    MismatchedGrids(usize, usize),
    #[error(
        "noise horizon exceeded on channel {channel}: need internal time {required:.3}, \
         have {available:.3}; regenerate with a larger safety factor"
    )]
    NoiseHorizonExceeded {
        channel: usize,
        required: f64,
        available: f64,
    },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}
