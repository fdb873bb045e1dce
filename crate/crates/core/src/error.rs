use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid diagram rows {0:?}: row lengths must be positive and weakly decreasing")]
    InvalidDiagram(Vec<usize>),

    #[error("cell ({i},{j}) is out of range; indices start at 1")]
    InvalidCell { i: usize, j: usize },

    #[error("dimension of a diagram of size {0} does not fit in 64 bits")]
    DimensionOverflow(usize),

    #[error("diagram of size {size} exceeds the enumeration bound {bound}")]
    EnumerationBound { size: usize, bound: usize },

    #[error("inadmissible parameters: {0}")]
    InadmissibleParameters(String),

    #[error("invalid height state: {0}")]
    InvalidState(String),

    #[error("truncation level {new} exceeds the current level {current}")]
    TruncationAboveLevel { new: f64, current: f64 },

    #[error("no finite hitting time from height {0}")]
    NoHittingTime(f64),

    #[error("event cap of {cap} reached at t = {time}: possible explosion")]
    Explosion { cap: u64, time: f64 },

    #[error("distribution is not normalized (total mass {0})")]
    Unnormalized(f64),

    #[error("diagram {0:?} is not among the generator states")]
    UnknownState(Vec<usize>),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("region too small: {0}")]
    RegionTooSmall(String),

    #[error("invalid order: {0}")]
    InvalidOrder(String),

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
