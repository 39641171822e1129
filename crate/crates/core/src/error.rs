use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MfsError {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid word: {0}")]
    InvalidWord(String),
    #[error("symbol {symbol} outside alphabet of size {card:?}")]
    SymbolOutside { symbol: u64, card: Option<u64> },
    #[error("invalid truncation: {0}")]
    Truncation(String),
    #[error("cylinder images need offsets for this family")]
    MissingOffsets,
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
    #[error("symbol tail diverges")]
    TailDivergent,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("alphabets are not nested")]
    NotNested,
}
