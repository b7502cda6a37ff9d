use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("words must be non-empty")]
    EmptyWord,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("alphabet mismatch: size {left} vs {right}")]
    AlphabetMismatch { left: usize, right: usize },

    #[error("unknown token {token:?} at position {position}")]
    UnknownToken { token: String, position: usize },

    #[error("symbol index {index} out of range for alphabet of size {size}")]
    SymbolOutOfRange { index: usize, size: usize },

    #[error("duplicate token {0:?} in alphabet")]
    DuplicateToken(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("distance {distance} exceeds word length {length}")]
    DistanceTooLarge { distance: usize, length: usize },

    #[error("no feasible word at distance {0} from the input")]
    EmptyDistanceClass(usize),

    #[error("infeasible input: transition {from:?} -> {to:?} at position {position} has probability 0")]
    Infeasible {
        position: usize,
        from: String,
        to: String,
    },

    #[error("invalid Markov chain: {0}")]
    InvalidChain(String),

    #[error("corpus contains no tokens")]
    EmptyCorpus,

    #[error("language too large for exhaustive enumeration: {size} words (limit {limit}); enumeration costs O(n m^n)")]
    LanguageTooLarge { size: u128, limit: u128 },

    #[error("eta = {eta} outside the admissible range {range}")]
    EtaOutOfRange { eta: f64, range: &'static str },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
