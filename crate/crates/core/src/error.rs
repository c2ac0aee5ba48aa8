use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("symbol {symbol} out of range for an alphabet of {size} symbols")]
    SymbolOutOfRange { symbol: usize, size: usize },

    #[error("transition matrix is not square or is empty")]
    MalformedTransitions,

    #[error("transition matrix entries must be 0 or 1 (found {0} at ({1}, {2}))")]
    NonBinaryTransition(f64, usize, usize),

    #[error("transition matrix is reducible: symbol {to} is unreachable from symbol {from}")]
    Reducible { from: usize, to: usize },

    #[error("transition matrix is irreducible but has period {period}; a mixing shift is required")]
    NotMixing { period: usize },

    #[error("inadmissible transition {from} -> {to} at position {position}")]
    Inadmissible { from: usize, to: usize, position: usize },

    #[error("periodic words must be nonempty")]
    EmptyPeriod,

    #[error("zero coordinates differ ({0} vs {1}); bracket is undefined")]
    BracketUndefined(u8, u8),

    #[error("points are not on a common local {0} set")]
    NotOnLocalLeaf(&'static str),

    #[error("no admissible connecting word of length {len} from {from} to {to}")]
    NoConnectingWord { from: usize, to: usize, len: usize },

    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    BudgetExceeded { what: &'static str, needed: u128, budget: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular or too ill-conditioned (condition number {0:e})")]
    Singular(f64),

    #[error("subspaces are not complementary: {0}")]
    NonComplementary(String),

    #[error("zero subspace has no principal angle")]
    ZeroSubspace,

    #[error("malformed block structure: {0}")]
    MalformedBlocks(String),

    #[error("vector violates the aperture precondition: angle {angle} < {aperture}")]
    ApertureViolated { angle: f64, aperture: f64 },

    #[error("eigenvalue modulus {modulus} lies within tolerance of a band edge")]
    IllConditionedSplit { modulus: f64 },

    #[error("cocycle table is incomplete: window {0} missing")]
    IncompleteTable(String),

    #[error("matrix product overflowed the floating range")]
    Overflow,

    #[error("stochastic matrix invalid: {0}")]
    NotStochastic(String),

    #[error("matrix fails Zimmer block membership: {0}")]
    NotInBlock(String),

    #[error("flag is not invariant along the orbit (residual {0:e})")]
    FlagNotInvariant(f64),

    #[error("reconstruction stage `{stage}` residual {residual:e} exceeds tolerance {tolerance:e}")]
    StageResidual { stage: String, residual: f64, tolerance: f64 },

    #[error("no basepoint available for symbol {0}")]
    MissingBasepoint(u8),
}

pub type Result<T> = std::result::Result<T, Error>;
