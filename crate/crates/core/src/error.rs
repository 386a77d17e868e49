use thiserror::Error;

/// Errors produced by the multiplier model and its tooling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("digit count must be at least 1")]
    ZeroDigits,

    #[error("digit count {digits} exceeds the supported maximum of {max}")]
    TooManyDigits { digits: usize, max: usize },

    #[error("digit value {0} is outside [-16, 15]")]
    DigitRange(i64),

    #[error("value {value} is {bound} the {digits}-digit dynamic range [{lo}, {hi}]")]
    OutOfRange {
        value: String,
        bound: &'static str,
        digits: usize,
        lo: String,
        hi: String,
    },

    #[error("operand widths differ: {left} vs {right} digits")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cell {cell} takes {expected} inputs, got {got}")]
    Arity {
        cell: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("border column {border} is outside 1..={max} for {digits}-digit operands")]
    InvalidBorder {
        border: u32,
        digits: usize,
        max: u32,
    },

    #[error("column holds {bits} bits, exhaustive search is capped at {cap}")]
    CapExceeded { bits: u32, cap: u32 },

    #[error("invalid cell library: {0}")]
    Library(String),

    #[error("invalid design: {0}")]
    Design(String),

    #[error("unsupported document schema {found:?}, expected {expected:?}")]
    Schema {
        found: String,
        expected: &'static str,
    },

    #[error("exhaustive evaluation needs a 1-digit design, got {0} digits")]
    ExhaustiveWidth(usize),

    #[error("malformed value {0:?}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
