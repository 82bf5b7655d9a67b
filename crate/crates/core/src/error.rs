use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("block length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("windows are misaligned: [{a_start}, +{a_len}) vs [{b_start}, +{b_len})")]
    Misaligned {
        a_start: i64,
        a_len: usize,
        b_start: i64,
        b_len: usize,
    },

    #[error("range [{pos}, {pos}+{len}) lies outside the window [{start}, {end})")]
    OutOfRange {
        pos: i64,
        len: usize,
        start: i64,
        end: i64,
    },

    #[error("block length {0} is outside 1..=63")]
    BlockLength(usize),

    #[error("block code {code:#x} does not fit in {len} symbols")]
    BlockCode { code: u64, len: usize },

    #[error("invalid block literal {0:?}")]
    Literal(String),

    #[error("invalid bit-string file: {0}")]
    BitFile(String),

    #[error("window of length {len} is shorter than block length {k}")]
    WindowTooShort { len: usize, k: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("chain needs n0 >= 2, got {0}")]
    ChainSize(usize),

    #[error("no member of the block set is dominated by {0}")]
    NoDominatedMember(String),

    #[error("insufficient genericity: {0}")]
    InsufficientGenericity(String),

    #[error("schedule does not match the window: {0}")]
    ScheduleMismatch(String),

    #[error("enumeration too large: {0}")]
    TooLarge(String),

    #[error("{0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
