use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("table covers [{lo}, {hi}] but [{need_lo}, {need_hi}] is required")]
    TableRange {
        lo: u64,
        hi: u64,
        need_lo: u64,
        need_hi: u64,
    },

    #[error("point does not belong to the system: {0}")]
    Mismatch(String),

    #[error("symbol window too short: radius {required} required, {available} available")]
    InsufficientSupport { required: i64, available: i64 },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no admissible L up to {cap}: best S_L = {best_count} at L = {best_l}")]
    NoAdmissibleLength {
        cap: usize,
        best_l: usize,
        best_count: usize,
    },

    #[error("block collision between starts {first} and {second}")]
    BlockCollision { first: u64, second: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
