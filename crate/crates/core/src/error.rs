use thiserror::Error;

/// Errors raised by the workbench.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid fraction {n}/{q}: {reason}")]
    InvalidFraction {
        n: String,
        q: String,
        reason: &'static str,
    },

    #[error("chain entry {0} is below 2")]
    EntryTooSmall(i64),

    #[error("chain is empty")]
    EmptyChain,

    #[error("value does not fit in a machine word: {0}")]
    Overflow(String),

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("boundary bullet in illegal position at {pos}")]
    BulletPosition { pos: usize },

    #[error("curve configuration is not negative definite on the contracted set")]
    NotNegativeDefinite,

    #[error("unsupported quotient shape: {0}")]
    UnsupportedShape(String),

    #[error("{0} admits no KSB smoothing")]
    NoKsbSmoothing(String),

    #[error("recognizers disagree on chain {chain}: peeling={peeling}, arithmetic={arithmetic}")]
    RecognizerDisagreement {
        chain: String,
        peeling: String,
        arithmetic: String,
    },

    #[error("curves {0} and {1} do not form an exceptional node")]
    NotANode(usize, usize),

    #[error("curve index {0} out of range")]
    NoSuchCurve(usize),

    #[error("search exceeded the safety cap of {0} states")]
    SafetyCapExceeded(usize),

    #[error("configuration too large for exhaustive search ({0} curves)")]
    TooLarge(usize),

    #[error("invalid cover parameters N={big_n}, Q={big_q}: {reason}")]
    InvalidCover {
        big_n: String,
        big_q: String,
        reason: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
