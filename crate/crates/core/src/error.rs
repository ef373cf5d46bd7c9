use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph spec: {0}")]
    InvalidSpec(String),

    #[error("coordinate {0} outside the supported range ±2^40")]
    CoordinateOutOfRange(i64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {0:?} is not in the region")]
    NotInRegion(Vec<i64>),

    #[error("point {0:?} is not on the inner boundary of the region")]
    NotOnBoundary(Vec<i64>),

    #[error("operation requires a box region")]
    RegionNotBox,

    #[error("riesz kernel needs d >= 5, got d = {0}")]
    KernelDimension(usize),

    #[error("empty point set")]
    EmptySet,

    #[error("{what}: size {size} exceeds the guard {limit}")]
    SizeGuard {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("infeasible: {what} of size {size} exceeds the guard {limit}")]
    Infeasible {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("every denominator replica missed (increase n or decrease |z|)")]
    AllDenominatorMisses,

    #[error("underpowered: {accepted} accepted samples, {required} required")]
    Underpowered { accepted: u64, required: u64 },

    #[error("bracket error: f({p_lo}) = {f_lo:.4} and f({p_hi}) = {f_hi:.4} have the same sign")]
    Bracket {
        p_lo: f64,
        p_hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("rejection sampler exhausted after {0} attempts")]
    Exhausted(u64),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
