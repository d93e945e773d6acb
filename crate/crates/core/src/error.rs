use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("expected {expected} level values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("level ranges differ: [-{left_l1}, {left_l2}] vs [-{right_l1}, {right_l2}]")]
    RangeMismatch {
        left_l1: u32,
        left_l2: u32,
        right_l1: u32,
        right_l2: u32,
    },

    #[error("level {level}: d = {d} exceeds p = {p}, the level cannot be coded with this channel")]
    AllocationExceedsSource { level: i32, d: f64, p: f64 },

    #[error(
        "level window too small for D = {distortion}: need L1, L2 > -log2(lambda*D) = {bound:.4}, \
         i.e. L1 >= {min_levels} and L2 >= {min_levels} (got L1 = {l1}, L2 = {l2})"
    )]
    LevelCount {
        distortion: f64,
        bound: f64,
        min_levels: u32,
        l1: u32,
        l2: u32,
    },

    #[error("exact enumeration supports at most {max} levels, got {levels}")]
    TooManyLevels { levels: usize, max: usize },

    #[error("source model mismatch: {0}")]
    ModelMismatch(String),

    #[error("empty sample set")]
    EmptySamples,
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { name, value })
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
