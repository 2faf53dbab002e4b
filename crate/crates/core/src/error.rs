use alloc::string::String;

/// Errors raised by the word arithmetic, state evaluators and truncated models.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parameters must be positive integers (got c={c}, d={d})")]
    InvalidParams { c: u64, d: u64 },

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("stem exponent {exp} at position {pos} is not below d={d}")]
    NotNormal { pos: usize, exp: u64, d: u64 },

    #[error("beta={beta} is not above the critical value ln d={critical}; no KMS state of this family exists")]
    BelowCritical { beta: f64, critical: f64 },

    #[error("operation requires that d divides c (c={c}, d={d})")]
    RequiresDDividesC { c: u64, d: u64 },

    #[error("operation requires that d does not divide c (c={c}, d={d})")]
    RequiresDNotDividesC { c: u64, d: u64 },

    #[error("size cap exceeded: {what} needs {needed} entries, cap is {cap}")]
    SizeCap { what: &'static str, needed: u128, cap: u128 },

    #[error("word of height {height} does not fit a model truncated at level {levels}")]
    HeightExceedsTruncation { height: usize, levels: usize },

    #[error("truncation boundary reached: {0}")]
    Boundary(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("exponent {0} is too large for this operation")]
    ExponentTooLarge(String),
}

pub type Result<T> = core::result::Result<T, Error>;
