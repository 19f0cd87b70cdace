//! Crate-wide error type.

use thiserror::Error;

/// Alias used by every fallible operation in the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A point or node constructor was fed entries below 1.
    #[error("entries must be >= 1, got {0}")]
    EntryOutOfRange(u32),

    /// A universe was too small for the requested family.
    #[error("universe must contain at least {need} elements, got {got}")]
    UniverseTooSmall { need: u32, got: u32 },

    /// A node is longer than the height of the tree it was used in.
    #[error("node of length {len} does not belong to a tree of height {height}")]
    NodeTooLong { len: usize, height: u32 },

    /// Invalid embedding parameters (bad rank, epsilon, thresholds...).
    #[error("invalid embedding spec: {0}")]
    InvalidSpec(String),

    /// A set lies outside the domain of the embedding it was passed to.
    #[error("set {set} is outside the domain of {spec}: {reason}")]
    OutsideDomain {
        spec: String,
        set: String,
        reason: String,
    },

    /// Threshold sequence does not cover a required element.
    #[error("threshold sequence of length {len} does not cover element {element}")]
    ThresholdNotCovered { element: u32, len: usize },

    /// Materializing an image would exceed the configured node budget.
    #[error("node budget exceeded: materialization needs more than {budget} nodes")]
    NodeBudgetExceeded { budget: u64 },

    /// 64-bit integer arithmetic overflowed; desk-scale inputs never do.
    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    /// Text input (ordinal, rational, set, spec) failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// Invalid argument to an ordinal operation.
    #[error("invalid ordinal argument: {0}")]
    InvalidOrdinal(String),

    /// Single-step derivation of the top interval is refused; see `cb_index`.
    #[error("single-step derivative of [0, w^w] is not defined on homeomorphism types")]
    TopIntervalDerivative,

    /// An operation was called with arguments outside its contract.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A finite embedding violated a structural invariant.
    #[error("invalid finite embedding: {0}")]
    InvalidEmbedding(String),

    /// A requested singleton is missing from a finite embedding's domain.
    #[error("finite embedding has no image for the singleton {{{0}}}")]
    MissingSingleton(u32),

    /// The claimed constant is outside the range the trace argument covers.
    #[error("claimed constant {0} is not in (0, 2); the separation threshold degenerates")]
    ClaimOutOfRange(String),

    /// Two distinct points were mapped to the same image (zero gap).
    #[error("distinct points {a} and {b} have image distance 0")]
    ZeroGap { a: String, b: String },

    /// An I/O failure while writing a report artifact.
    #[error("report i/o error: {0}")]
    ReportIo(String),
}
