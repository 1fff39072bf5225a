use thiserror::Error;

/// Errors produced by tensor construction, ops, autodiff, and serialization.
#[derive(Debug, Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("{op}: invalid shape {shape:?}: {reason}")]
    InvalidShape {
        op: &'static str,
        shape: Vec<usize>,
        reason: String,
    },

    #[error("{op}: invalid argument: {reason}")]
    InvalidArgument { op: &'static str, reason: String },

    #[error("{op}: non-finite value at flat index {index}")]
    NonFinite { op: &'static str, index: usize },

    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },

    #[error("backward already ran on this tensor; reset gradients before calling it again")]
    BackwardTwice,

    #[error("backward: loss is not connected to any gradient-tracked tensor")]
    NoGrad,

    #[error("cross_entropy: label {label} at row {index} is outside [0, {classes})")]
    LabelOutOfRange {
        index: usize,
        label: u32,
        classes: usize,
    },

    #[error("cross_entropy: every target is ignored, loss is undefined")]
    AllIgnored,

    #[error("function is not deterministic: repeated evaluation changed element {index} ({first} vs {second})")]
    NonDeterministic {
        index: usize,
        first: f64,
        second: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parameter container: {0}")]
    Container(String),
}

pub type Result<T> = std::result::Result<T, TensorError>;
