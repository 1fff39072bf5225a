use thiserror::Error;

#[derive(Debug, Error)]
pub enum DrdError {
    #[error("config: {0}")]
    Config(String),

    #[error("fusion inputs must be in an exact 2:1 spatial ratio, got {0}x{1} vs {2}x{3}")]
    RatioMismatch(usize, usize, usize, usize),

    #[error("input extent {0}x{1} is not divisible by 16")]
    Divisibility(usize, usize),

    #[error("target pixel ({x}, {y}) holds {id}, outside [0, {classes}) and not the ignore value")]
    BadLabel {
        x: usize,
        y: usize,
        id: u8,
        classes: usize,
    },

    #[error("loss became non-finite at step {step}")]
    Diverged { step: usize },

    #[error("weights file: {0}")]
    Weights(String),

    #[error("attention export: {0}")]
    Export(String),

    #[error(transparent)]
    Tensor(#[from] tspkit_tensor::TensorError),

    #[error(transparent)]
    Data(#[from] tspkit_data::DataError),
}

impl DrdError {
    /// Flattens into a tensor error so decoder forwards can be handed
    /// straight to the tensor-level gradient checker.
    pub fn into_tensor_error(self) -> tspkit_tensor::TensorError {
        match self {
            DrdError::Tensor(t) => t,
            other => tspkit_tensor::TensorError::InvalidArgument {
                op: "drd",
                reason: other.to_string(),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, DrdError>;
