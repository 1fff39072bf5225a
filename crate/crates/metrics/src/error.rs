use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("maps have different extents: {0}x{1} vs {2}x{3}")]
    ExtentMismatch(usize, usize, usize, usize),

    #[error("prediction pixel ({x}, {y}) holds {id}, which is not a class id below {classes}")]
    InvalidPrediction {
        x: usize,
        y: usize,
        id: u32,
        classes: usize,
    },

    #[error("ground-truth pixel ({x}, {y}) holds {id}, outside the {classes}-class registry")]
    InvalidGroundTruth {
        x: usize,
        y: usize,
        id: u32,
        classes: usize,
    },

    #[error("cannot merge: {0} classes vs {1}")]
    ClassCountMismatch(usize, usize),

    #[error("no classes present in ground truth or prediction")]
    NoClassesPresent,

    #[error("no average instance size for class {0}, which appears in the ground truth")]
    MissingAverageSize(u8),

    #[error(transparent)]
    Data(#[from] tspkit_data::DataError),
}

pub type Result<T> = std::result::Result<T, MetricsError>;
