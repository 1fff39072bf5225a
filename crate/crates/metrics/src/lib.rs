//! Semantic-segmentation scoring over the annotation format: confusion-matrix
//! mIoU and Cityscapes-style instance-weighted iIoU, with mergeable
//! accumulators whose results do not depend on how work was sharded.

pub mod confusion;
pub mod error;
pub mod iiou;
pub mod report;

pub use confusion::{ConfusionMatrix, MiouResult};
pub use error::{MetricsError, Result};
pub use iiou::{average_instance_sizes, IiouClass, IiouResult, InstanceRecord, WeightedTallies};
pub use report::MetricReport;
