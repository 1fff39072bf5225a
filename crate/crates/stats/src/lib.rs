//! Dataset-level analytics over the annotation format: participant counts
//! and size distributions, and the crowd-rate traffic-flow series.

pub mod crowd;
pub mod report;

pub use crowd::{crowd_rate, CrowdEntry, CrowdRate, CrowdRateSeries};
pub use report::{
    count_participants, dataset_report, participant_instance_areas, DatasetReport,
    ParticipantCounts, ReportAccumulator, SizeHistogram, StatsError, HISTOGRAM_BINS,
};
