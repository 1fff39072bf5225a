//! Dataset statistics: traffic-participant counts, crowding thresholds and
//! the instance-size histogram.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tspkit_data::{AnnotatedImage, ClassRegistry, InstanceMap, INSTANCE_BASE};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty split: no images to report on")]
    EmptySplit,
}

/// Distinct traffic participants in one instance map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParticipantCounts {
    pub per_class: BTreeMap<u8, u32>,
    pub total: u32,
    pub humans: u32,
    pub vehicles: u32,
}

/// Counts distinct (class, index>0) pairs restricted to participant classes.
/// Humans are the person/rider classes; every other participant is a vehicle.
pub fn count_participants(inst: &InstanceMap, registry: &ClassRegistry) -> ParticipantCounts {
    let mut seen: BTreeMap<(u8, u32), ()> = BTreeMap::new();
    for &id in inst.pixels() {
        if id >= INSTANCE_BASE {
            let class = (id / INSTANCE_BASE) as u8;
            if registry.is_participant(class) {
                seen.insert((class, id % INSTANCE_BASE), ());
            }
        }
    }
    let mut counts = ParticipantCounts::default();
    for (class, _) in seen.keys() {
        *counts.per_class.entry(*class).or_insert(0) += 1;
        counts.total += 1;
        if registry.is_human(*class) {
            counts.humans += 1;
        } else {
            counts.vehicles += 1;
        }
    }
    counts
}

/// Per-instance participant pixel areas in one map.
pub fn participant_instance_areas(
    inst: &InstanceMap,
    registry: &ClassRegistry,
) -> BTreeMap<(u8, u32), u64> {
    let mut areas: BTreeMap<(u8, u32), u64> = BTreeMap::new();
    for &id in inst.pixels() {
        if id >= INSTANCE_BASE {
            let class = (id / INSTANCE_BASE) as u8;
            if registry.is_participant(class) {
                *areas.entry((class, id % INSTANCE_BASE)).or_insert(0) += 1;
            }
        }
    }
    areas
}

/// Log₂ histogram over instance pixel areas: bin i covers [2^i, 2^(i+1)),
/// 24 bins spanning 2⁰..2²⁴; larger instances clamp into the last bin.
pub const HISTOGRAM_BINS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeHistogram {
    /// 25 edges: 2^0 ... 2^24.
    pub bin_edges: Vec<u64>,
    pub counts: Vec<u64>,
}

impl SizeHistogram {
    fn from_counts(counts: [u64; HISTOGRAM_BINS]) -> SizeHistogram {
        SizeHistogram {
            bin_edges: (0..=HISTOGRAM_BINS as u32).map(|i| 1u64 << i).collect(),
            counts: counts.to_vec(),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn histogram_bin(area: u64) -> usize {
    (area.max(1).ilog2() as usize).min(HISTOGRAM_BINS - 1)
}

/// Mergeable integer core of a [`DatasetReport`]. All fields are exact
/// counts, so shard-and-merge equals whole-set computation bit-for-bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportAccumulator {
    pub num_images: u64,
    pub total_participants: u64,
    pub tp_gt_50: u64,
    pub tp_gt_75: u64,
    pub tp_gt_100: u64,
    pub humans_total: u64,
    pub vehicles_total: u64,
    pub per_class: BTreeMap<u8, u64>,
    pub histogram: [u64; HISTOGRAM_BINS],
}

impl Default for ReportAccumulator {
    fn default() -> Self {
        ReportAccumulator {
            num_images: 0,
            total_participants: 0,
            tp_gt_50: 0,
            tp_gt_75: 0,
            tp_gt_100: 0,
            humans_total: 0,
            vehicles_total: 0,
            per_class: BTreeMap::new(),
            histogram: [0; HISTOGRAM_BINS],
        }
    }
}

impl ReportAccumulator {
    pub fn add_image(&mut self, inst: &InstanceMap, registry: &ClassRegistry) {
        let counts = count_participants(inst, registry);
        self.num_images += 1;
        self.total_participants += counts.total as u64;
        self.humans_total += counts.humans as u64;
        self.vehicles_total += counts.vehicles as u64;
        if counts.total > 50 {
            self.tp_gt_50 += 1;
        }
        if counts.total > 75 {
            self.tp_gt_75 += 1;
        }
        if counts.total > 100 {
            self.tp_gt_100 += 1;
        }
        for (class, n) in counts.per_class {
            *self.per_class.entry(class).or_insert(0) += n as u64;
        }
        for area in participant_instance_areas(inst, registry).into_values() {
            self.histogram[histogram_bin(area)] += 1;
        }
    }

    pub fn merge(&mut self, other: &ReportAccumulator) {
        self.num_images += other.num_images;
        self.total_participants += other.total_participants;
        self.tp_gt_50 += other.tp_gt_50;
        self.tp_gt_75 += other.tp_gt_75;
        self.tp_gt_100 += other.tp_gt_100;
        self.humans_total += other.humans_total;
        self.vehicles_total += other.vehicles_total;
        for (class, n) in &other.per_class {
            *self.per_class.entry(*class).or_insert(0) += n;
        }
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += *b;
        }
    }

    pub fn finalize(&self, registry: &ClassRegistry) -> Result<DatasetReport, StatsError> {
        if self.num_images == 0 {
            return Err(StatsError::EmptySplit);
        }
        let n = self.num_images as f64;
        let name = |id: &u8| {
            registry
                .get(*id)
                .map(|c| c.name.clone())
                .unwrap_or_else(|| format!("class {id}"))
        };
        Ok(DatasetReport {
            num_images: self.num_images,
            total_participants: self.total_participants,
            avg_tp: self.total_participants as f64 / n,
            tp_gt_50: self.tp_gt_50,
            tp_gt_75: self.tp_gt_75,
            tp_gt_100: self.tp_gt_100,
            humans_total: self.humans_total,
            vehicles_total: self.vehicles_total,
            humans_per_image: self.humans_total as f64 / n,
            vehicles_per_image: self.vehicles_total as f64 / n,
            per_class_instance_counts: self
                .per_class
                .iter()
                .map(|(id, count)| (name(id), *count))
                .collect(),
            instance_size_histogram: SizeHistogram::from_counts(self.histogram),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub num_images: u64,
    pub total_participants: u64,
    pub avg_tp: f64,
    pub tp_gt_50: u64,
    pub tp_gt_75: u64,
    pub tp_gt_100: u64,
    pub humans_total: u64,
    pub vehicles_total: u64,
    pub humans_per_image: f64,
    pub vehicles_per_image: f64,
    pub per_class_instance_counts: BTreeMap<String, u64>,
    pub instance_size_histogram: SizeHistogram,
}

impl DatasetReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned one-row summary table plus the per-class counts.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:>8}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}\n",
            "#Images", "Avg TP", "TP>50", "TP>75", "TP>100", "#H./img", "#V./img"
        ));
        out.push_str(&format!(
            "{:>8}  {:>8.1}  {:>8}  {:>8}  {:>8}  {:>8.1}  {:>8.1}\n",
            self.num_images,
            self.avg_tp,
            self.tp_gt_50,
            self.tp_gt_75,
            self.tp_gt_100,
            self.humans_per_image,
            self.vehicles_per_image
        ));
        out.push('\n');
        let width = self
            .per_class_instance_counts
            .keys()
            .map(|k| k.len())
            .max()
            .unwrap_or(5)
            .max("class".len());
        out.push_str(&format!("{:<width$}  {:>10}\n", "class", "instances"));
        for (name, count) in &self.per_class_instance_counts {
            out.push_str(&format!("{name:<width$}  {count:>10}\n"));
        }
        out
    }
}

/// One-call report over a split.
pub fn dataset_report(
    images: &[AnnotatedImage],
    registry: &ClassRegistry,
) -> Result<DatasetReport, StatsError> {
    let mut acc = ReportAccumulator::default();
    for img in images {
        acc.add_image(&img.instances, registry);
    }
    acc.finalize(registry)
}
