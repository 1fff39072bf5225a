//! Cross-validation of a label/instance map pair.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{DataError, Result};
use crate::maps::{InstanceMap, LabelMap, IGNORE_INSTANCE, IGNORE_LABEL, INSTANCE_BASE};
use crate::registry::ClassRegistry;

/// How many offending pixels each category records verbatim.
const SAMPLE_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelIssue {
    pub x: usize,
    pub y: usize,
    pub detail: String,
}

/// Consistency report for one label/instance pair. Content issues are
/// recorded, not fatal; only structural problems (extent mismatch, empty
/// maps) abort validation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairReport {
    /// Pixels whose decoded instance class disagrees with the label map.
    pub class_mismatches: u64,
    pub mismatch_samples: Vec<PixelIssue>,
    /// Pixels carrying an instance index on a class without instances.
    pub stuff_with_index: u64,
    pub stuff_samples: Vec<PixelIssue>,
    /// Pixels whose instance id does not decode at all.
    pub undecodable: u64,
    pub undecodable_samples: Vec<PixelIssue>,
    /// Distinct (class, index>0) pairs seen, keyed by class.
    pub instances_per_class: BTreeMap<u8, u32>,
}

impl PairReport {
    pub fn is_clean(&self) -> bool {
        self.class_mismatches == 0 && self.stuff_with_index == 0 && self.undecodable == 0
    }

    pub fn total_instances(&self) -> u64 {
        self.instances_per_class.values().map(|&v| v as u64).sum()
    }

    fn record(samples: &mut Vec<PixelIssue>, count: &mut u64, x: usize, y: usize, detail: String) {
        *count += 1;
        if samples.len() < SAMPLE_CAP {
            samples.push(PixelIssue { x, y, detail });
        }
    }
}

pub fn validate_pair(
    label: &LabelMap,
    instances: &InstanceMap,
    registry: &ClassRegistry,
) -> Result<PairReport> {
    if label.width() != instances.width() || label.height() != instances.height() {
        return Err(DataError::ExtentMismatch(
            label.width(),
            label.height(),
            instances.width(),
            instances.height(),
        ));
    }
    let (w, h) = (label.width(), label.height());
    let mut report = PairReport::default();
    let mut seen: BTreeSet<(u8, u32)> = BTreeSet::new();

    for y in 0..h {
        for x in 0..w {
            let lab = label.get(x, y);
            let id = instances.get(x, y);
            if lab == IGNORE_LABEL || id == IGNORE_INSTANCE {
                if (lab == IGNORE_LABEL) != (id == IGNORE_INSTANCE) {
                    PairReport::record(
                        &mut report.mismatch_samples,
                        &mut report.class_mismatches,
                        x,
                        y,
                        format!("label {lab} vs instance id {id}: ignore on one side only"),
                    );
                }
                continue;
            }
            // Raw split so each failure mode lands in its own bucket.
            let (class, index) = if id >= INSTANCE_BASE {
                ((id / INSTANCE_BASE), id % INSTANCE_BASE)
            } else {
                (id, 0)
            };
            if class > u8::MAX as u32 || !registry.contains(class as u8) {
                PairReport::record(
                    &mut report.undecodable_samples,
                    &mut report.undecodable,
                    x,
                    y,
                    format!("id {id} decodes to unknown class {class}"),
                );
                continue;
            }
            let class = class as u8;
            if index > 0 && !registry.has_instances(class) {
                PairReport::record(
                    &mut report.stuff_samples,
                    &mut report.stuff_with_index,
                    x,
                    y,
                    format!("id {id} puts index {index} on stuff class {class}"),
                );
                continue;
            }
            if class != lab {
                PairReport::record(
                    &mut report.mismatch_samples,
                    &mut report.class_mismatches,
                    x,
                    y,
                    format!("label says {lab}, instance id {id} says {class}"),
                );
                continue;
            }
            if index > 0 && seen.insert((class, index)) {
                *report.instances_per_class.entry(class).or_insert(0) += 1;
            }
        }
    }
    Ok(report)
}
