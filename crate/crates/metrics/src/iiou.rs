//! Instance-size-weighted IoU over instance classes.
//!
//! Each ground-truth instance of class c with area `a` weights its TP and FN
//! pixels by `avg_sizes[c] / a`; false positives count unweighted. This
//! corrects the large-object bias of plain IoU: missing a distant pedestrian
//! costs as much as missing a nearby one.
//!
//! Tallies keep one integer record per ground-truth instance instead of
//! running f64 sums. Merging concatenates records, and finalization sorts
//! them into a canonical order before the weighted summation, so results are
//! bit-identical however the dataset was partitioned across workers.

use std::collections::BTreeMap;

use tspkit_data::{ClassRegistry, InstanceMap, LabelMap, IGNORE_LABEL, INSTANCE_BASE};

use crate::error::{MetricsError, Result};

/// Integer evidence for one ground-truth instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct InstanceRecord {
    pub image_id: String,
    pub class_id: u8,
    pub instance_index: u32,
    /// Ground-truth pixels of this instance.
    pub area: u64,
    /// Of those, pixels predicted as the instance's class.
    pub tp: u64,
}

/// Mergeable accumulator for iIoU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedTallies {
    k: usize,
    /// Unweighted false-positive pixels per class.
    fp: Vec<u64>,
    records: Vec<InstanceRecord>,
}

impl WeightedTallies {
    pub fn new(num_classes: usize) -> WeightedTallies {
        WeightedTallies {
            k: num_classes,
            fp: vec![0; num_classes],
            records: Vec::new(),
        }
    }

    pub fn records(&self) -> &[InstanceRecord] {
        &self.records
    }

    pub fn false_positives(&self, class: u8) -> u64 {
        self.fp[class as usize]
    }

    /// Scores one image. `image_id` must be unique within the evaluation;
    /// it keys the canonical summation order.
    pub fn accumulate(
        &mut self,
        image_id: &str,
        gt_label: &LabelMap,
        gt_instances: &InstanceMap,
        pred: &LabelMap,
        registry: &ClassRegistry,
    ) -> Result<()> {
        if gt_label.width() != pred.width() || gt_label.height() != pred.height() {
            return Err(MetricsError::ExtentMismatch(
                gt_label.width(),
                gt_label.height(),
                pred.width(),
                pred.height(),
            ));
        }
        if gt_label.width() != gt_instances.width() || gt_label.height() != gt_instances.height() {
            return Err(MetricsError::ExtentMismatch(
                gt_label.width(),
                gt_label.height(),
                gt_instances.width(),
                gt_instances.height(),
            ));
        }
        let w = gt_label.width();
        let mut per_instance: BTreeMap<(u8, u32), (u64, u64)> = BTreeMap::new();
        for (i, ((&g, &id), &p)) in gt_label
            .pixels()
            .iter()
            .zip(gt_instances.pixels())
            .zip(pred.pixels())
            .enumerate()
        {
            if g == IGNORE_LABEL {
                continue;
            }
            if p as usize >= self.k {
                return Err(MetricsError::InvalidPrediction {
                    x: i % w,
                    y: i / w,
                    id: p as u32,
                    classes: self.k,
                });
            }
            if registry.has_instances(p) && p != g {
                self.fp[p as usize] += 1;
            }
            if id >= INSTANCE_BASE {
                let (class, index) = ((id / INSTANCE_BASE) as u8, id % INSTANCE_BASE);
                let slot = per_instance.entry((class, index)).or_insert((0, 0));
                slot.0 += 1;
                if p == class {
                    slot.1 += 1;
                }
            }
        }
        for ((class_id, instance_index), (area, tp)) in per_instance {
            self.records.push(InstanceRecord {
                image_id: image_id.to_string(),
                class_id,
                instance_index,
                area,
                tp,
            });
        }
        Ok(())
    }

    /// Concatenates evidence; commutative up to record order, which
    /// finalization canonicalizes away.
    pub fn merge(&mut self, other: &WeightedTallies) -> Result<()> {
        if self.k != other.k {
            return Err(MetricsError::ClassCountMismatch(self.k, other.k));
        }
        for (a, b) in self.fp.iter_mut().zip(&other.fp) {
            *a += *b;
        }
        self.records.extend(other.records.iter().cloned());
        Ok(())
    }

    /// Weighted scores. `avg_sizes` must cover every class that has
    /// ground-truth instances (see [`average_instance_sizes`]).
    pub fn finalize(&self, avg_sizes: &BTreeMap<u8, f64>) -> Result<IiouResult> {
        let mut records = self.records.clone();
        records.sort();
        let mut per_class: BTreeMap<u8, IiouClass> = BTreeMap::new();
        for r in &records {
            let avg = *avg_sizes
                .get(&r.class_id)
                .ok_or(MetricsError::MissingAverageSize(r.class_id))?;
            let weight = avg / r.area as f64;
            let slot = per_class.entry(r.class_id).or_insert_with(|| IiouClass {
                itp: 0.0,
                ifn: 0.0,
                fp: 0,
                iiou: 0.0,
            });
            slot.itp += weight * r.tp as f64;
            slot.ifn += weight * (r.area - r.tp) as f64;
        }
        // Classes that were predicted somewhere but have no gt instances
        // still participate (their iIoU is 0).
        for (c, &fp) in self.fp.iter().enumerate() {
            if fp > 0 {
                per_class.entry(c as u8).or_insert_with(|| IiouClass {
                    itp: 0.0,
                    ifn: 0.0,
                    fp: 0,
                    iiou: 0.0,
                });
            }
        }
        let mut sum = 0.0;
        for (&c, slot) in per_class.iter_mut() {
            slot.fp = self.fp[c as usize];
            slot.iiou = slot.itp / (slot.itp + slot.fp as f64 + slot.ifn);
            sum += slot.iiou;
        }
        let mean = if per_class.is_empty() {
            None
        } else {
            Some(sum / per_class.len() as f64)
        };
        Ok(IiouResult { per_class, mean })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IiouClass {
    pub itp: f64,
    pub ifn: f64,
    pub fp: u64,
    pub iiou: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IiouResult {
    /// Instance classes present in gt or prediction.
    pub per_class: BTreeMap<u8, IiouClass>,
    /// Mean over present classes; None when no instance class appears.
    pub mean: Option<f64>,
}

/// Mean ground-truth instance pixel area per class, over a whole evaluation
/// split. Classes with no instances are omitted. Integer sums make the
/// result independent of image order and partitioning.
pub fn average_instance_sizes<'a, I>(maps: I) -> BTreeMap<u8, f64>
where
    I: IntoIterator<Item = &'a InstanceMap>,
{
    let mut area: BTreeMap<u8, u64> = BTreeMap::new();
    let mut count: BTreeMap<u8, u64> = BTreeMap::new();
    for map in maps {
        let mut per_instance: BTreeMap<(u8, u32), u64> = BTreeMap::new();
        for &id in map.pixels() {
            if id >= INSTANCE_BASE {
                *per_instance
                    .entry(((id / INSTANCE_BASE) as u8, id % INSTANCE_BASE))
                    .or_insert(0) += 1;
            }
        }
        for ((class, _), a) in per_instance {
            *area.entry(class).or_insert(0) += a;
            *count.entry(class).or_insert(0) += 1;
        }
    }
    area.into_iter()
        .map(|(c, total)| (c, total as f64 / count[&c] as f64))
        .collect()
}
