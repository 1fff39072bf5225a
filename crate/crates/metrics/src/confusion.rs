//! Pixel confusion matrix and mIoU.

use tspkit_data::{LabelMap, IGNORE_LABEL};

use crate::error::{MetricsError, Result};

/// K×K matrix of pixel counts; entry (gt, pred) counts pixels with ground
/// truth `gt` predicted as `pred`. Ignore pixels never enter. Matrices over
/// disjoint image sets add, so evaluation distributes over any partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> ConfusionMatrix {
        ConfusionMatrix {
            k: num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn count(&self, gt: u8, pred: u8) -> u64 {
        self.counts[gt as usize * self.k + pred as usize]
    }

    /// Total evaluated (non-ignored) pixels.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Ground-truth pixels of one class (row sum).
    pub fn gt_pixels(&self, class: u8) -> u64 {
        self.counts[class as usize * self.k..(class as usize + 1) * self.k]
            .iter()
            .sum()
    }

    fn pred_pixels(&self, class: u8) -> u64 {
        (0..self.k)
            .map(|g| self.counts[g * self.k + class as usize])
            .sum()
    }

    /// Adds the per-pixel counts of one gt/pred pair. Ground-truth 255
    /// pixels are skipped; the prediction must contain only class ids.
    pub fn accumulate(&mut self, gt: &LabelMap, pred: &LabelMap) -> Result<()> {
        if gt.width() != pred.width() || gt.height() != pred.height() {
            return Err(MetricsError::ExtentMismatch(
                gt.width(),
                gt.height(),
                pred.width(),
                pred.height(),
            ));
        }
        let w = gt.width();
        for (i, (&g, &p)) in gt.pixels().iter().zip(pred.pixels()).enumerate() {
            if g == IGNORE_LABEL {
                continue;
            }
            if g as usize >= self.k {
                return Err(MetricsError::InvalidGroundTruth {
                    x: i % w,
                    y: i / w,
                    id: g as u32,
                    classes: self.k,
                });
            }
            if p as usize >= self.k {
                return Err(MetricsError::InvalidPrediction {
                    x: i % w,
                    y: i / w,
                    id: p as u32,
                    classes: self.k,
                });
            }
            self.counts[g as usize * self.k + p as usize] += 1;
        }
        Ok(())
    }

    /// Entry-wise sum; merging evaluations equals evaluating the union.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.k != other.k {
            return Err(MetricsError::ClassCountMismatch(self.k, other.k));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += *b;
        }
        Ok(())
    }

    /// Per-class IoU (None for classes absent from both gt and pred) and
    /// their mean over present classes.
    pub fn miou(&self) -> Result<MiouResult> {
        let mut per_class = Vec::with_capacity(self.k);
        let mut sum = 0.0;
        let mut present = 0u32;
        for c in 0..self.k {
            let tp = self.counts[c * self.k + c];
            let denom = self.gt_pixels(c as u8) + self.pred_pixels(c as u8) - tp;
            if denom == 0 {
                per_class.push(None);
                continue;
            }
            let iou = tp as f64 / denom as f64;
            sum += iou;
            present += 1;
            per_class.push(Some(iou));
        }
        if present == 0 {
            return Err(MetricsError::NoClassesPresent);
        }
        Ok(MiouResult {
            per_class,
            mean: sum / present as f64,
        })
    }
}

#[derive(Debug, Clone)]
pub struct MiouResult {
    pub per_class: Vec<Option<f64>>,
    pub mean: f64,
}
