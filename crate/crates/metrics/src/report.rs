//! Rendered metric report: JSON model plus an aligned text table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use tspkit_data::ClassRegistry;

use crate::confusion::{ConfusionMatrix, MiouResult};
use crate::iiou::IiouResult;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricReport {
    pub per_class_iou: BTreeMap<String, f64>,
    pub miou: f64,
    pub per_class_iiou: BTreeMap<String, f64>,
    pub iiou: Option<f64>,
    pub pixel_counts: BTreeMap<String, u64>,
}

impl MetricReport {
    pub fn new(
        registry: &ClassRegistry,
        cm: &ConfusionMatrix,
        miou: &MiouResult,
        iiou: Option<&IiouResult>,
    ) -> MetricReport {
        let name = |id: u8| {
            registry
                .get(id)
                .map(|c| c.name.clone())
                .unwrap_or_else(|| format!("class {id}"))
        };
        let mut per_class_iou = BTreeMap::new();
        let mut pixel_counts = BTreeMap::new();
        for (c, iou) in miou.per_class.iter().enumerate() {
            if let Some(iou) = iou {
                per_class_iou.insert(name(c as u8), *iou);
            }
            let px = cm.gt_pixels(c as u8);
            if px > 0 {
                pixel_counts.insert(name(c as u8), px);
            }
        }
        let mut per_class_iiou = BTreeMap::new();
        if let Some(iiou) = iiou {
            for (&c, slot) in &iiou.per_class {
                per_class_iiou.insert(name(c), slot.iiou);
            }
        }
        MetricReport {
            per_class_iou,
            miou: miou.mean,
            per_class_iiou,
            iiou: iiou.and_then(|r| r.mean),
            pixel_counts,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable table, six decimals per value.
    pub fn render_table(&self) -> String {
        let width = self
            .per_class_iou
            .keys()
            .chain(self.per_class_iiou.keys())
            .map(|n| n.len())
            .max()
            .unwrap_or(5)
            .max("class".len());
        let mut out = String::new();
        out.push_str(&format!(
            "{:<width$}  {:>12}  {:>10}  {:>10}\n",
            "class", "gt pixels", "IoU", "iIoU"
        ));
        for (name, iou) in &self.per_class_iou {
            let px = self
                .pixel_counts
                .get(name)
                .map(|p| p.to_string())
                .unwrap_or_else(|| "0".into());
            let iiou = self
                .per_class_iiou
                .get(name)
                .map(|v| format!("{v:.6}"))
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{name:<width$}  {px:>12}  {iou:>10.6}  {iiou:>10}\n"
            ));
        }
        for (name, iiou) in &self.per_class_iiou {
            if !self.per_class_iou.contains_key(name) {
                out.push_str(&format!(
                    "{name:<width$}  {:>12}  {:>10}  {iiou:>10.6}\n",
                    "0", "-"
                ));
            }
        }
        let iiou_mean = self
            .iiou
            .map(|v| format!("{v:.6}"))
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<width$}  {:>12}  {:>10.6}  {iiou_mean:>10}\n",
            "mean", "-", self.miou
        ));
        out
    }
}
