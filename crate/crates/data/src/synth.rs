//! Deterministic synthetic scenes: a road band plus non-overlapping
//! participant rectangles, with a placement ledger for cross-checking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::annotated::{AnnotatedImage, Split, Weather};
use crate::error::{DataError, Result};
use crate::maps::{encode_instance_id, InstanceMap, LabelMap, MAX_INSTANCE_INDEX};
use crate::registry::ClassRegistry;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub count: usize,
    pub width: usize,
    pub height: usize,
    /// Expected traffic participants per image. The integer part is placed
    /// always, the fractional part with matching probability.
    pub density: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            count: 8,
            width: 64,
            height: 64,
            density: 6.0,
        }
    }
}

/// One placed participant rectangle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub class_id: u8,
    pub instance_index: u32,
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Placement {
    pub fn area(&self) -> u64 {
        (self.w * self.h) as u64
    }

    fn overlaps(&self, other: &Placement) -> bool {
        self.x < other.x + other.w
            && other.x < self.x + self.w
            && self.y < other.y + other.h
            && other.y < self.y + self.h
    }
}

/// Generated images plus the ground-truth ledger of placements, parallel to
/// `images`.
#[derive(Debug, Clone)]
pub struct SyntheticSet {
    pub images: Vec<AnnotatedImage>,
    pub ledger: Vec<Vec<Placement>>,
}

/// Placement attempts per instance before giving up on the density.
const MAX_TRIES: usize = 200;

/// Sampling weight for a participant class; cars dominate, humans follow.
fn class_weight(name: &str) -> f64 {
    match name {
        "car" => 4.0,
        "person" => 2.0,
        _ => 1.0,
    }
}

pub fn generate_synthetic(cfg: &SynthConfig, registry: &ClassRegistry) -> Result<SyntheticSet> {
    if cfg.count == 0 {
        return Err(DataError::Synthesis("count must be >= 1".into()));
    }
    if cfg.width < 8 || cfg.height < 8 {
        return Err(DataError::Synthesis(format!(
            "extent {}x{} is too small to place scenes",
            cfg.width, cfg.height
        )));
    }
    if !(cfg.density.is_finite() && cfg.density >= 0.0) {
        return Err(DataError::Synthesis(format!(
            "density {} must be finite and >= 0",
            cfg.density
        )));
    }
    let participants: Vec<(u8, f64)> = registry
        .participants()
        .map(|c| (c.id, class_weight(&c.name)))
        .collect();
    if participants.is_empty() && cfg.density > 0.0 {
        return Err(DataError::Synthesis(
            "registry has no participant classes but density > 0".into(),
        ));
    }
    let background = registry
        .classes()
        .iter()
        .find(|c| !c.is_road && !c.has_instances)
        .map(|c| c.id)
        .unwrap_or(0);
    let weight_total: f64 = participants.iter().map(|(_, w)| w).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut images = Vec::with_capacity(cfg.count);
    let mut ledger = Vec::with_capacity(cfg.count);

    for i in 0..cfg.count {
        let image_id = format!("synth_{i:06}");
        let split = match i % 10 {
            0..=4 => Split::Train,
            5 | 6 => Split::Val,
            _ => Split::Test,
        };
        let scene_id = rng.random_range(0..600u32);
        let weather = Weather::ALL[rng.random_range(0..Weather::ALL.len())];

        let mut label = LabelMap::filled(cfg.width, cfg.height, background)?;
        if let Some(&road) = registry.road_ids().first() {
            let top = rng.random_range(cfg.height * 3 / 10..=cfg.height / 2);
            let bottom = rng.random_range(cfg.height * 7 / 10..=cfg.height * 9 / 10);
            for y in top..bottom {
                for x in 0..cfg.width {
                    label.set(x, y, road);
                }
            }
        }

        let wanted =
            cfg.density.floor() as usize + usize::from(rng.random_bool(cfg.density.fract()));
        let mut placements: Vec<Placement> = Vec::with_capacity(wanted);
        let mut next_index = vec![1u32; registry.num_classes()];
        for _ in 0..wanted {
            let mut pick = rng.random_range(0.0..weight_total);
            let mut class_id = participants[0].0;
            for (id, w) in &participants {
                class_id = *id;
                if pick < *w {
                    break;
                }
                pick -= *w;
            }
            let index = next_index[class_id as usize];
            if index > MAX_INSTANCE_INDEX {
                return Err(DataError::Synthesis(format!(
                    "image {image_id}: more than {MAX_INSTANCE_INDEX} instances of class {class_id}"
                )));
            }

            let max_w = (cfg.width / 4).max(3);
            let max_h = (cfg.height / 4).max(3);
            let mut placed = None;
            for _ in 0..MAX_TRIES {
                let w = rng.random_range(2..=max_w);
                let h = rng.random_range(2..=max_h);
                let x = rng.random_range(0..=cfg.width - w);
                let y = rng.random_range(0..=cfg.height - h);
                let cand = Placement {
                    class_id,
                    instance_index: index,
                    x,
                    y,
                    w,
                    h,
                };
                if placements.iter().all(|p| !p.overlaps(&cand)) {
                    placed = Some(cand);
                    break;
                }
            }
            let Some(p) = placed else {
                return Err(DataError::Synthesis(format!(
                    "image {image_id}: could not place participant {} of {wanted} after {MAX_TRIES} tries (density {} too high for {}x{})",
                    placements.len() + 1,
                    cfg.density,
                    cfg.width,
                    cfg.height
                )));
            };
            next_index[class_id as usize] += 1;
            placements.push(p);
        }
        // Participants draw over the band; their rectangles never overlap
        // each other, so drawing order is irrelevant.
        let mut instances = InstanceMap::new(
            cfg.width,
            cfg.height,
            label.pixels().iter().map(|&p| p as u32).collect(),
        )?;
        for p in &placements {
            let id = encode_instance_id(registry, p.class_id, p.instance_index)?;
            for y in p.y..p.y + p.h {
                for x in p.x..p.x + p.w {
                    label.set(x, y, p.class_id);
                    instances.set(x, y, id);
                }
            }
        }

        images.push(AnnotatedImage {
            image_id,
            label,
            instances,
            split,
            scene_id,
            weather,
        });
        ledger.push(placements);
    }
    Ok(SyntheticSet { images, ledger })
}
