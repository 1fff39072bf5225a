//! Semantic label maps and encoded instance maps.

use crate::error::{DataError, Result};
use crate::registry::ClassRegistry;

/// Pixel value excluded from every loss, metric and statistic.
pub const IGNORE_LABEL: u8 = 255;
/// Matching ignore value in instance maps.
pub const IGNORE_INSTANCE: u32 = 255;

/// Instance ids are `class_id * 1000 + index` with `1 <= index <= 999`;
/// bare class ids mark stuff pixels.
pub const INSTANCE_BASE: u32 = 1000;
pub const MAX_INSTANCE_INDEX: u32 = INSTANCE_BASE - 1;

/// H×W map of u8 class ids, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<LabelMap> {
        if width == 0 || height == 0 {
            return Err(DataError::EmptyMap(width, height));
        }
        if pixels.len() != width * height {
            return Err(DataError::Invalid(format!(
                "{}x{} label map needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        Ok(LabelMap {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<LabelMap> {
        LabelMap::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    /// Every non-ignore pixel must name a registry class; reports the first
    /// offender with its coordinates.
    pub fn validate(&self, registry: &ClassRegistry, context: &str) -> Result<()> {
        for (i, &p) in self.pixels.iter().enumerate() {
            if p != IGNORE_LABEL && !registry.contains(p) {
                return Err(DataError::InvalidPixel {
                    context: context.to_string(),
                    id: p as u32,
                    x: i % self.width,
                    y: i / self.width,
                    reason: format!(
                        "class id outside the {}-class registry",
                        registry.num_classes()
                    ),
                });
            }
        }
        Ok(())
    }

    /// Nearest-neighbour downsample: output (x, y) reads input
    /// (x·W/w, y·H/h), truncated.
    pub fn downsample_nearest(&self, width: usize, height: usize) -> Result<LabelMap> {
        if width == 0 || height == 0 {
            return Err(DataError::EmptyMap(width, height));
        }
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            let sy = y * self.height / height;
            for x in 0..width {
                let sx = x * self.width / width;
                pixels.push(self.pixels[sy * self.width + sx]);
            }
        }
        LabelMap::new(width, height, pixels)
    }

    /// Nearest-neighbour upsample to a larger extent (same sampling rule).
    pub fn upsample_nearest(&self, width: usize, height: usize) -> Result<LabelMap> {
        self.downsample_nearest(width, height)
    }
}

/// H×W map of u32 encoded instance ids, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMap {
    width: usize,
    height: usize,
    pixels: Vec<u32>,
}

impl InstanceMap {
    pub fn new(width: usize, height: usize, pixels: Vec<u32>) -> Result<InstanceMap> {
        if width == 0 || height == 0 {
            return Err(DataError::EmptyMap(width, height));
        }
        if pixels.len() != width * height {
            return Err(DataError::Invalid(format!(
                "{}x{} instance map needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        Ok(InstanceMap {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u32) -> Result<InstanceMap> {
        InstanceMap::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u32] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u32) {
        self.pixels[y * self.width + x] = value;
    }
}

/// Canonical id for (class, index). Index 0 encodes a stuff pixel.
pub fn encode_instance_id(
    registry: &ClassRegistry,
    class_id: u8,
    instance_index: u32,
) -> Result<u32> {
    if !registry.contains(class_id) {
        return Err(DataError::InvalidInstanceId {
            id: class_id as u32,
            reason: format!("class {class_id} is not in the registry"),
        });
    }
    if instance_index == 0 {
        return Ok(class_id as u32);
    }
    if !registry.has_instances(class_id) {
        return Err(DataError::InvalidInstanceId {
            id: class_id as u32,
            reason: format!("class {class_id} does not carry instances"),
        });
    }
    if instance_index > MAX_INSTANCE_INDEX {
        return Err(DataError::InvalidInstanceId {
            id: instance_index,
            reason: format!("instance index exceeds {MAX_INSTANCE_INDEX}"),
        });
    }
    Ok(class_id as u32 * INSTANCE_BASE + instance_index)
}

/// Inverse of [`encode_instance_id`]: `(id / 1000, id % 1000)` for ids of
/// instance pixels, `(id, 0)` otherwise. Rejects non-canonical and
/// out-of-registry ids (including the ignore value).
pub fn decode_instance_id(id: u32, registry: &ClassRegistry) -> Result<(u8, u32)> {
    if id < INSTANCE_BASE {
        if id <= u8::MAX as u32 && registry.contains(id as u8) {
            return Ok((id as u8, 0));
        }
        return Err(DataError::InvalidInstanceId {
            id,
            reason: "bare id is not a registry class".into(),
        });
    }
    let class = id / INSTANCE_BASE;
    let index = id % INSTANCE_BASE;
    if class > u8::MAX as u32 || !registry.contains(class as u8) {
        return Err(DataError::InvalidInstanceId {
            id,
            reason: format!("decoded class {class} is not in the registry"),
        });
    }
    if index == 0 {
        return Err(DataError::InvalidInstanceId {
            id,
            reason: "index 0 must be encoded as the bare class id".into(),
        });
    }
    if !registry.has_instances(class as u8) {
        return Err(DataError::InvalidInstanceId {
            id,
            reason: format!("class {class} does not carry instances"),
        });
    }
    Ok((class as u8, index))
}
