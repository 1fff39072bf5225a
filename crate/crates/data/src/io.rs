//! On-disk format: PNG maps, the directory layout, and the dataset manifest.
//!
//! Layout under a dataset root:
//!
//! ```text
//! root/registry.tsv
//! root/manifest.json
//! root/{train,val,test}/images/<image_id>.png      8-bit RGB render
//! root/{train,val,test}/labels/<image_id>.png      8-bit grayscale class ids
//! root/{train,val,test}/instances/<image_id>.png   RGBA8 = little-endian u32 id
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage, RgbaImage};
use serde::{Deserialize, Serialize};

use crate::annotated::{AnnotatedImage, Split, Weather};
use crate::error::{DataError, Result};
use crate::maps::{InstanceMap, LabelMap, IGNORE_LABEL};
use crate::registry::ClassRegistry;

// ── single maps ─────────────────────────────────────────────────────────────

pub fn save_label_map(path: &Path, map: &LabelMap) -> Result<()> {
    let img = GrayImage::from_raw(map.width() as u32, map.height() as u32, map.pixels().to_vec())
        .expect("extent matches buffer");
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| DataError::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

/// Loads and validates a semantic label map.
///
/// The file must be a single-channel 8-bit PNG; any pixel outside the
/// registry (other than the ignore value 255) fails with its coordinates.
pub fn load_label_map(path: &Path, registry: &ClassRegistry) -> Result<LabelMap> {
    let img = open_image(path)?;
    let gray = match img {
        DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(DataError::WrongPixelFormat {
                path: path.to_path_buf(),
                expected: "single-channel 8-bit PNG",
                found: format!("{:?}", other.color()),
            })
        }
    };
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let map = LabelMap::new(w, h, gray.into_raw())?;
    map.validate(registry, &path.display().to_string())?;
    Ok(map)
}

pub fn save_instance_map(path: &Path, map: &InstanceMap) -> Result<()> {
    let mut raw = Vec::with_capacity(map.pixels().len() * 4);
    for &id in map.pixels() {
        raw.extend_from_slice(&id.to_le_bytes());
    }
    let img = RgbaImage::from_raw(map.width() as u32, map.height() as u32, raw)
        .expect("extent matches buffer");
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| DataError::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

/// Loads an instance map stored as RGBA8 (channels = little-endian u32 id).
/// Every non-ignore id must decode against the registry.
pub fn load_instance_map(path: &Path, registry: &ClassRegistry) -> Result<InstanceMap> {
    let img = open_image(path)?;
    let rgba = match img {
        DynamicImage::ImageRgba8(m) => m,
        other => {
            return Err(DataError::WrongPixelFormat {
                path: path.to_path_buf(),
                expected: "RGBA 8-bit PNG (little-endian u32 ids)",
                found: format!("{:?}", other.color()),
            })
        }
    };
    let (w, h) = (rgba.width() as usize, rgba.height() as usize);
    let raw = rgba.into_raw();
    let mut pixels = Vec::with_capacity(w * h);
    for chunk in raw.chunks_exact(4) {
        pixels.push(u32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
    }
    let map = InstanceMap::new(w, h, pixels)?;
    for (i, &id) in map.pixels().iter().enumerate() {
        if id == crate::maps::IGNORE_INSTANCE {
            continue;
        }
        if let Err(e) = crate::maps::decode_instance_id(id, registry) {
            return Err(DataError::InvalidPixel {
                context: path.display().to_string(),
                id,
                x: i % w,
                y: i / w,
                reason: e.to_string(),
            });
        }
    }
    Ok(map)
}

fn open_image(path: &Path) -> Result<DynamicImage> {
    image::ImageReader::open(path)
        .map_err(|e| DataError::io(path, e))?
        .decode()
        .map_err(|e| DataError::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

// ── class-id render ─────────────────────────────────────────────────────────

/// Deterministic display color for a class id (golden-angle hue walk).
pub fn class_color(id: u8) -> [u8; 3] {
    let hue = (id as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let sector = hue as usize % 6;
    let f = hue.fract();
    let (v, p) = (230.0, 45.0);
    let q = v - (v - p) * f;
    let t = p + (v - p) * f;
    let (r, g, b) = match sector {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [r as u8, g as u8, b as u8]
}

/// Flat-color RGB render of a label map; ignore pixels come out black.
pub fn render_rgb(label: &LabelMap) -> RgbImage {
    let (w, h) = (label.width(), label.height());
    let mut raw = Vec::with_capacity(w * h * 3);
    for &p in label.pixels() {
        let c = if p == IGNORE_LABEL {
            [0, 0, 0]
        } else {
            class_color(p)
        };
        raw.extend_from_slice(&c);
    }
    RgbImage::from_raw(w as u32, h as u32, raw).expect("extent matches buffer")
}

// ── manifest ────────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub split: Split,
    pub scene_id: u32,
    pub weather: Weather,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct Manifest {
    pub images: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| DataError::Manifest(e.to_string()))?;
        fs::write(path, json).map_err(|e| DataError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| DataError::Manifest(e.to_string()))
    }
}

// ── dataset layout ──────────────────────────────────────────────────────────

pub fn label_dir(root: &Path, split: Split) -> PathBuf {
    root.join(split.dir_name()).join("labels")
}

pub fn instance_dir(root: &Path, split: Split) -> PathBuf {
    root.join(split.dir_name()).join("instances")
}

pub fn image_dir(root: &Path, split: Split) -> PathBuf {
    root.join(split.dir_name()).join("images")
}

/// Writes the full layout: registry table, manifest, rendered RGB images,
/// label and instance PNGs.
pub fn save_dataset(root: &Path, images: &[AnnotatedImage], registry: &ClassRegistry) -> Result<()> {
    for split in Split::ALL {
        for dir in [
            image_dir(root, split),
            label_dir(root, split),
            instance_dir(root, split),
        ] {
            fs::create_dir_all(&dir).map_err(|e| DataError::io(&dir, e))?;
        }
    }
    registry.save(&root.join("registry.tsv"))?;
    let mut manifest = Manifest::default();
    for img in images {
        let file = format!("{}.png", img.image_id);
        save_label_map(&label_dir(root, img.split).join(&file), &img.label)?;
        save_instance_map(&instance_dir(root, img.split).join(&file), &img.instances)?;
        let rgb = render_rgb(&img.label);
        let img_path = image_dir(root, img.split).join(&file);
        rgb.save_with_format(&img_path, ImageFormat::Png)
            .map_err(|e| DataError::Decode {
                path: img_path.clone(),
                reason: e.to_string(),
            })?;
        manifest.images.push(ManifestEntry {
            id: img.image_id.clone(),
            split: img.split,
            scene_id: img.scene_id,
            weather: img.weather,
        });
    }
    manifest.images.sort_by(|a, b| a.id.cmp(&b.id));
    manifest.save(&root.join("manifest.json"))
}

/// Loads one split back from the layout, using the manifest for metadata.
pub fn load_split(root: &Path, split: Split, registry: &ClassRegistry) -> Result<Vec<AnnotatedImage>> {
    let manifest = Manifest::load(&root.join("manifest.json"))?;
    let mut out = Vec::new();
    for entry in manifest.images.iter().filter(|e| e.split == split) {
        let file = format!("{}.png", entry.id);
        let label = load_label_map(&label_dir(root, split).join(&file), registry)?;
        let instances = load_instance_map(&instance_dir(root, split).join(&file), registry)?;
        out.push(AnnotatedImage {
            image_id: entry.id.clone(),
            label,
            instances,
            split,
            scene_id: entry.scene_id,
            weather: entry.weather,
        });
    }
    Ok(out)
}

/// Sorted (stem, path) list of the `.png` files directly inside `dir`.
pub fn png_files_in(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| DataError::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| DataError::io(dir, e))?;
        let path = entry.path();
        if path.extension().is_some_and(|e| e == "png") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string(), path);
            }
        }
    }
    Ok(out.into_iter().collect())
}
