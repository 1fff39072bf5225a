//! Grayscale export of per-token attention maps.

use std::path::{Path, PathBuf};

use image::{GrayImage, ImageFormat};
use tspkit_tensor::Tensor;

use crate::error::{DrdError, Result};

/// Writes one 8-bit grayscale PNG per token row of `maps` (N×HW), min-max
/// normalized to [0, 255]. A constant row produces an all-zero image.
/// Files are named `token_0.png` … `token_{N-1}.png`.
pub fn export_attention_maps(
    maps: &Tensor,
    height: usize,
    width: usize,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let shape = maps.shape();
    if shape.len() != 2 || shape[1] != height * width {
        return Err(DrdError::Export(format!(
            "maps shape {shape:?} does not match {height}x{width}"
        )));
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| DrdError::Export(format!("{}: {e}", out_dir.display())))?;
    let data = maps.to_vec();
    let mut written = Vec::with_capacity(shape[0]);
    for (i, row) in data.chunks_exact(height * width).enumerate() {
        let pixels = normalize_row(row);
        let img = GrayImage::from_raw(width as u32, height as u32, pixels)
            .expect("extent matches buffer");
        let path = out_dir.join(format!("token_{i}.png"));
        img.save_with_format(&path, ImageFormat::Png)
            .map_err(|e| DrdError::Export(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}

/// Min-max scaling to u8; constant rows map to zero.
pub fn normalize_row(row: &[f64]) -> Vec<u8> {
    let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return vec![0; row.len()];
    }
    row.iter()
        .map(|v| ((v - min) / (max - min) * 255.0).round() as u8)
        .collect()
}
