//! End-to-end decoder forward: stub encoder, fusion, per-image region
//! refinement, and the final projection to class logits at ×8 resolution.

use tspkit_data::LabelMap;
use tspkit_tensor::Tensor;

use crate::config::DrdConfig;
use crate::encoder::encoder_forward;
use crate::error::{DrdError, Result};
use crate::fusion::fusion_forward;
use crate::params::DrdParams;
use crate::rrm::{region_refine_forward, RrmOutput};

pub struct DrdForwardOutput {
    /// B×K×H/8×W/8 class logits.
    pub logits: Tensor,
    /// Per-batch-item region refinement outputs (attention maps etc.).
    pub rrm: Vec<RrmOutput>,
}

/// `image`: B×3×H×W with H, W divisible by 16.
pub fn drd_forward_full(
    image: &Tensor,
    params: &DrdParams,
    config: &DrdConfig,
) -> Result<DrdForwardOutput> {
    config.validate()?;
    let shape = image.shape();
    if shape.len() != 4 || shape[1] != 3 {
        return Err(DrdError::Config(format!(
            "expected a B×3×H×W image, got {shape:?}"
        )));
    }
    let (h, w) = (shape[2], shape[3]);
    if h % 16 != 0 || w % 16 != 0 {
        return Err(DrdError::Divisibility(h, w));
    }
    let feats = encoder_forward(&params.encoder, image)?;
    let fused = fusion_forward(&feats.x8, &feats.x16, params)?;
    let fused_shape = fused.shape();
    let (batch, c, fh, fw) = (
        fused_shape[0],
        fused_shape[1],
        fused_shape[2],
        fused_shape[3],
    );
    let hw = fh * fw;

    let mut rrm_outputs = Vec::with_capacity(batch);
    let mut stacked = Vec::with_capacity(batch);
    for b in 0..batch {
        // C×h×w plane -> HW×C rows for attention
        let features = fused
            .narrow(0, b, 1)?
            .reshape(&[c, hw])?
            .transpose()?;
        let out = region_refine_forward(&features, &params.tokens, params, config)?;
        // S: N×HW×C -> token-major channel stack (N·C)×h×w
        let s = out
            .weighted_features
            .permute(&[0, 2, 1])?
            .reshape(&[1, config.num_region_tokens * c, fh, fw])?;
        stacked.push(s);
        rrm_outputs.push(out);
    }
    let features = if stacked.len() == 1 {
        stacked.pop().expect("one element")
    } else {
        Tensor::concat(&stacked, 0)?
    };
    let logits = params.final_proj.forward(&features)?;
    Ok(DrdForwardOutput {
        logits,
        rrm: rrm_outputs,
    })
}

pub fn drd_forward(image: &Tensor, params: &DrdParams, config: &DrdConfig) -> Result<Tensor> {
    Ok(drd_forward_full(image, params, config)?.logits)
}

/// Argmax prediction upsampled to `(out_w, out_h)` by nearest neighbour.
/// The image batch must be 1.
pub fn predict_label_map(
    image: &Tensor,
    params: &DrdParams,
    config: &DrdConfig,
    out_w: usize,
    out_h: usize,
) -> Result<LabelMap> {
    let logits = drd_forward(image, params, config)?;
    let shape = logits.shape();
    if shape[0] != 1 {
        return Err(DrdError::Config(format!(
            "predict_label_map expects batch 1, got {}",
            shape[0]
        )));
    }
    let small = argmax_label_map(&logits, 0)?;
    Ok(small.upsample_nearest(out_w, out_h)?)
}

/// Per-pixel argmax over the class dimension of one batch item.
pub fn argmax_label_map(logits: &Tensor, batch_index: usize) -> Result<LabelMap> {
    let shape = logits.shape();
    let (k, h, w) = (shape[1], shape[2], shape[3]);
    let data = logits.to_vec();
    let plane = h * w;
    let base = batch_index * k * plane;
    let mut pixels = Vec::with_capacity(plane);
    for p in 0..plane {
        let mut best = 0usize;
        let mut best_v = f64::NEG_INFINITY;
        for c in 0..k {
            let v = data[base + c * plane + p];
            if v > best_v {
                best_v = v;
                best = c;
            }
        }
        pixels.push(best as u8);
    }
    Ok(LabelMap::new(w, h, pixels)?)
}
