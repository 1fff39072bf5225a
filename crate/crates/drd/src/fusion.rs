//! Encoder-decoder fusion: ASPP context over the ×16 features, upsampled and
//! fused with the projected ×8 skip features.

use tspkit_tensor::Tensor;

use crate::error::{DrdError, Result};
use crate::params::DrdParams;

/// `x8`: B×C×H/8×W/8 skip features, `x16`: B×C×H/16×W/16 deep features in an
/// exact 2:1 spatial ratio. Returns B×C×H/8×W/8.
pub fn fusion_forward(x8: &Tensor, x16: &Tensor, params: &DrdParams) -> Result<Tensor> {
    let s8 = x8.shape();
    let s16 = x16.shape();
    if s8.len() != 4 || s16.len() != 4 || s8[2] != 2 * s16[2] || s8[3] != 2 * s16[3] {
        return Err(DrdError::RatioMismatch(
            s8.get(2).copied().unwrap_or(0),
            s8.get(3).copied().unwrap_or(0),
            s16.get(2).copied().unwrap_or(0),
            s16.get(3).copied().unwrap_or(0),
        ));
    }
    let mut branch_outputs = Vec::with_capacity(params.aspp.branches.len());
    for branch in &params.aspp.branches {
        branch_outputs.push(branch.forward(x16)?.gelu()?);
    }
    let context = Tensor::concat(&branch_outputs, 1)?;
    let context = params.aspp.project.forward(&context)?.gelu()?;
    let upsampled = context.upsample_bilinear(s8[2], s8[3])?;
    let skip = params.skip_proj.forward(x8)?.gelu()?;
    let stacked = Tensor::concat(&[upsampled, skip], 1)?;
    Ok(params.fuse.forward(&stacked)?.gelu()?)
}
