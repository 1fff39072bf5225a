//! Cross-entropy over logits and label maps.

use tspkit_data::{LabelMap, IGNORE_LABEL};
use tspkit_tensor::Tensor;

use crate::error::{DrdError, Result};

/// Mean negative log-softmax over non-ignored pixels.
///
/// `logits` is B×K×h×w; each target label map is downsampled to h×w by
/// nearest neighbour when larger. Labels must be in [0, K) or the ignore
/// value 255; a target with every pixel ignored is an error.
pub fn cross_entropy_loss(logits: &Tensor, targets: &[&LabelMap]) -> Result<Tensor> {
    let shape = logits.shape();
    if shape.len() != 4 {
        return Err(DrdError::Config(format!(
            "expected B×K×h×w logits, got {shape:?}"
        )));
    }
    let (batch, k, h, w) = (shape[0], shape[1], shape[2], shape[3]);
    if targets.len() != batch {
        return Err(DrdError::Config(format!(
            "{} targets for a batch of {batch}",
            targets.len()
        )));
    }
    let mut rows = Vec::with_capacity(batch);
    let mut labels: Vec<Option<u32>> = Vec::with_capacity(batch * h * w);
    for (b, target) in targets.iter().enumerate() {
        let small;
        let target = if target.width() == w && target.height() == h {
            *target
        } else {
            small = target.downsample_nearest(w, h)?;
            &small
        };
        for y in 0..h {
            for x in 0..w {
                let id = target.get(x, y);
                if id == IGNORE_LABEL {
                    labels.push(None);
                } else if (id as usize) < k {
                    labels.push(Some(id as u32));
                } else {
                    return Err(DrdError::BadLabel {
                        x,
                        y,
                        id,
                        classes: k,
                    });
                }
            }
        }
        // K×(h·w) plane -> (h·w)×K rows
        rows.push(logits.narrow(0, b, 1)?.reshape(&[k, h * w])?.transpose()?);
    }
    let flat = if rows.len() == 1 {
        rows.pop().expect("one element")
    } else {
        Tensor::concat(&rows, 0)?
    };
    Ok(flat.cross_entropy(&labels)?)
}
