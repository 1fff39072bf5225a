//! Full-batch gradient-descent training on synthetic scenes.

use tspkit_data::{io::render_rgb, AnnotatedImage, LabelMap, IGNORE_LABEL};
use tspkit_tensor::{Tensor, TensorError};

use crate::config::DrdConfig;
use crate::decoder::{argmax_label_map, drd_forward};
use crate::error::{DrdError, Result};
use crate::loss::cross_entropy_loss;
use crate::params::DrdParams;

pub struct TrainOutcome {
    pub params: DrdParams,
    /// Mean loss at the start of each step, before that step's update.
    pub losses: Vec<f64>,
    /// Pixel accuracy at logits resolution over the training set, after the
    /// final update.
    pub pixel_accuracy: f64,
}

/// Converts the flat-color render of a label map into a centered 1×3×H×W
/// input in [-1, 1].
pub fn image_tensor(label: &LabelMap) -> Result<Tensor> {
    let rgb = render_rgb(label);
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let raw = rgb.into_raw();
    let mut data = vec![0.0; 3 * h * w];
    for (i, px) in raw.chunks_exact(3).enumerate() {
        for c in 0..3 {
            data[c * h * w + i] = px[c] as f64 / 127.5 - 1.0;
        }
    }
    Ok(Tensor::from_vec(data, &[1, 3, h, w])?)
}

/// Plain full-batch gradient descent with a fixed learning rate.
/// Deterministic for a given (seed, config, dataset).
pub fn train_toy(
    images: &[AnnotatedImage],
    config: &DrdConfig,
    steps: usize,
    lr: f64,
    seed: u64,
) -> Result<TrainOutcome> {
    config.validate()?;
    if images.is_empty() {
        return Err(DrdError::Config("empty training set".into()));
    }
    let params = DrdParams::init(config, seed)?;
    let inputs: Vec<Tensor> = images
        .iter()
        .map(|img| image_tensor(&img.label))
        .collect::<Result<_>>()?;
    let batch = images.len() as f64;

    let mut losses = Vec::with_capacity(steps);
    for step in 0..steps {
        let mut total = 0.0;
        for (img, input) in images.iter().zip(&inputs) {
            let logits = drd_forward(input, &params, config)?;
            let loss = cross_entropy_loss(&logits, &[&img.label])?
                .scale(1.0 / batch)
                .map_err(|e| diverged(e, step))?;
            total += loss.item()?;
            loss.backward()?;
        }
        if !total.is_finite() {
            return Err(DrdError::Diverged { step });
        }
        losses.push(total);
        if lr != 0.0 {
            params.sgd_step(lr)?;
        }
        params.zero_grad();
    }

    let pixel_accuracy = training_accuracy(images, &inputs, &params, config)?;
    Ok(TrainOutcome {
        params,
        losses,
        pixel_accuracy,
    })
}

fn diverged(e: TensorError, step: usize) -> DrdError {
    match e {
        TensorError::NonFinite { .. } => DrdError::Diverged { step },
        other => DrdError::Tensor(other),
    }
}

/// Pixel accuracy at logits resolution against nearest-downsampled targets.
pub fn training_accuracy(
    images: &[AnnotatedImage],
    inputs: &[Tensor],
    params: &DrdParams,
    config: &DrdConfig,
) -> Result<f64> {
    let mut correct = 0u64;
    let mut counted = 0u64;
    for (img, input) in images.iter().zip(inputs) {
        let logits = drd_forward(input, params, config)?;
        let shape = logits.shape();
        let pred = argmax_label_map(&logits, 0)?;
        let target = img.label.downsample_nearest(shape[3], shape[2])?;
        for (p, t) in pred.pixels().iter().zip(target.pixels()) {
            if *t == IGNORE_LABEL {
                continue;
            }
            counted += 1;
            if p == t {
                correct += 1;
            }
        }
    }
    if counted == 0 {
        return Err(DrdError::Config("no labelled pixels to score".into()));
    }
    Ok(correct as f64 / counted as f64)
}
