//! Gradient-check entry points over the decoder stages.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tspkit_tensor::{grad_check, GradCheckConfig, GradCheckReport, Tensor};

use crate::config::DrdConfig;
use crate::decoder::drd_forward;
use crate::error::{DrdError, Result};
use crate::fusion::fusion_forward;
use crate::params::DrdParams;
use crate::rrm::region_refine_forward;

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Result<Tensor> {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    Ok(Tensor::from_vec(data, shape)?.with_grad())
}

/// Fusion stage against finite differences, w.r.t. its inputs and the
/// fusion/ASPP parameters.
pub fn check_fusion(
    config: &DrdConfig,
    seed: u64,
    check: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let params = DrdParams::init(config, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5115));
    let c = config.channels;
    let mut inputs = vec![
        random_tensor(&mut rng, &[1, c, 4, 4], -1.0, 1.0)?,
        random_tensor(&mut rng, &[1, c, 2, 2], -1.0, 1.0)?,
    ];
    for (name, t) in params.named_tensors() {
        if name.starts_with("aspp") || name.starts_with("fusion") {
            inputs.push(t);
        }
    }
    grad_check(
        |t| fusion_forward(&t[0], &t[1], &params).map_err(DrdError::into_tensor_error),
        &inputs,
        check,
    )
    .map_err(DrdError::from)
}

/// Region refining module against finite differences, w.r.t. features,
/// tokens and every projection.
pub fn check_rrm(
    config: &DrdConfig,
    seed: u64,
    check: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let params = DrdParams::init(config, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0xacc0));
    let hw = 12;
    let features = random_tensor(&mut rng, &[hw, config.channels], -1.5, 1.5)?;
    let mut inputs = vec![features];
    for (name, t) in params.named_tensors() {
        if name.starts_with("rrm.") {
            inputs.push(t);
        }
    }
    let n = config.num_region_tokens;
    let c = config.channels;
    grad_check(
        |t| {
            let out = region_refine_forward(&t[0], &params.tokens, &params, config)
                .map_err(DrdError::into_tensor_error)?;
            let s = out.weighted_features.reshape(&[n * hw * c])?;
            let a = out.attention_maps.reshape(&[n * hw])?;
            let r = out.refined_tokens.reshape(&[n * c])?;
            Tensor::concat(&[s, a, r], 0)
        },
        &inputs,
        check,
    )
    .map_err(DrdError::from)
}

/// Whole decoder (stub encoder included) against finite differences, w.r.t.
/// the input image and every parameter.
pub fn check_end_to_end(
    config: &DrdConfig,
    seed: u64,
    input_size: usize,
    check: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let params = DrdParams::init(config, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0xe2e));
    let image = random_tensor(&mut rng, &[1, 3, input_size, input_size], 0.0, 1.0)?;
    let mut inputs = vec![image];
    inputs.extend(params.named_tensors().into_iter().map(|(_, t)| t));
    grad_check(
        |t| drd_forward(&t[0], &params, config).map_err(DrdError::into_tensor_error),
        &inputs,
        check,
    )
    .map_err(DrdError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> DrdConfig {
        DrdConfig {
            num_region_tokens: 3,
            num_heads: 2,
            channels: 8,
            num_classes: 4,
            aspp_dilations: vec![1, 2],
            ..DrdConfig::default()
        }
    }

    fn fast() -> GradCheckConfig {
        GradCheckConfig {
            samples_per_tensor: Some(5),
            ..GradCheckConfig::default()
        }
    }

    #[test]
    fn end_to_end_gradients_match_finite_differences() {
        let report = check_end_to_end(&cfg(), 1, 32, &fast()).unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn sabotaged_gradients_fail_the_check() {
        let check = GradCheckConfig {
            sabotage: Some(0.5),
            ..fast()
        };
        let report = check_end_to_end(&cfg(), 1, 32, &check).unwrap();
        assert!(!report.passed(), "sabotage must be detected: {report}");
    }

    #[test]
    fn impossibly_tight_tolerance_fails() {
        let check = GradCheckConfig {
            tolerance: 1e-12,
            ..fast()
        };
        let report = check_end_to_end(&cfg(), 1, 32, &check).unwrap();
        assert!(!report.passed(), "float noise exceeds 1e-12: {report}");
    }

    #[test]
    fn class_token_variant_also_passes() {
        let config = DrdConfig {
            num_heads: 2,
            channels: 8,
            num_classes: 4,
            aspp_dilations: vec![1, 2],
            ..DrdConfig::default()
        }
        .class_mode();
        let report = check_end_to_end(&config, 2, 32, &fast()).unwrap();
        assert!(report.passed(), "{report}");
    }
}
