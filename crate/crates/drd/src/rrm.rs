//! Region refining module.
//!
//! Tokens query the flattened fusion features through multi-head
//! cross-attention and a token-only feed-forward block, then a second,
//! single-head attention turns the refined tokens into one spatial map per
//! token. Each map reweights the features via a broadcast product:
//! `S[i, j, k] = A[i, j] · F[j, k]`.
//!
//! Nothing in the module mixes information across tokens, so permuting the
//! token rows permutes the attention maps and the S blocks bit-exactly.

use tspkit_tensor::Tensor;

use crate::config::DrdConfig;
use crate::error::Result;
use crate::params::DrdParams;

pub struct RrmOutput {
    /// R_O, the refined tokens after attention and FFN residuals: N×C.
    pub refined_tokens: Tensor,
    /// A, one softmax-normalized map per token: N×HW.
    pub attention_maps: Tensor,
    /// S, the map-weighted features: N×HW×C.
    pub weighted_features: Tensor,
    /// Per-head token-update attention rows (each N×HW), for inspection.
    pub head_attention: Vec<Tensor>,
}

/// Broadcast combination of maps and features:
/// `(N×M, M×C) -> N×M×C` with `S[i,j,k] = A[i,j]·F[j,k]`.
pub fn combine_maps(maps: &Tensor, features: &Tensor) -> Result<Tensor> {
    let n = maps.shape()[0];
    let c = features.shape()[1];
    let lhs = maps.broadcast_last(c)?;
    let rhs = features.broadcast_first(n)?;
    Ok(lhs.mul(&rhs)?)
}

/// `features`: HW×C flattened fusion output; `tokens`: N×C.
pub fn region_refine_forward(
    features: &Tensor,
    tokens: &Tensor,
    params: &DrdParams,
    config: &DrdConfig,
) -> Result<RrmOutput> {
    config.validate()?;
    let c = config.channels;
    let heads = config.num_heads;
    let head_dim = config.head_dim();

    let queries = params.attn.query.forward(tokens)?;
    let keys = params.attn.key.forward(features)?;
    let values = params.attn.value.forward(features)?;

    let scale = config.attention_scale();
    let mut head_attention = Vec::with_capacity(heads);
    let mut head_outputs = Vec::with_capacity(heads);
    for h in 0..heads {
        let q = queries.narrow(1, h * head_dim, head_dim)?;
        let k = keys.narrow(1, h * head_dim, head_dim)?;
        let v = values.narrow(1, h * head_dim, head_dim)?;
        let probs = q.matmul(&k.transpose()?)?.scale(scale)?.softmax_lastdim()?;
        head_outputs.push(probs.matmul(&v)?);
        head_attention.push(probs);
    }
    let attended = Tensor::concat(&head_outputs, 1)?;
    let token_embed = params.attn.output.forward(&attended)?.add(tokens)?;

    let expanded = params.ffn.expand.forward(&token_embed)?.gelu()?;
    let refined_tokens = params.ffn.contract.forward(&expanded)?.add(&token_embed)?;

    let map_q = params.map_query.forward(&refined_tokens)?;
    let map_k = params.map_key.forward(features)?;
    let attention_maps = map_q
        .matmul(&map_k.transpose()?)?
        .scale(config.map_attention_scale())?
        .softmax_lastdim()?;

    let weighted_features = combine_maps(&attention_maps, features)?;
    debug_assert_eq!(
        weighted_features.shape(),
        vec![config.num_region_tokens, features.shape()[0], c]
    );

    Ok(RrmOutput {
        refined_tokens,
        attention_maps,
        weighted_features,
        head_attention,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::DrdError;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tspkit_tensor::{grad_check, GradCheckConfig};

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

    fn random_features(rng: &mut ChaCha8Rng, hw: usize, c: usize) -> Tensor {
        let data: Vec<f64> = (0..hw * c).map(|_| rng.random_range(-1.5..1.5)).collect();
        Tensor::from_vec(data, &[hw, c]).unwrap()
    }

    #[test]
    fn zero_features_leave_tokens_at_the_attention_residual() {
        let config = cfg();
        let params = DrdParams::init(&config, 5).unwrap();
        params.zero_residual_path();
        let features = Tensor::zeros(&[10, 8]).unwrap();
        let out = region_refine_forward(&features, &params.tokens, &params, &config).unwrap();
        assert_eq!(out.refined_tokens.to_vec(), params.tokens.to_vec());
    }

    #[test]
    fn residual_identity_is_bit_exact_even_with_nonzero_features() {
        // Zeroed value/FFN-output weights must make R_O == R exactly: the
        // value path contributes +0.0 everywhere.
        let config = cfg();
        let params = DrdParams::init(&config, 6).unwrap();
        params.zero_residual_path();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let features = random_features(&mut rng, 12, 8);
        let out = region_refine_forward(&features, &params.tokens, &params, &config).unwrap();
        let (got, want) = (out.refined_tokens.to_vec(), params.tokens.to_vec());
        for (g, w) in got.iter().zip(&want) {
            assert_eq!(g.to_bits(), w.to_bits());
        }
    }

    #[test]
    fn every_attention_row_sums_to_one() {
        let config = cfg();
        let params = DrdParams::init(&config, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hw = 14;
        let features = random_features(&mut rng, hw, 8);
        let out = region_refine_forward(&features, &params.tokens, &params, &config).unwrap();
        for maps in std::iter::once(&out.attention_maps).chain(out.head_attention.iter()) {
            for row in maps.to_vec().chunks(hw) {
                let sum: f64 = row.iter().sum();
                assert!((sum - 1.0).abs() <= 1e-9, "row sums to {sum}");
                assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }
    }

    #[test]
    fn one_hot_map_selects_exactly_one_feature_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, hw, c) = (3, 6, 4);
        let features = random_features(&mut rng, hw, c);
        let mut maps = vec![0.0; n * hw];
        let hot = [4usize, 0, 2];
        for (i, &j) in hot.iter().enumerate() {
            maps[i * hw + j] = 1.0;
        }
        let maps = Tensor::from_vec(maps, &[n, hw]).unwrap();
        let s = combine_maps(&maps, &features).unwrap().to_vec();
        let f = features.to_vec();
        for (i, &j) in hot.iter().enumerate() {
            for jj in 0..hw {
                for k in 0..c {
                    let got = s[(i * hw + jj) * c + k];
                    if jj == j {
                        assert_eq!(got.to_bits(), f[jj * c + k].to_bits());
                    } else {
                        assert_eq!(got, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn weighted_features_are_linear_in_features_with_maps_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let features = random_features(&mut rng, 9, 5);
        let maps_data: Vec<f64> = (0..2 * 9).map(|_| rng.random_range(0.0..1.0)).collect();
        let maps = Tensor::from_vec(maps_data, &[2, 9]).unwrap();
        let s1 = combine_maps(&maps, &features).unwrap().to_vec();
        let doubled = features.scale(2.0).unwrap();
        let s2 = combine_maps(&maps, &doubled).unwrap().to_vec();
        for (a, b) in s1.iter().zip(&s2) {
            assert!((2.0 * a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn token_permutation_permutes_maps_and_blocks_bit_exactly() {
        let config = cfg();
        let params = DrdParams::init(&config, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let hw = 10;
        let features = random_features(&mut rng, hw, 8);
        let base = region_refine_forward(&features, &params.tokens, &params, &config).unwrap();

        let perm = [2usize, 0, 1];
        let tok = params.tokens.to_vec();
        let c = config.channels;
        let permuted: Vec<f64> = perm
            .iter()
            .flat_map(|&i| tok[i * c..(i + 1) * c].to_vec())
            .collect();
        let permuted_tokens = Tensor::from_vec(permuted, &[3, c]).unwrap();
        let out = region_refine_forward(&features, &permuted_tokens, &params, &config).unwrap();

        let (a0, a1) = (base.attention_maps.to_vec(), out.attention_maps.to_vec());
        let (s0, s1) = (
            base.weighted_features.to_vec(),
            out.weighted_features.to_vec(),
        );
        let block = hw * c;
        for (new_row, &old_row) in perm.iter().enumerate() {
            for j in 0..hw {
                assert_eq!(
                    a1[new_row * hw + j].to_bits(),
                    a0[old_row * hw + j].to_bits()
                );
            }
            for j in 0..block {
                assert_eq!(
                    s1[new_row * block + j].to_bits(),
                    s0[old_row * block + j].to_bits()
                );
            }
        }
    }

    #[test]
    fn full_rrm_passes_grad_check() {
        let config = cfg();
        let params = DrdParams::init(&config, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let features = random_features(&mut rng, 6, 8).with_grad();
        let mut inputs = vec![features.clone(), params.tokens.clone()];
        for (name, t) in params.named_tensors() {
            if name.starts_with("rrm.") && name != "rrm.tokens" {
                inputs.push(t);
            }
        }
        let report = grad_check(
            |t| {
                let out = region_refine_forward(&t[0], &t[1], &params, &config)
                    .map_err(DrdError::into_tensor_error)?;
                // check through all three outputs at once
                let s_part = out.weighted_features.reshape(&[6 * 8 * 3])?;
                let a_part = out.attention_maps.reshape(&[3 * 6])?;
                let r_part = out.refined_tokens.reshape(&[3 * 8])?;
                Tensor::concat(&[s_part, a_part, r_part], 0)
            },
            &inputs,
            &GradCheckConfig {
                samples_per_tensor: Some(8),
                ..GradCheckConfig::default()
            },
        )
        .unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn literal_scale_changes_the_maps() {
        let config = cfg();
        let literal = DrdConfig {
            literal_sqrt_c: true,
            ..cfg()
        };
        let params = DrdParams::init(&config, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let features = random_features(&mut rng, 8, 8);
        let a = region_refine_forward(&features, &params.tokens, &params, &config).unwrap();
        let b = region_refine_forward(&features, &params.tokens, &params, &literal).unwrap();
        assert_ne!(
            a.refined_tokens.to_vec(),
            b.refined_tokens.to_vec(),
            "scaling convention must be observable"
        );
    }
}
