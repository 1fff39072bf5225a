//! Learnable parameters of the decoder and the stub encoder.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tspkit_tensor::{serialize, Conv2d, ConvSpec, Linear, Tensor};

use crate::config::{DrdConfig, TokenMode};
use crate::error::{DrdError, Result};

/// Three strided conv stages producing ×4, ×8 and ×16 features.
pub struct StubEncoder {
    pub conv1: Conv2d,
    pub conv2: Conv2d,
    pub conv3: Conv2d,
}

/// Parallel dilated branches plus a 1×1 projection back to C channels.
pub struct Aspp {
    pub branches: Vec<Conv2d>,
    pub project: Conv2d,
}

/// Token-updating multi-head cross-attention projections.
pub struct CrossAttention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
}

/// Token feed-forward block, expansion factor 4.
pub struct FeedForward {
    pub expand: Linear,
    pub contract: Linear,
}

pub struct DrdParams {
    pub encoder: StubEncoder,
    pub aspp: Aspp,
    /// 1×1 projection of the ×8 skip features.
    pub skip_proj: Conv2d,
    /// 3×3 conv fusing [upsampled ASPP, skip] down to C channels.
    pub fuse: Conv2d,
    /// N learnable region tokens, N×C.
    pub tokens: Tensor,
    pub attn: CrossAttention,
    pub ffn: FeedForward,
    /// Map-producing projections (tokens / features).
    pub map_query: Linear,
    pub map_key: Linear,
    /// 1×1 conv from N·C channels to K logits; grouped by class in
    /// class-token mode.
    pub final_proj: Conv2d,
}

fn conv(
    cin: usize,
    cout: usize,
    k: usize,
    stride: usize,
    padding: usize,
    dilation: usize,
    groups: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Conv2d> {
    Conv2d::new(
        cin,
        cout,
        k,
        ConvSpec {
            stride,
            padding,
            dilation,
            groups,
        },
        rng,
    )
    .map_err(DrdError::from)
}

impl DrdParams {
    pub fn init(config: &DrdConfig, seed: u64) -> Result<DrdParams> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = config.channels;
        let n = config.num_region_tokens;
        let k = config.num_classes;

        let encoder = StubEncoder {
            conv1: conv(3, c, 5, 4, 2, 1, 1, &mut rng)?,
            conv2: conv(c, c, 3, 2, 1, 1, 1, &mut rng)?,
            conv3: conv(c, c, 3, 2, 1, 1, 1, &mut rng)?,
        };
        let branches = config
            .aspp_dilations
            .iter()
            .map(|&d| {
                if d == 1 {
                    conv(c, c, 1, 1, 0, 1, 1, &mut rng)
                } else {
                    conv(c, c, 3, 1, d, d, 1, &mut rng)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let aspp = Aspp {
            project: conv(config.aspp_dilations.len() * c, c, 1, 1, 0, 1, 1, &mut rng)?,
            branches,
        };
        let skip_proj = conv(c, c, 1, 1, 0, 1, 1, &mut rng)?;
        let fuse = conv(2 * c, c, 3, 1, 1, 1, 1, &mut rng)?;

        let normal = Normal::new(0.0, 0.02).expect("valid stddev");
        let tokens = loop {
            let data: Vec<f64> = (0..n * c).map(|_| normal.sample(&mut rng)).collect();
            let t = Tensor::from_vec(data, &[n, c])?.with_grad();
            if distinct_rows(&t) {
                break t;
            }
        };

        let attn = CrossAttention {
            query: Linear::new(c, c, &mut rng),
            key: Linear::new(c, c, &mut rng),
            value: Linear::new(c, c, &mut rng),
            output: Linear::new(c, c, &mut rng),
        };
        let ffn = FeedForward {
            expand: Linear::new(c, 4 * c, &mut rng),
            contract: Linear::new(4 * c, c, &mut rng),
        };
        let map_query = Linear::new(c, c, &mut rng);
        let map_key = Linear::new(c, c, &mut rng);
        let final_proj = match config.token_mode {
            TokenMode::Region => conv(n * c, k, 1, 1, 0, 1, 1, &mut rng)?,
            TokenMode::Class => conv(n * c, k, 1, 1, 0, 1, k, &mut rng)?,
        };
        // The broadcast product S = A ⊙ F scales its rows by attention
        // weights that average N/HW, so the final projection sees inputs far
        // below unit variance. Boost its init to compensate.
        let boosted: Vec<f64> = final_proj.weight.to_vec().iter().map(|v| v * 8.0).collect();
        final_proj.weight.set_data(boosted)?;

        Ok(DrdParams {
            encoder,
            aspp,
            skip_proj,
            fuse,
            tokens,
            attn,
            ffn,
            map_query,
            map_key,
            final_proj,
        })
    }

    /// Stable (name, tensor) listing; handles share storage with the params,
    /// so nudging an entry is visible to the next forward pass.
    pub fn named_tensors(&self) -> Vec<(String, Tensor)> {
        let mut out: Vec<(String, Tensor)> = Vec::new();
        let mut push = |name: &str, t: &Tensor| out.push((name.to_string(), t.clone()));
        let conv_entry = |push: &mut dyn FnMut(&str, &Tensor), name: &str, c: &Conv2d| {
            push(&format!("{name}.weight"), &c.weight);
            push(&format!("{name}.bias"), &c.bias);
        };
        let linear_entry = |push: &mut dyn FnMut(&str, &Tensor), name: &str, l: &Linear| {
            push(&format!("{name}.weight"), &l.weight);
            push(&format!("{name}.bias"), &l.bias);
        };
        conv_entry(&mut push, "encoder.conv1", &self.encoder.conv1);
        conv_entry(&mut push, "encoder.conv2", &self.encoder.conv2);
        conv_entry(&mut push, "encoder.conv3", &self.encoder.conv3);
        for (i, b) in self.aspp.branches.iter().enumerate() {
            conv_entry(&mut push, &format!("aspp.branch{i}"), b);
        }
        conv_entry(&mut push, "aspp.project", &self.aspp.project);
        conv_entry(&mut push, "fusion.skip_proj", &self.skip_proj);
        conv_entry(&mut push, "fusion.fuse", &self.fuse);
        push("rrm.tokens", &self.tokens);
        linear_entry(&mut push, "rrm.attn.query", &self.attn.query);
        linear_entry(&mut push, "rrm.attn.key", &self.attn.key);
        linear_entry(&mut push, "rrm.attn.value", &self.attn.value);
        linear_entry(&mut push, "rrm.attn.output", &self.attn.output);
        linear_entry(&mut push, "rrm.ffn.expand", &self.ffn.expand);
        linear_entry(&mut push, "rrm.ffn.contract", &self.ffn.contract);
        linear_entry(&mut push, "rrm.map_query", &self.map_query);
        linear_entry(&mut push, "rrm.map_key", &self.map_key);
        conv_entry(&mut push, "final_proj", &self.final_proj);
        out
    }

    pub fn zero_grad(&self) {
        for (_, t) in self.named_tensors() {
            t.zero_grad();
        }
    }

    /// Plain gradient-descent update; tensors without a gradient are left
    /// alone.
    pub fn sgd_step(&self, lr: f64) -> Result<()> {
        for (_, t) in self.named_tensors() {
            if let Some(grad) = t.grad() {
                let mut data = t.to_vec();
                for (v, g) in data.iter_mut().zip(&grad) {
                    *v -= lr * g;
                }
                t.set_data(data)?;
            }
        }
        Ok(())
    }

    /// Zeroes the value projection and the FFN output layer (weights and
    /// biases). With fresh zero biases elsewhere this makes the region
    /// refining module an exact identity on the tokens.
    pub fn zero_residual_path(&self) {
        self.attn.value.weight.fill(0.0);
        self.attn.value.bias.fill(0.0);
        self.ffn.contract.weight.fill(0.0);
        self.ffn.contract.bias.fill(0.0);
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        serialize::save_tensors(path, &self.named_tensors()).map_err(DrdError::from)
    }

    /// Loads weights into a fresh parameter set for `config`. Every entry
    /// must be present with the right shape, and no extras are allowed.
    pub fn load(path: &Path, config: &DrdConfig, ) -> Result<DrdParams> {
        let params = DrdParams::init(config, 0)?;
        let entries = serialize::load_tensors(path)?;
        let mut loaded: std::collections::BTreeMap<String, Tensor> =
            entries.into_iter().collect();
        for (name, target) in params.named_tensors() {
            let source = loaded.remove(&name).ok_or_else(|| {
                DrdError::Weights(format!("missing tensor '{name}'"))
            })?;
            if source.shape() != target.shape() {
                return Err(DrdError::Weights(format!(
                    "tensor '{name}' has shape {:?}, expected {:?}",
                    source.shape(),
                    target.shape()
                )));
            }
            target.set_data(source.to_vec())?;
        }
        if let Some((name, _)) = loaded.into_iter().next() {
            return Err(DrdError::Weights(format!("unexpected tensor '{name}'")));
        }
        Ok(params)
    }
}

fn distinct_rows(tokens: &Tensor) -> bool {
    let shape = tokens.shape();
    let (n, c) = (shape[0], shape[1]);
    let data = tokens.to_vec();
    for i in 0..n {
        for j in i + 1..n {
            if data[i * c..(i + 1) * c] == data[j * c..(j + 1) * c] {
                return false;
            }
        }
    }
    true
}
