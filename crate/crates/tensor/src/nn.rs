//! Learnable layers: thin parameter holders over the tensor ops.

use rand::Rng;

use crate::error::{Result, TensorError};
use crate::kernels::ConvSpec;
use crate::tensor::Tensor;

fn uniform_init(rng: &mut impl Rng, n: usize, bound: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
}

/// Fully connected layer: `y = x W + b` with `W` of shape in×out.
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    /// Weights He-uniform in ±√(6/in), bias zero; both gradient-tracked.
    /// The gain keeps activation variance roughly constant through GELU
    /// stacks, which matters here because the networks carry no
    /// normalization layers.
    pub fn new(in_features: usize, out_features: usize, rng: &mut impl Rng) -> Linear {
        let bound = (6.0 / in_features as f64).sqrt();
        let weight = Tensor::from_vec(
            uniform_init(rng, in_features * out_features, bound),
            &[in_features, out_features],
        )
        .expect("finite init")
        .with_grad();
        let bias = Tensor::zeros(&[out_features])
            .expect("valid shape")
            .with_grad();
        Linear { weight, bias }
    }

    pub fn in_features(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn out_features(&self) -> usize {
        self.weight.shape()[1]
    }

    /// Applies the layer over the last dimension of `x` (any rank >= 2).
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let shape = x.shape();
        let last = *shape.last().expect("rank >= 1");
        if shape.len() < 2 || last != self.in_features() {
            return Err(TensorError::ShapeMismatch {
                op: "linear",
                lhs: shape,
                rhs: self.weight.shape(),
            });
        }
        let rows = x.numel() / last;
        let flat = if shape.len() == 2 {
            x.clone()
        } else {
            x.reshape(&[rows, last])?
        };
        let out = flat.matmul(&self.weight)?.add_bias(&self.bias)?;
        if shape.len() == 2 {
            Ok(out)
        } else {
            let mut out_shape = shape;
            *out_shape.last_mut().expect("rank >= 1") = self.out_features();
            out.reshape(&out_shape)
        }
    }
}

/// 2-D convolution layer with stride, padding, dilation and groups.
pub struct Conv2d {
    pub weight: Tensor,
    pub bias: Tensor,
    pub spec: ConvSpec,
}

impl Conv2d {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        spec: ConvSpec,
        rng: &mut impl Rng,
    ) -> Result<Conv2d> {
        if spec.groups == 0 || in_channels % spec.groups != 0 || out_channels % spec.groups != 0 {
            return Err(TensorError::InvalidArgument {
                op: "conv2d_new",
                reason: format!(
                    "channels (in {in_channels}, out {out_channels}) must be divisible by groups {}",
                    spec.groups
                ),
            });
        }
        let cin_g = in_channels / spec.groups;
        let fan_in = cin_g * kernel * kernel;
        let bound = (6.0 / fan_in as f64).sqrt();
        let weight = Tensor::from_vec(
            uniform_init(rng, out_channels * cin_g * kernel * kernel, bound),
            &[out_channels, cin_g, kernel, kernel],
        )
        .expect("finite init")
        .with_grad();
        let bias = Tensor::zeros(&[out_channels])
            .expect("valid shape")
            .with_grad();
        Ok(Conv2d { weight, bias, spec })
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1] * self.spec.groups
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        x.conv2d(&self.weight, &self.bias, &self.spec)
    }
}
