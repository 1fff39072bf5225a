//! Dense f64 tensors with tape-free reverse-mode automatic differentiation.
//!
//! Everything runs on the CPU in 64-bit floats at desk scale. The op set is
//! exactly what a small cross-attention segmentation decoder needs: matmul,
//! softmax, grouped/dilated 2-D convolution, bilinear resampling, GELU,
//! structural ops (reshape/permute/narrow/concat/broadcast) and a fused
//! cross-entropy. Every op is differentiable and verified against central
//! finite differences (see [`gradcheck`]).
//!
//! Non-finite values are rejected eagerly: constructors and every op validate
//! their output, so a NaN or Inf surfaces as an error at the op that produced
//! it rather than propagating silently.

mod autograd;
pub mod error;
pub mod gradcheck;
mod kernels;
pub mod nn;
pub mod serialize;
mod tensor;

pub use error::{Result, TensorError};
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport};
pub use kernels::ConvSpec;
pub use nn::{Conv2d, Linear};
pub use tensor::Tensor;
