//! Stub encoder: a fixed strided conv pyramid standing in for a real
//! backbone. The decoder under test only needs the ×8 and ×16 features.

use tspkit_tensor::Tensor;

use crate::error::Result;
use crate::params::StubEncoder;

pub struct EncoderFeatures {
    /// ×4 downsampled, C channels.
    pub x4: Tensor,
    /// ×8 downsampled; the fusion skip input.
    pub x8: Tensor,
    /// ×16 downsampled; the ASPP input.
    pub x16: Tensor,
}

pub fn encoder_forward(encoder: &StubEncoder, image: &Tensor) -> Result<EncoderFeatures> {
    let x4 = encoder.conv1.forward(image)?.gelu()?;
    let x8 = encoder.conv2.forward(&x4)?.gelu()?;
    let x16 = encoder.conv3.forward(&x8)?.gelu()?;
    Ok(EncoderFeatures { x4, x8, x16 })
}
