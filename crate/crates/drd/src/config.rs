//! Decoder hyperparameters.

use crate::error::{DrdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenMode {
    /// N free tokens, each attending to one semantic region; the final
    /// projection is a dense 1×1 convolution.
    Region,
    /// One token per class; the final projection becomes a depth-wise
    /// grouped convolution with K groups.
    Class,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrdConfig {
    /// Number of learnable region tokens N.
    pub num_region_tokens: usize,
    /// Attention heads h in the token-updating cross-attention.
    pub num_heads: usize,
    /// Channel width C after fusion; divisible by `num_heads`.
    pub channels: usize,
    /// Output classes K.
    pub num_classes: usize,
    /// ASPP branch dilations; 1 denotes the 1×1 branch.
    pub aspp_dilations: Vec<usize>,
    pub token_mode: TokenMode,
    /// Scale token attention by 1/√C instead of the per-head 1/√(C/h).
    pub literal_sqrt_c: bool,
}

impl Default for DrdConfig {
    fn default() -> Self {
        DrdConfig {
            num_region_tokens: 5,
            num_heads: 12,
            // 32 would break channels % heads == 0 with the default head
            // count, so the default width is the nearest multiple of 12.
            channels: 36,
            num_classes: 21,
            aspp_dilations: vec![1, 6, 12, 18],
            token_mode: TokenMode::Region,
            literal_sqrt_c: false,
        }
    }
}

impl DrdConfig {
    /// Class-token variant: one token per class.
    pub fn class_mode(mut self) -> Self {
        self.token_mode = TokenMode::Class;
        self.num_region_tokens = self.num_classes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_region_tokens == 0
            || self.num_heads == 0
            || self.channels == 0
            || self.num_classes == 0
        {
            return Err(DrdError::Config(
                "tokens, heads, channels and classes must all be >= 1".into(),
            ));
        }
        if self.channels % self.num_heads != 0 {
            return Err(DrdError::Config(format!(
                "channels {} not divisible by heads {}",
                self.channels, self.num_heads
            )));
        }
        if self.aspp_dilations.is_empty() || self.aspp_dilations.iter().any(|&d| d == 0) {
            return Err(DrdError::Config(format!(
                "aspp dilations {:?} must be non-empty and >= 1",
                self.aspp_dilations
            )));
        }
        if self.token_mode == TokenMode::Class && self.num_region_tokens != self.num_classes {
            return Err(DrdError::Config(format!(
                "class-token mode requires N == K, got N={} K={}",
                self.num_region_tokens, self.num_classes
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.channels / self.num_heads
    }

    /// Scale applied to token-attention logits.
    pub fn attention_scale(&self) -> f64 {
        let d = if self.literal_sqrt_c {
            self.channels
        } else {
            self.head_dim()
        };
        1.0 / (d as f64).sqrt()
    }

    /// The map-producing attention is single-head, so its scale is 1/√C.
    pub fn map_attention_scale(&self) -> f64 {
        1.0 / (self.channels as f64).sqrt()
    }
}
