//! Detail refining decoder at desk scale.
//!
//! The decoder has two parts. An encoder-decoder fusion stage runs ASPP over
//! the deepest features and fuses them with ×8 skip features. A region
//! refining module then lets N learnable tokens attend over the fused
//! features, produces one attention map per token, reweights the features
//! with those maps, and projects the stack to class logits.
//!
//! Everything is differentiable through [`tspkit_tensor`] and verified
//! against central finite differences (see [`verify`]). A stub conv encoder
//! stands in for a real backbone so the decoder itself is what's under test.

pub mod attention;
pub mod config;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod fusion;
pub mod loss;
pub mod params;
pub mod rrm;
pub mod train;
pub mod verify;

pub use attention::export_attention_maps;
pub use config::{DrdConfig, TokenMode};
pub use decoder::{argmax_label_map, drd_forward, drd_forward_full, predict_label_map};
pub use encoder::{encoder_forward, EncoderFeatures};
pub use error::{DrdError, Result};
pub use fusion::fusion_forward;
pub use loss::cross_entropy_loss;
pub use params::DrdParams;
pub use rrm::{combine_maps, region_refine_forward, RrmOutput};
pub use train::{image_tensor, train_toy, TrainOutcome};
