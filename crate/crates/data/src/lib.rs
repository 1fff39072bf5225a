//! Annotation model for traffic-monitoring scene parsing: a 21-class
//! registry, paired semantic/instance maps with a bit-exact PNG format, and
//! a deterministic synthetic scene generator standing in for real data.

pub mod annotated;
pub mod error;
pub mod io;
pub mod maps;
pub mod registry;
pub mod synth;
pub mod validate;

pub use annotated::{AnnotatedImage, Split, Weather};
pub use error::{DataError, Result};
pub use maps::{
    decode_instance_id, encode_instance_id, InstanceMap, LabelMap, IGNORE_INSTANCE, IGNORE_LABEL,
    INSTANCE_BASE, MAX_INSTANCE_INDEX,
};
pub use registry::{ClassDef, ClassRegistry};
pub use synth::{generate_synthetic, Placement, SynthConfig, SyntheticSet};
pub use validate::{validate_pair, PairReport};
