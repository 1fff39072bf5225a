//! A fully annotated image: paired label/instance maps plus scene metadata.

use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};
use crate::maps::{InstanceMap, LabelMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn dir_name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Split> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(DataError::Invalid(format!(
                "unknown split {other:?}, expected train|val|test"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weather {
    Sunny,
    Cloudy,
    Rain,
    Fog,
    Snow,
}

impl Weather {
    pub const ALL: [Weather; 5] = [
        Weather::Sunny,
        Weather::Cloudy,
        Weather::Rain,
        Weather::Fog,
        Weather::Snow,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedImage {
    pub image_id: String,
    pub label: LabelMap,
    pub instances: InstanceMap,
    pub split: Split,
    pub scene_id: u32,
    pub weather: Weather,
}

impl AnnotatedImage {
    pub fn width(&self) -> usize {
        self.label.width()
    }

    pub fn height(&self) -> usize {
        self.label.height()
    }
}
