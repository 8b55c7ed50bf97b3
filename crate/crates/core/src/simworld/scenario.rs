use std::path::Path;

use serde::{Deserialize, Serialize};

use super::primitives::PrimitiveParams;
use super::scene::Scene;
use crate::cmm::CmmConfig;
use crate::error::{io_err, Error, Result};
use crate::exploration::ExplorationParams;
use crate::percept::{FeatureParams, NoiseParams, PerceptParams, RenderParams, SegmentationParams};

const STANDARD: &str = include_str!("../../scenarios/standard.toml");

/// A complete, self-describing experiment setting. Every table except
/// `scene` is optional and falls back to defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub render: RenderParams,
    #[serde(default)]
    pub noise: NoiseParams,
    #[serde(default)]
    pub segmentation: SegmentationParams,
    #[serde(default)]
    pub features: FeatureParams,
    #[serde(default)]
    pub primitives: PrimitiveParams,
    #[serde(default)]
    pub cmm: CmmConfig,
    #[serde(default)]
    pub exploration: ExplorationParams,
    pub scene: Scene,
}

impl Scenario {
    pub fn standard() -> Self {
        Self::from_toml(STANDARD).expect("bundled scenario parses")
    }

    pub fn standard_toml() -> &'static str {
        STANDARD
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.segmentation.validate()?;
        self.primitives.validate()?;
        self.cmm.validate()?;
        self.exploration.validate()?;
        if !(self.render.density > 0.0) {
            return Err(Error::InvalidConfig("render density must be positive".into()));
        }
        let n = &self.noise;
        if [n.depth, n.color, n.normal].iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidConfig("noise levels must be non-negative".into()));
        }
        Ok(())
    }

    pub fn percept(&self) -> PerceptParams {
        PerceptParams {
            render: self.render.clone(),
            noise: self.noise.clone(),
            segmentation: self.segmentation.clone(),
            features: self.features.clone(),
        }
    }

    pub fn change_threshold(&self) -> f64 {
        self.primitives.change_threshold_for(self.noise.depth)
    }
}
