//! Synthetic sensing: rendering, segmentation and segment descriptors.

pub mod cloud;
pub mod features;
pub mod geom;
pub mod grid;
pub mod render;
pub mod segment;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use cloud::{PointCloud, PointSample, SurfaceTag};
pub use features::{color_histogram, compute_features, feature, fpfh, pair_angles, spfh, FeatureParams};
pub use render::{render, NoiseParams, RenderParams};
pub use segment::{segment, Segment, SegmentationParams};

use crate::cmm::FeatureVector;
use crate::error::Result;
use crate::simworld::Scene;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptParams {
    pub render: RenderParams,
    pub noise: NoiseParams,
    pub segmentation: SegmentationParams,
    pub features: FeatureParams,
}

impl PerceptParams {
    pub fn fpfh_radius(&self) -> f64 {
        self.features.fpfh_radius.unwrap_or(2.0 * self.segmentation.r_seed)
    }
}

/// One perceived snapshot of the scene.
#[derive(Debug, Clone)]
pub struct Frame {
    pub cloud: PointCloud,
    pub segments: Vec<Segment>,
    pub features: Vec<FeatureVector>,
}

impl Frame {
    /// Most frequent surface tag among a segment's points, ties to the smaller tag.
    pub fn dominant_tag(&self, segment: usize) -> SurfaceTag {
        let mut tags: Vec<SurfaceTag> = self.segments[segment].indices.iter().map(|&i| self.cloud.tags[i]).collect();
        tags.sort_unstable();
        let mut best = (tags[0], 0usize);
        let mut run = (tags[0], 0usize);
        for t in tags {
            if t == run.0 {
                run.1 += 1;
            } else {
                run = (t, 1);
            }
            if run.1 > best.1 {
                best = run;
            }
        }
        best.0
    }
}

/// Featurizes an already rendered cloud.
pub fn perceive_cloud(cloud: PointCloud, params: &PerceptParams) -> Result<Frame> {
    let segments = segment(&cloud, &params.segmentation)?;
    let features = compute_features(&segments, params.fpfh_radius());
    Ok(Frame {
        cloud,
        segments,
        features,
    })
}

/// Renders, segments and featurizes `scene`.
pub fn perceive<R: Rng + ?Sized>(scene: &Scene, params: &PerceptParams, rng: &mut R) -> Result<Frame> {
    let cloud = render(scene, &params.render, &params.noise, rng)?;
    perceive_cloud(cloud, params)
}
