use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::geom::Vec3;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub position: Vec3,
    /// CIELab `[L, a, b]`.
    pub color: Vec3,
    /// Unit surface normal.
    pub normal: Vec3,
}

/// Which scene surface a rendered point came from. Used only for ground
/// truth and never by the learning pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SurfaceTag {
    Table,
    Wall,
    Object(usize),
    ButtonHousing(usize),
    ButtonDisc(usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<PointSample>,
    /// Parallel to `points`.
    pub tags: Vec<SurfaceTag>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, point: PointSample, tag: SurfaceTag) {
        self.points.push(point);
        self.tags.push(tag);
    }

    /// One point per line: `x y z L a b nx ny nz`.
    pub fn to_ascii(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 96);
        out.push_str("# x y z L a b nx ny nz\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {} {} {}",
                p.position[0],
                p.position[1],
                p.position[2],
                p.color[0],
                p.color[1],
                p.color[2],
                p.normal[0],
                p.normal[1],
                p.normal[2]
            );
        }
        out
    }

    /// Parses the output of [`PointCloud::to_ascii`]. Surface tags are not part
    /// of the format, so every point comes back tagged as table.
    pub fn from_ascii(text: &str) -> Result<Self> {
        let mut cloud = PointCloud::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e: std::num::ParseFloatError| Error::Parse {
                    what: "point cloud",
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            if vals.len() != 9 {
                return Err(Error::Parse {
                    what: "point cloud",
                    line: i + 1,
                    reason: format!("expected 9 columns, found {}", vals.len()),
                });
            }
            cloud.push(
                PointSample {
                    position: [vals[0], vals[1], vals[2]],
                    color: [vals[3], vals[4], vals[5]],
                    normal: [vals[6], vals[7], vals[8]],
                },
                SurfaceTag::Table,
            );
        }
        Ok(cloud)
    }
}
