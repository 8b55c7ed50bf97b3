//! Segment descriptors: per-channel CIELab histograms and point feature
//! histograms over the Darboux-style pair angles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::cloud::PointSample;
use super::geom::{cross, distance, dot, normalize, sub, Vec3};
use super::segment::Segment;
use crate::cmm::{FeatureVector, FEATURE_DIM};

pub const COLOR_BINS: usize = 5;
pub const COLOR_DIM: usize = 3 * COLOR_BINS;
pub const ANGLE_BINS: usize = 11;
pub const FPFH_DIM: usize = 3 * ANGLE_BINS;

const CHANNEL_RANGES: [(f64, f64); 3] = [(0.0, 100.0), (-128.0, 127.0), (-128.0, 127.0)];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureParams {
    /// Neighbour centroids farther than this are ignored by the FPFH. `None`
    /// means twice the seed resolution.
    pub fpfh_radius: Option<f64>,
}

fn bin_of(value: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let t = (value - lo) / (hi - lo) * bins as f64;
    if t.is_nan() || t < 0.0 {
        0
    } else {
        (t.floor() as usize).min(bins - 1)
    }
}

/// 15 bins: five per CIELab channel, each channel summing to one.
pub fn color_histogram(points: &[PointSample]) -> Vec<f64> {
    let mut h = vec![0.0; COLOR_DIM];
    if points.is_empty() {
        return h;
    }
    for p in points {
        for (c, &(lo, hi)) in CHANNEL_RANGES.iter().enumerate() {
            h[c * COLOR_BINS + bin_of(p.color[c], lo, hi, COLOR_BINS)] += 1.0;
        }
    }
    let n = points.len() as f64;
    h.iter_mut().for_each(|v| *v /= n);
    h
}

/// `(alpha, phi, theta)` for the source `s` and target `t`, or `None` when
/// the two positions coincide.
pub fn pair_angles(s: &PointSample, t: &PointSample) -> Option<(f64, f64, f64)> {
    let d = normalize(sub(t.position, s.position))?;
    let u = s.normal;
    let v = cross(u, d);
    let w = cross(u, v);
    let alpha = dot(v, t.normal);
    let phi = dot(u, d);
    let mut theta = dot(w, t.normal).atan2(dot(u, t.normal));
    if theta <= -PI {
        theta = PI;
    }
    Some((alpha, phi, theta))
}

/// Bins of the three angles for a flat, uniformly oriented neighbourhood.
pub fn planar_signature(bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; 3 * bins];
    h[bin_of(0.0, -1.0, 1.0, bins)] = 1.0 / 3.0;
    h[bins + bin_of(0.0, -1.0, 1.0, bins)] = 1.0 / 3.0;
    h[2 * bins + bin_of(0.0, -PI, PI, bins)] = 1.0 / 3.0;
    h
}

/// Simplified point feature histogram of `center` against `neighbors`,
/// `bins` per angle, normalized to sum one. Coincident neighbours are skipped;
/// with none left the planar signature is returned.
pub fn spfh(center: &PointSample, neighbors: &[PointSample], bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; 3 * bins];
    let mut count = 0usize;
    for n in neighbors {
        let Some((alpha, phi, theta)) = pair_angles(center, n) else {
            continue;
        };
        h[bin_of(alpha, -1.0, 1.0, bins)] += 1.0;
        h[bins + bin_of(phi, -1.0, 1.0, bins)] += 1.0;
        h[2 * bins + bin_of(theta, -PI, PI, bins)] += 1.0;
        count += 1;
    }
    if count == 0 {
        return planar_signature(bins);
    }
    let total = 3.0 * count as f64;
    h.iter_mut().for_each(|v| *v /= total);
    h
}

fn neighbor_centroids<'a>(segments: &'a [Segment], index: usize, radius: f64) -> impl Iterator<Item = &'a Segment> + 'a {
    let c = segments[index].centroid.position;
    segments[index]
        .neighbors
        .iter()
        .map(move |&j| &segments[j])
        .filter(move |s| distance(s.centroid.position, c) <= radius)
}

fn centroid_spfh(segments: &[Segment], index: usize, radius: f64) -> Vec<f64> {
    let around: Vec<PointSample> = neighbor_centroids(segments, index, radius).map(|s| s.centroid).collect();
    spfh(&segments[index].centroid, &around, ANGLE_BINS)
}

/// Fast point feature histogram of segment `index`, built on segment
/// centroids: its own SPFH plus the distance-weighted mean of its neighbours'
/// SPFHs, normalized to sum one. Segment ids must equal their positions.
pub fn fpfh(segments: &[Segment], index: usize, radius: f64) -> Vec<f64> {
    let own = centroid_spfh(segments, index, radius);
    let c = segments[index].centroid.position;
    let near: Vec<&Segment> = neighbor_centroids(segments, index, radius).collect();
    let mut h = own;
    if !near.is_empty() {
        let k = near.len() as f64;
        for s in near {
            let omega = distance(s.centroid.position, c);
            if omega <= 0.0 {
                continue;
            }
            let other = centroid_spfh(segments, s.id, radius);
            for (acc, v) in h.iter_mut().zip(&other) {
                *acc += v / (k * omega);
            }
        }
    }
    let total: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= total);
    h
}

/// 48-dimensional descriptor: colour histogram followed by the FPFH.
pub fn feature(segments: &[Segment], index: usize, radius: f64) -> FeatureVector {
    let mut f = color_histogram(&segments[index].points);
    f.extend(fpfh(segments, index, radius));
    debug_assert_eq!(f.len(), FEATURE_DIM);
    FeatureVector(f)
}

pub fn compute_features(segments: &[Segment], radius: f64) -> Vec<FeatureVector> {
    (0..segments.len()).map(|i| feature(segments, i, radius)).collect()
}

/// Local SPFH signature of every point against at most `k` of its nearest
/// neighbours within `radius`.
pub(crate) fn point_signatures(points: &[PointSample], radius: f64, k: usize) -> Vec<Vec<f64>> {
    use super::grid::VoxelGrid;
    let positions: Vec<Vec3> = points.iter().map(|p| p.position).collect();
    let Some(origin) = positions.first().copied() else {
        return Vec::new();
    };
    let grid = VoxelGrid::build(&positions, radius, origin);
    let mut out = vec![Vec::new(); points.len()];
    for key in grid.sorted_keys() {
        let around: Vec<usize> = grid.around(key, 1).collect();
        for &i in grid.get(&key) {
            let p = &points[i];
            let mut near: Vec<(f64, usize)> = around
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (distance(positions[j], p.position), j))
                .filter(|&(d, _)| d <= radius)
                .collect();
            near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            near.truncate(k);
            let around: Vec<PointSample> = near.iter().map(|&(_, j)| points[j]).collect();
            out[i] = spfh(p, &around, ANGLE_BINS);
        }
    }
    out
}
