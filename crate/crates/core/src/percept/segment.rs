//! Seeded supervoxel segmentation in the spirit of VCCS: seeds on a regular
//! grid, then a few rounds of local k-means under a combined colour, spatial
//! and shape distance.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::cloud::{PointCloud, PointSample};
use super::features::point_signatures;
use super::geom::{add, distance, normalize, scale, Vec3};
use super::grid::VoxelGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationParams {
    /// Seed spacing, metres.
    pub r_seed: f64,
    /// Colour weight.
    pub lambda: f64,
    /// Spatial weight.
    pub mu: f64,
    /// Shape weight.
    pub epsilon: f64,
    /// Colour normalization constant.
    pub m: f64,
    pub iterations: usize,
    /// Neighbourhood radius of the per-point shape signatures.
    pub shape_radius: f64,
    /// Maximum neighbours per shape signature.
    pub shape_neighbors: usize,
    /// Voxel size used to decide which segments touch.
    pub adjacency_radius: f64,
    /// Seed cells holding fewer points are skipped.
    pub min_seed_points: usize,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            r_seed: 0.04,
            lambda: 0.2,
            mu: 0.4,
            epsilon: 1.0,
            m: 100.0,
            iterations: 4,
            shape_radius: 0.015,
            shape_neighbors: 8,
            adjacency_radius: 0.01,
            min_seed_points: 4,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.r_seed > 0.0 && self.shape_radius > 0.0 && self.adjacency_radius > 0.0) {
            return bad("segmentation radii must be positive");
        }
        if [self.lambda, self.mu, self.epsilon].iter().any(|w| !(*w >= 0.0)) {
            return bad("segmentation weights must be non-negative");
        }
        if self.lambda + self.mu + self.epsilon <= 0.0 {
            return bad("at least one segmentation weight must be positive");
        }
        if !(self.m > 0.0) {
            return bad("colour normalization must be positive");
        }
        if self.iterations == 0 {
            return bad("segmentation needs at least one iteration");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: usize,
    /// Indices into the source cloud, ascending.
    pub indices: Vec<usize>,
    pub points: Vec<PointSample>,
    pub centroid: PointSample,
    /// Ids of touching segments, ascending.
    pub neighbors: Vec<usize>,
}

/// Per-field mean; the mean normal is renormalized.
pub fn centroid_of(points: &[PointSample]) -> PointSample {
    let n = points.len() as f64;
    let mut pos = [0.0; 3];
    let mut col = [0.0; 3];
    let mut nrm = [0.0; 3];
    for p in points {
        pos = add(pos, p.position);
        col = add(col, p.color);
        nrm = add(nrm, p.normal);
    }
    PointSample {
        position: scale(pos, 1.0 / n),
        color: scale(col, 1.0 / n),
        normal: normalize(nrm).unwrap_or(points[0].normal),
    }
}

fn bounds(points: &[PointSample]) -> (Vec3, Vec3) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for a in 0..3 {
            lo[a] = lo[a].min(p.position[a]);
            hi[a] = hi[a].max(p.position[a]);
        }
    }
    (lo, hi)
}

/// Seed point indices: in each occupied `r_seed` cell (anchored at the
/// cloud's lower corner) the point nearest the cell mean, skipping sparse
/// cells and seeds closer than half a cell to an earlier one.
pub fn place_seeds(cloud: &PointCloud, params: &SegmentationParams) -> Vec<usize> {
    let positions: Vec<Vec3> = cloud.points.iter().map(|p| p.position).collect();
    let (lo, _) = bounds(&cloud.points);
    let grid = VoxelGrid::build(&positions, params.r_seed, lo);
    let mut candidates = Vec::new();
    let mut fullest: Option<(usize, usize)> = None;
    for key in grid.sorted_keys() {
        let members = grid.get(&key);
        let n = members.len();
        let mean = scale(
            members.iter().fold([0.0; 3], |acc, &i| add(acc, positions[i])),
            1.0 / n as f64,
        );
        let nearest = *members
            .iter()
            .min_by(|&&a, &&b| {
                distance(positions[a], mean)
                    .total_cmp(&distance(positions[b], mean))
                    .then(a.cmp(&b))
            })
            .expect("occupied cell");
        if fullest.is_none_or(|(m, _)| n > m) {
            fullest = Some((n, nearest));
        }
        if n >= params.min_seed_points {
            candidates.push(nearest);
        }
    }
    if candidates.is_empty() {
        return fullest.map(|(_, i)| vec![i]).unwrap_or_default();
    }
    let spacing = 0.5 * params.r_seed;
    let mut kept: Vec<usize> = Vec::new();
    let mut kept_pos: Vec<Vec3> = Vec::new();
    let mut kept_grid = VoxelGrid::build(&[], spacing, lo);
    for c in candidates {
        let p = positions[c];
        if kept_grid.any_within(&kept_pos, p, spacing) {
            continue;
        }
        kept_grid.insert(kept.len(), p);
        kept.push(c);
        kept_pos.push(p);
    }
    kept
}

struct Seed {
    position: Vec3,
    color: Vec3,
    signature: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Segments `cloud`. Every point ends up in exactly one segment; segment ids
/// are their positions in the returned list.
pub fn segment(cloud: &PointCloud, params: &SegmentationParams) -> Result<Vec<Segment>> {
    params.validate()?;
    if cloud.is_empty() {
        return Err(Error::Empty("cannot segment an empty cloud"));
    }
    let (lo, hi) = bounds(&cloud.points);
    let extent = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
    if extent < params.r_seed {
        let labels = vec![0; cloud.len()];
        return Ok(build_segments(cloud, &labels, 1, params));
    }

    let use_shape = params.epsilon > 0.0;
    let signatures = if use_shape {
        point_signatures(&cloud.points, params.shape_radius, params.shape_neighbors)
    } else {
        vec![Vec::new(); cloud.len()]
    };
    let mut seeds: Vec<Seed> = place_seeds(cloud, params)
        .into_iter()
        .map(|i| Seed {
            position: cloud.points[i].position,
            color: cloud.points[i].color,
            signature: signatures[i].clone(),
        })
        .collect();

    let wc = params.lambda / (params.m * params.m);
    let ws = params.mu / (3.0 * params.r_seed * params.r_seed);
    let wf = params.epsilon;
    // partial sums only grow, so a candidate is dropped once it reaches `bound`
    let dist2 = |s: &Seed, i: usize, bound: f64| {
        let p = &cloud.points[i];
        let mut d = ws * sq_dist(&s.position, &p.position);
        if wc > 0.0 && d < bound {
            d += wc * sq_dist(&s.color, &p.color);
        }
        if use_shape && d < bound {
            d += wf * sq_dist(&s.signature, &signatures[i]);
        }
        d
    };

    let positions: Vec<Vec3> = cloud.points.iter().map(|p| p.position).collect();
    let point_grid = VoxelGrid::build(&positions, params.r_seed, lo);
    let cells = point_grid.sorted_keys();
    let mut labels = vec![0usize; cloud.len()];
    for round in 0..params.iterations {
        let seed_pos: Vec<Vec3> = seeds.iter().map(|s| s.position).collect();
        let grid = VoxelGrid::build(&seed_pos, params.r_seed, lo);
        for key in &cells {
            let mut candidates: Vec<usize> = grid.around(*key, 2).collect();
            candidates.sort_unstable();
            for &i in point_grid.get(key) {
                let mut best: Option<(f64, usize)> = None;
                for &s in &candidates {
                    let d = dist2(&seeds[s], i, best.map_or(f64::INFINITY, |b| b.0));
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, s));
                    }
                }
                labels[i] = match best {
                    Some((_, s)) => s,
                    None => (0..seeds.len())
                        .min_by(|&a, &b| {
                            let inf = f64::INFINITY;
                            dist2(&seeds[a], i, inf).total_cmp(&dist2(&seeds[b], i, inf)).then(a.cmp(&b))
                        })
                        .expect("at least one seed"),
                };
            }
        }
        if round + 1 == params.iterations {
            break;
        }
        // move seeds to their members' means and drop the ones left empty
        let mut sums: Vec<(usize, Vec3, Vec3, Vec<f64>)> = (0..seeds.len())
            .map(|_| (0, [0.0; 3], [0.0; 3], vec![0.0; signatures[0].len()]))
            .collect();
        for (i, &l) in labels.iter().enumerate() {
            let acc = &mut sums[l];
            acc.0 += 1;
            acc.1 = add(acc.1, cloud.points[i].position);
            acc.2 = add(acc.2, cloud.points[i].color);
            for (a, v) in acc.3.iter_mut().zip(&signatures[i]) {
                *a += v;
            }
        }
        seeds = sums
            .into_iter()
            .filter(|s| s.0 > 0)
            .map(|(n, pos, col, sig)| {
                let inv = 1.0 / n as f64;
                Seed {
                    position: scale(pos, inv),
                    color: scale(col, inv),
                    signature: sig.into_iter().map(|v| v * inv).collect(),
                }
            })
            .collect();
    }
    Ok(build_segments(cloud, &labels, seeds.len(), params))
}

fn build_segments(cloud: &PointCloud, labels: &[usize], n_labels: usize, params: &SegmentationParams) -> Vec<Segment> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_labels];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    // compact ids in first-member order so ids do not depend on seed bookkeeping
    let mut order: Vec<usize> = (0..n_labels).filter(|&l| !members[l].is_empty()).collect();
    order.sort_by_key(|&l| members[l][0]);
    let mut remap = vec![usize::MAX; n_labels];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let compact: Vec<usize> = labels.iter().map(|&l| remap[l]).collect();
    let neighbors = adjacency(cloud, &compact, order.len(), params.adjacency_radius);
    order
        .iter()
        .zip(neighbors)
        .enumerate()
        .map(|(id, (&old, neighbors))| {
            let indices = std::mem::take(&mut members[old]);
            let points: Vec<PointSample> = indices.iter().map(|&i| cloud.points[i]).collect();
            Segment {
                id,
                centroid: centroid_of(&points),
                indices,
                points,
                neighbors,
            }
        })
        .collect()
}

/// Segments are adjacent when their points share a voxel or occupy
/// face/edge/corner-touching voxels.
fn adjacency(cloud: &PointCloud, labels: &[usize], n: usize, voxel: f64) -> Vec<Vec<usize>> {
    let positions: Vec<Vec3> = cloud.points.iter().map(|p| p.position).collect();
    let (lo, _) = bounds(&cloud.points);
    let grid = VoxelGrid::build(&positions, voxel, lo);
    let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for key in grid.sorted_keys() {
        let here: BTreeSet<usize> = grid.get(&key).iter().map(|&i| labels[i]).collect();
        let around: BTreeSet<usize> = grid.around(key, 1).map(|i| labels[i]).collect();
        for &a in &here {
            for &b in &around {
                if a != b {
                    sets[a].insert(b);
                    sets[b].insert(a);
                }
            }
        }
    }
    sets.into_iter().map(|s| s.into_iter().collect()).collect()
}
