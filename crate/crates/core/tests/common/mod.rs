//! Brute-force reference implementations shared by the integration tests.
//! Everything here is written from the formulas, in linear space and without
//! touching the library's numerics.

#![allow(dead_code)]

use std::f64::consts::PI;

use affordance_core::cmm::{CmmConfig, Component, LabeledSample, MixtureClassifier, Outcome};
use affordance_core::metrics::GroundTruth;
use affordance_core::percept::{PointSample, Segment};
use rand::Rng;

/// Determinant and inverse by Gauss-Jordan elimination with partial pivoting.
pub fn det_and_inverse(a: &[f64], n: usize) -> (f64, Vec<f64>) {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| m[r * n + col].abs().total_cmp(&m[s * n + col].abs()))
            .unwrap();
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        let d = m[col * n + col];
        det *= d;
        for k in 0..n {
            m[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * n + col];
                for k in 0..n {
                    m[r * n + k] -= f * m[col * n + k];
                    inv[r * n + k] -= f * inv[col * n + k];
                }
            }
        }
    }
    (det, inv)
}

pub fn gaussian_density(mean: &[f64], cov: &[f64], x: &[f64]) -> f64 {
    let n = mean.len();
    let (det, inv) = det_and_inverse(cov, n);
    let d: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            q += d[i] * inv[i * n + j] * d[j];
        }
    }
    (-0.5 * q).exp() / ((2.0 * PI).powi(n as i32) * det).sqrt()
}

/// `w_k G_k(x)` for every component of a class.
pub fn weighted_densities(components: &[Component], x: &[f64]) -> Vec<f64> {
    let total: usize = components.iter().map(|c| c.size()).sum();
    components
        .iter()
        .map(|c| c.size() as f64 / total as f64 * gaussian_density(c.mean(), c.covariance(), x))
        .collect()
}

pub fn predict(c: &MixtureClassifier, x: &[f64]) -> f64 {
    let ge: f64 = weighted_densities(c.components(Outcome::Effect), x).iter().sum();
    let gn: f64 = weighted_densities(c.components(Outcome::NoEffect), x).iter().sum();
    (1.0 + ge) / (2.0 + ge + gn)
}

pub fn membership(c: &MixtureClassifier, class: Outcome, x: &[f64]) -> Vec<f64> {
    let w = weighted_densities(c.components(class), x);
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// Sample mean and unbiased covariance plus `reg` on the diagonal.
pub fn sample_moments(samples: &[Vec<f64>], reg: f64) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let p = samples[0].len();
    let mean: Vec<f64> = (0..p).map(|j| samples.iter().map(|s| s[j]).sum::<f64>() / n as f64).collect();
    let mut cov = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            let s: f64 = samples.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).sum();
            cov[i * p + j] = s / (n as f64 - 1.0);
        }
        cov[i * p + i] += reg;
    }
    (mean, cov)
}

/// A small classifier trained on random points from two blobs.
pub fn random_classifier<R: Rng>(rng: &mut R, dim: usize) -> MixtureClassifier {
    let config = CmmConfig {
        feature_dim: dim,
        cov_regularization: 1e-2,
        init_cov_scale: 0.5,
        ..CmmConfig::default()
    };
    let mut c = MixtureClassifier::new(config, rng.random()).unwrap();
    let n = rng.random_range(2..40);
    for _ in 0..n {
        let effect = rng.random_bool(0.5);
        let centre = if effect { 0.3 } else { 0.7 };
        let x: Vec<f64> = (0..dim).map(|_| centre + 0.3 * (rng.random::<f64>() - 0.5)).collect();
        c.add_sample(LabeledSample::new(x, Outcome::from_flag(effect))).unwrap();
    }
    c
}

pub fn random_point<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random::<f64>()).collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

pub fn soft_counts(pred: &[f64], gt: &GroundTruth) -> [f64; 4] {
    let mut tp = 0.0;
    let mut tn = 0.0;
    let mut fp = 0.0;
    let mut fneg = 0.0;
    for (p, bg) in pred.iter().zip(&gt.background) {
        if *bg {
            tn += 1.0 - p;
            fp += p;
        } else {
            tp += p;
            fneg += 1.0 - p;
        }
    }
    [tp, tn, fp, fneg]
}

/// Precision, recall and balanced accuracy from a label list.
pub fn prf(pred: &[f64], gt: &GroundTruth) -> [f64; 3] {
    let [tp, tn, fp, fneg] = soft_counts(pred, gt);
    let positives = gt.background.iter().filter(|b| !**b).count() as f64;
    let negatives = gt.background.len() as f64 - positives;
    [tp / (tp + fp), tp / (tp + fneg), 0.5 * (tp / positives + tn / negatives)]
}

fn unit<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

pub fn random_sample<R: Rng>(rng: &mut R, spread: f64) -> PointSample {
    PointSample {
        position: [
            spread * rng.random::<f64>(),
            spread * rng.random::<f64>(),
            spread * rng.random::<f64>(),
        ],
        color: [
            100.0 * rng.random::<f64>(),
            255.0 * rng.random::<f64>() - 128.0,
            255.0 * rng.random::<f64>() - 128.0,
        ],
        normal: unit(rng),
    }
}

/// Angles between a source and a target written out component by component.
pub fn pair_angles(s: &PointSample, t: &PointSample) -> Option<(f64, f64, f64)> {
    let dx = t.position[0] - s.position[0];
    let dy = t.position[1] - s.position[1];
    let dz = t.position[2] - s.position[2];
    let len = (dx * dx + dy * dy + dz * dz).sqrt();
    if len == 0.0 {
        return None;
    }
    let d = [dx / len, dy / len, dz / len];
    let u = s.normal;
    let v = [
        u[1] * d[2] - u[2] * d[1],
        u[2] * d[0] - u[0] * d[2],
        u[0] * d[1] - u[1] * d[0],
    ];
    let w = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let nt = t.normal;
    let alpha = v[0] * nt[0] + v[1] * nt[1] + v[2] * nt[2];
    let phi = u[0] * d[0] + u[1] * d[1] + u[2] * d[2];
    let theta = (w[0] * nt[0] + w[1] * nt[1] + w[2] * nt[2]).atan2(u[0] * nt[0] + u[1] * nt[1] + u[2] * nt[2]);
    Some((alpha, phi, if theta == -PI { PI } else { theta }))
}

fn bin(value: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let mut k = 0;
    // walk the bin edges instead of dividing
    while k + 1 < bins && value >= lo + (k + 1) as f64 * (hi - lo) / bins as f64 {
        k += 1;
    }
    k
}

pub fn spfh(center: &PointSample, neighbors: &[PointSample], bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; 3 * bins];
    let angles: Vec<_> = neighbors.iter().filter_map(|n| pair_angles(center, n)).collect();
    if angles.is_empty() {
        h[bin(0.0, -1.0, 1.0, bins)] = 1.0 / 3.0;
        h[bins + bin(0.0, -1.0, 1.0, bins)] = 1.0 / 3.0;
        h[2 * bins + bin(0.0, -PI, PI, bins)] = 1.0 / 3.0;
        return h;
    }
    let share = 1.0 / (3 * angles.len()) as f64;
    for (a, p, t) in angles {
        h[bin(a, -1.0, 1.0, bins)] += share;
        h[bins + bin(p, -1.0, 1.0, bins)] += share;
        h[2 * bins + bin(t, -PI, PI, bins)] += share;
    }
    h
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// FPFH over segment centroids, restricted to adjacent segments within `radius`.
pub fn fpfh(segments: &[Segment], i: usize, radius: f64, bins: usize) -> Vec<f64> {
    let near = |k: usize| -> Vec<usize> {
        segments[k]
            .neighbors
            .iter()
            .copied()
            .filter(|&j| dist(segments[j].centroid.position, segments[k].centroid.position) <= radius)
            .collect()
    };
    let spfh_of = |k: usize| {
        let pts: Vec<PointSample> = near(k).iter().map(|&j| segments[j].centroid).collect();
        spfh(&segments[k].centroid, &pts, bins)
    };
    let mut h = spfh_of(i);
    let ns = near(i);
    for &j in &ns {
        let w = dist(segments[j].centroid.position, segments[i].centroid.position);
        if w > 0.0 {
            let other = spfh_of(j);
            for b in 0..h.len() {
                h[b] += other[b] / (ns.len() as f64 * w);
            }
        }
    }
    let total: f64 = h.iter().sum();
    h.into_iter().map(|v| v / total).collect()
}

/// Random segments with a symmetric adjacency graph; each segment's centroid
/// is its only point.
pub fn random_segments<R: Rng>(rng: &mut R, n: usize) -> Vec<Segment> {
    let centroids: Vec<PointSample> = (0..n).map(|_| random_sample(rng, 0.2)).collect();
    let mut adj = vec![Vec::new(); n];
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.4) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    (0..n)
        .map(|i| Segment {
            id: i,
            indices: vec![i],
            points: vec![centroids[i]],
            centroid: centroids[i],
            neighbors: adj[i].clone(),
        })
        .collect()
}

/// F(d1, d2) CDF by adaptive Simpson on `x = y^2`, which
/// removes the `x^(d1/2 - 1)` singularity at the origin.
pub fn f_cdf_numeric(x: f64, d1: f64, d2: f64, ln_beta: f64) -> f64 {
    let log_norm = 0.5 * d1 * (d1 / d2).ln() - ln_beta;
    // density(y^2) * 2y, with (y^2)^(d1/2 - 1) * y folded into y^(d1 - 1)
    let g = |y: f64| -> f64 { 2.0 * (log_norm - 0.5 * (d1 + d2) * (1.0 + d1 * y * y / d2).ln()).exp() * y.powf(d1 - 1.0) };
    let upper = x.sqrt();
    // split into pieces so the adaptive rule sees the peak
    let pieces = 64;
    (0..pieces)
        .map(|k| {
            let a = upper * k as f64 / pieces as f64;
            let b = upper * (k + 1) as f64 / pieces as f64;
            adaptive_simpson(&g, a, b, 1e-15, 50)
        })
        .sum()
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let whole = simpson(f, a, b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson(f, a, m, 0.5 * tol, depth - 1) + adaptive_simpson(f, m, b, 0.5 * tol, depth - 1)
    }
}

/// Quantile by bisection on the numeric CDF.
pub fn f_quantile_numeric(prob: f64, d1: f64, d2: f64, ln_beta: f64) -> f64 {
    let mut hi = 1.0;
    while f_cdf_numeric(hi, d1, d2, ln_beta) < prob {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f_cdf_numeric(mid, d1, d2, ln_beta) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `(prob, d1, d2)` triples for the quantile oracle.
pub const F_TRIPLES: [(f64, u32, u32); 20] = [
    (0.4, 48, 12),
    (0.5, 1, 1),
    (0.9, 1, 10),
    (0.05, 2, 3),
    (0.1, 5, 7),
    (0.25, 10, 20),
    (0.5, 48, 1),
    (0.6, 48, 2),
    (0.75, 48, 5),
    (0.9, 48, 30),
    (0.95, 48, 100),
    (0.99, 48, 52),
    (0.99, 3, 4),
    (0.01, 48, 12),
    (0.3, 1, 1),
    (0.7, 1, 5),
    (0.8, 4, 1),
    (0.45, 20, 20),
    (0.85, 30, 60),
    (0.2, 100, 10),
];
