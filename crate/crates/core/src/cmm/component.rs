use std::f64::consts::PI;

use super::fisher::fisher_quantile;
use super::linalg::{cholesky, forward_solve, log_det_from_cholesky, squared_distance};
use super::{CmmConfig, FeatureVector, LabeledSample, Outcome};

/// One Gaussian cluster of same-label samples.
///
/// Mean and covariance are always the sample estimators of the stored
/// samples. A singleton uses `init_cov_scale * I` since its sample covariance
/// is undefined; larger components get `cov_regularization` added to the
/// diagonal so the matrix can be inverted even with fewer samples than
/// dimensions.
#[derive(Debug, Clone)]
pub struct Component {
    label: Outcome,
    samples: Vec<LabeledSample>,
    mean: Vec<f64>,
    covariance: Vec<f64>,
    factor: Vec<f64>,
    log_det: f64,
}

/// Outcome of the tolerance-hyperellipsoid overlap test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Intersection {
    Overlap,
    Disjoint,
    /// The candidate holds `n <= p` samples, so the Fisher quantile is undefined.
    NotTestable,
}

impl Intersection {
    pub fn is_overlap(self) -> bool {
        self == Intersection::Overlap
    }
}

impl Component {
    /// Builds a component from a non-empty set of same-label samples.
    pub fn from_samples(samples: Vec<LabeledSample>, config: &CmmConfig) -> Self {
        assert!(!samples.is_empty(), "component needs at least one sample");
        let label = samples[0].label;
        debug_assert!(samples.iter().all(|s| s.label == label));
        let p = samples[0].feature.dim();
        let n = samples.len();

        let mut mean = vec![0.0; p];
        for s in &samples {
            for (m, v) in mean.iter_mut().zip(s.feature.as_slice()) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }

        let mut covariance = vec![0.0; p * p];
        if n == 1 {
            for i in 0..p {
                covariance[i * p + i] = config.init_cov_scale;
            }
        } else {
            let mut centered = vec![0.0; p];
            for s in &samples {
                for (c, (v, m)) in centered.iter_mut().zip(s.feature.as_slice().iter().zip(&mean)) {
                    *c = v - m;
                }
                for i in 0..p {
                    let ci = centered[i];
                    for j in 0..=i {
                        covariance[i * p + j] += ci * centered[j];
                    }
                }
            }
            let denom = (n - 1) as f64;
            for i in 0..p {
                for j in 0..=i {
                    let v = covariance[i * p + j] / denom;
                    covariance[i * p + j] = v;
                    covariance[j * p + i] = v;
                }
                covariance[i * p + i] += config.cov_regularization;
            }
        }
        Self::with_parameters(label, samples, mean, covariance, config.cov_regularization)
    }

    /// Rebuilds a component from stored parameters (used when loading checkpoints).
    pub(crate) fn with_parameters(
        label: Outcome,
        samples: Vec<LabeledSample>,
        mean: Vec<f64>,
        mut covariance: Vec<f64>,
        regularization: f64,
    ) -> Self {
        let p = mean.len();
        let mut jitter = regularization.max(1e-12);
        let factor = loop {
            if let Some(l) = cholesky(&covariance, p) {
                break l;
            }
            // Rounding can leave a near-singular estimate indefinite.
            for i in 0..p {
                covariance[i * p + i] += jitter;
            }
            jitter *= 10.0;
        };
        let log_det = log_det_from_cholesky(&factor, p);
        Self {
            label,
            samples,
            mean,
            covariance,
            factor,
            log_det,
        }
    }

    pub fn label(&self) -> Outcome {
        self.label
    }

    pub fn size(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major `p x p` covariance.
    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub(crate) fn into_samples(self) -> Vec<LabeledSample> {
        self.samples
    }

    pub fn mahalanobis_sq(&self, x: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        let y = forward_solve(&self.factor, self.dim(), &diff);
        y.iter().map(|v| v * v).sum()
    }

    /// Log of the multivariate normal density `G(mu, Sigma, x)`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let p = self.dim() as f64;
        -0.5 * (p * (2.0 * PI).ln() + self.log_det + self.mahalanobis_sq(x))
    }

    pub fn distance_to(&self, x: &[f64]) -> f64 {
        squared_distance(&self.mean, x).sqrt()
    }

    pub(crate) fn push(&mut self, sample: LabeledSample, config: &CmmConfig) {
        debug_assert_eq!(sample.label, self.label);
        let mut samples = std::mem::take(&mut self.samples);
        samples.push(sample);
        *self = Component::from_samples(samples, config);
    }
}

/// Right-hand side of the overlap condition: the squared radius of the
/// `1 - alpha` tolerance hyperellipsoid of a component with `n` samples in
/// `p` dimensions. `None` when `n <= p`.
pub fn tolerance_radius_sq(n: usize, p: usize, alpha: f64) -> Option<f64> {
    if n <= p {
        return None;
    }
    if alpha >= 1.0 {
        return Some(0.0);
    }
    if alpha <= 0.0 {
        return Some(f64::INFINITY);
    }
    let (nf, pf) = (n as f64, p as f64);
    let quantile = fisher_quantile(1.0 - alpha, p as u32, (n - p) as u32).expect("1 - alpha lies in (0, 1)");
    Some((nf - 1.0) * pf / (nf - pf) * (nf + 1.0) / nf * quantile)
}

/// Tests whether the mean of `other` falls inside the tolerance
/// hyperellipsoid of `candidate`.
pub fn intersects(candidate: &Component, other: &Component, alpha: f64) -> Intersection {
    if alpha >= 1.0 {
        return Intersection::Disjoint;
    }
    match tolerance_radius_sq(candidate.size(), candidate.dim(), alpha) {
        None => Intersection::NotTestable,
        Some(radius) => {
            if candidate.mahalanobis_sq(other.mean()) <= radius {
                Intersection::Overlap
            } else {
                Intersection::Disjoint
            }
        }
    }
}

/// Index of the component whose mean is closest (Euclidean) to `x`,
/// skipping `exclude`. Ties go to the lowest index.
pub fn closest_component(set: &[Component], x: &[f64], exclude: Option<usize>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in set.iter().enumerate() {
        if Some(i) == exclude {
            continue;
        }
        let d = squared_distance(c.mean(), x);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}
