//! Collaborative mixture models: an online two-class classifier in which each
//! class is a Gaussian mixture whose components split when they overlap the
//! opposing class and merge when they overlap their own class.

mod component;
pub mod fisher;
pub(crate) mod linalg;
pub mod partition;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use component::{closest_component, intersects, tolerance_radius_sq, Component, Intersection};
pub use fisher::fisher_quantile;
pub use partition::partition_for_split;

use crate::error::{Error, Result};
use linalg::log_sum_exp;

/// Dimension of the colour-histogram + FPFH descriptor.
pub const FEATURE_DIM: usize = 48;

/// Binary class label: did the action produce its effect?
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Effect,
    NoEffect,
}

impl Outcome {
    pub fn from_flag(effect: bool) -> Self {
        if effect {
            Outcome::Effect
        } else {
            Outcome::NoEffect
        }
    }

    pub fn is_effect(self) -> bool {
        self == Outcome::Effect
    }

    pub fn opposite(self) -> Self {
        match self {
            Outcome::Effect => Outcome::NoEffect,
            Outcome::NoEffect => Outcome::Effect,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Effect => "effect",
            Outcome::NoEffect => "no_effect",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        FeatureVector(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub feature: FeatureVector,
    pub label: Outcome,
}

impl LabeledSample {
    pub fn new(feature: impl Into<FeatureVector>, label: Outcome) -> Self {
        Self {
            feature: feature.into(),
            label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmmConfig {
    /// Overlap-test sensitivity; 1 disables split and merge.
    pub alpha: f64,
    /// Maximum number of components per class.
    pub k_max: usize,
    /// Covariance of a freshly created single-sample component, times identity.
    pub init_cov_scale: f64,
    /// Added to the diagonal of every multi-sample covariance estimate.
    pub cov_regularization: f64,
    pub feature_dim: usize,
}

impl Default for CmmConfig {
    fn default() -> Self {
        Self {
            alpha: 0.6,
            k_max: 4,
            init_cov_scale: 1.0,
            cov_regularization: 1e-6,
            feature_dim: FEATURE_DIM,
        }
    }
}

impl CmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!("alpha {} not in [0, 1]", self.alpha)));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidConfig("k_max must be at least 1".into()));
        }
        if !(self.init_cov_scale > 0.0) || !(self.cov_regularization > 0.0) {
            return Err(Error::InvalidConfig(
                "covariance scale and regularization must be positive".into(),
            ));
        }
        if self.feature_dim == 0 {
            return Err(Error::InvalidConfig("feature_dim must be positive".into()));
        }
        Ok(())
    }
}

/// Mixture weights `w_k = |C_k| / sum_i |C_i|`.
pub fn class_weights(components: &[Component]) -> Vec<f64> {
    let total: usize = components.iter().map(Component::size).sum();
    components.iter().map(|c| c.size() as f64 / total as f64).collect()
}

/// `ln sum_k w_k G_k(x)`, or `None` for an empty class.
fn mixture_log_density(components: &[Component], x: &[f64]) -> Option<f64> {
    if components.is_empty() {
        return None;
    }
    let terms = weighted_log_terms(components, &class_weights(components), x);
    Some(log_sum_exp(&terms))
}

fn weighted_log_terms(components: &[Component], weights: &[f64], x: &[f64]) -> Vec<f64> {
    components
        .iter()
        .zip(weights)
        .map(|(c, w)| w.ln() + c.log_density(x))
        .collect()
}

fn normalize_log_terms(terms: &[f64]) -> Vec<f64> {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = terms.iter().map(|t| (t - max).exp()).collect();
    let total: f64 = scaled.iter().sum();
    scaled.iter().map(|v| v / total).collect()
}

/// Attempts a split of `own[index]`. Returns whether it was applied.
///
/// Nothing happens when the class is already at `k_max` components, when the
/// other class is empty, when the candidate does not overlap the closest
/// opposing component, or when its samples form a single group.
pub fn split(own: &mut Vec<Component>, index: usize, other: &[Component], config: &CmmConfig) -> bool {
    if own.len() >= config.k_max {
        return false;
    }
    let candidate = &own[index];
    let Some(rival) = closest_component(other, candidate.mean(), None) else {
        return false;
    };
    if !intersects(candidate, &other[rival], config.alpha).is_overlap() {
        return false;
    }
    let points: Vec<&[f64]> = candidate.samples().iter().map(|s| s.feature.as_slice()).collect();
    let Some((first, second)) = partition_for_split(&points) else {
        return false;
    };
    let mut samples: Vec<Option<LabeledSample>> = own.remove(index).into_samples().into_iter().map(Some).collect();
    let mut take =
        |idx: &[usize]| -> Vec<LabeledSample> { idx.iter().map(|&i| samples[i].take().expect("disjoint groups")).collect() };
    let (a, b) = (take(&first), take(&second));
    own.insert(index, Component::from_samples(b, config));
    own.insert(index, Component::from_samples(a, config));
    true
}

/// Attempts to merge `own[index]` with its closest same-class component.
/// Returns whether it was applied.
pub fn merge(own: &mut Vec<Component>, index: usize, config: &CmmConfig) -> bool {
    let candidate = &own[index];
    let Some(partner) = closest_component(own, candidate.mean(), Some(index)) else {
        return false;
    };
    if !intersects(candidate, &own[partner], config.alpha).is_overlap() {
        return false;
    }
    let (lo, hi) = (index.min(partner), index.max(partner));
    let removed = own.remove(hi);
    let kept = own.remove(lo);
    let (first, second) = if index < partner { (kept, removed) } else { (removed, kept) };
    let mut samples = first.into_samples();
    samples.extend(second.into_samples());
    own.insert(lo, Component::from_samples(samples, config));
    true
}

/// The online classifier. See the module docs.
#[derive(Debug, Clone)]
pub struct MixtureClassifier {
    config: CmmConfig,
    effect: Vec<Component>,
    no_effect: Vec<Component>,
    rng: ChaCha8Rng,
}

impl MixtureClassifier {
    pub fn new(config: CmmConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            effect: Vec::new(),
            no_effect: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn config(&self) -> &CmmConfig {
        &self.config
    }

    pub fn components(&self, class: Outcome) -> &[Component] {
        match class {
            Outcome::Effect => &self.effect,
            Outcome::NoEffect => &self.no_effect,
        }
    }

    /// Number of stored samples of `class` (`|S_E|`).
    pub fn class_size(&self, class: Outcome) -> usize {
        self.components(class).iter().map(Component::size).sum()
    }

    pub fn total_samples(&self) -> usize {
        self.class_size(Outcome::Effect) + self.class_size(Outcome::NoEffect)
    }

    pub fn is_empty(&self) -> bool {
        self.effect.is_empty() && self.no_effect.is_empty()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.config.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.feature_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Probability that `x` belongs to the effect class,
    /// `(1 + G_e) / (2 + G_e + G_not_e)` with `G` the weighted class mixtures.
    ///
    /// Evaluated in log space. The result is kept strictly inside (0, 1) even
    /// when one density dominates beyond double precision.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let le = mixture_log_density(&self.effect, x).unwrap_or(f64::NEG_INFINITY);
        let ln = mixture_log_density(&self.no_effect, x).unwrap_or(f64::NEG_INFINITY);
        let numerator = log_sum_exp(&[0.0, le]);
        let denominator = log_sum_exp(&[std::f64::consts::LN_2, le, ln]);
        let p = (numerator - denominator).exp();
        Ok(p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
    }

    /// Posterior over the components of `class` for `x`.
    pub fn membership(&self, class: Outcome, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let set = self.components(class);
        if set.is_empty() {
            return Err(Error::NoComponents(class));
        }
        Ok(normalize_log_terms(&weighted_log_terms(set, &class_weights(set), x)))
    }

    /// Posterior over all components of both classes, effect class first,
    /// weighted by component size over the whole dataset. Empty when the
    /// classifier holds no component.
    pub fn pooled_membership(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let all: Vec<Component> = self.effect.iter().chain(&self.no_effect).cloned().collect();
        if all.is_empty() {
            return Ok(Vec::new());
        }
        Ok(normalize_log_terms(&weighted_log_terms(&all, &class_weights(&all), x)))
    }

    fn set_mut(&mut self, class: Outcome) -> &mut Vec<Component> {
        match class {
            Outcome::Effect => &mut self.effect,
            Outcome::NoEffect => &mut self.no_effect,
        }
    }

    fn split_else_merge(&mut self, class: Outcome, index: usize) {
        let config = self.config.clone();
        let (own, other) = match class {
            Outcome::Effect => (&mut self.effect, &self.no_effect),
            Outcome::NoEffect => (&mut self.no_effect, &self.effect),
        };
        if !split(own, index, other, &config) {
            merge(own, index, &config);
        }
    }

    /// Online training step: the sample joins (or founds) the closest
    /// component of its class, that component is split-else-merged, then one
    /// uniformly chosen component of each class gets the same treatment.
    pub fn add_sample(&mut self, sample: LabeledSample) -> Result<()> {
        self.check_dim(sample.feature.as_slice())?;
        let class = sample.label;
        let config = self.config.clone();
        let set = self.set_mut(class);
        let index = match closest_component(set, sample.feature.as_slice(), None) {
            None => {
                set.push(Component::from_samples(vec![sample], &config));
                0
            }
            Some(i) => {
                set[i].push(sample, &config);
                i
            }
        };
        if config.alpha >= 1.0 {
            return Ok(());
        }
        self.split_else_merge(class, index);
        for class in [Outcome::Effect, Outcome::NoEffect] {
            let len = self.components(class).len();
            if len > 0 {
                let pick = self.rng.random_range(0..len);
                self.split_else_merge(class, pick);
            }
        }
        Ok(())
    }

    /// Serializes the full state (config, generator, every component) to a
    /// versioned JSON document.
    pub fn to_text(&self) -> String {
        let file = ClassifierFile {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            config: self.config.clone(),
            rng: self.rng.clone(),
            effect: self.effect.iter().map(ComponentRecord::from).collect(),
            no_effect: self.no_effect.iter().map(ComponentRecord::from).collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("classifier state serializes");
        text.push('\n');
        text
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let file: ClassifierFile = serde_json::from_str(text)?;
        if file.format != FORMAT_TAG {
            return Err(Error::Parse {
                what: "classifier checkpoint",
                line: 1,
                reason: format!("unexpected format tag {:?}", file.format),
            });
        }
        if file.version != FORMAT_VERSION {
            return Err(Error::Version {
                what: "classifier checkpoint",
                found: file.version,
            });
        }
        file.config.validate()?;
        let rebuild = |records: Vec<ComponentRecord>, class: Outcome| -> Result<Vec<Component>> {
            records.into_iter().map(|r| r.into_component(class, &file.config)).collect()
        };
        Ok(Self {
            effect: rebuild(file.effect, Outcome::Effect)?,
            no_effect: rebuild(file.no_effect, Outcome::NoEffect)?,
            config: file.config,
            rng: file.rng,
        })
    }

    /// SHA-256 of the serialized state, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

const FORMAT_TAG: &str = "cmm-classifier";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ClassifierFile {
    format: String,
    version: u32,
    config: CmmConfig,
    rng: ChaCha8Rng,
    effect: Vec<ComponentRecord>,
    no_effect: Vec<ComponentRecord>,
}

#[derive(Serialize, Deserialize)]
struct ComponentRecord {
    size: usize,
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
    samples: Vec<FeatureVector>,
}

impl From<&Component> for ComponentRecord {
    fn from(c: &Component) -> Self {
        let p = c.dim();
        Self {
            size: c.size(),
            mean: c.mean().to_vec(),
            covariance: c.covariance().chunks(p).map(<[f64]>::to_vec).collect(),
            samples: c.samples().iter().map(|s| s.feature.clone()).collect(),
        }
    }
}

impl ComponentRecord {
    fn into_component(self, class: Outcome, config: &CmmConfig) -> Result<Component> {
        let p = config.feature_dim;
        let bad = |reason: String| Error::Parse {
            what: "classifier checkpoint",
            line: 0,
            reason,
        };
        if self.samples.is_empty() || self.samples.len() != self.size {
            return Err(bad(format!(
                "component declares {} samples but stores {}",
                self.size,
                self.samples.len()
            )));
        }
        if self.mean.len() != p
            || self.covariance.len() != p
            || self.covariance.iter().any(|r| r.len() != p)
            || self.samples.iter().any(|s| s.dim() != p)
        {
            return Err(bad(format!("component dimensions do not match feature_dim {p}")));
        }
        let samples = self.samples.into_iter().map(|f| LabeledSample::new(f, class)).collect();
        Ok(Component::with_parameters(
            class,
            samples,
            self.mean,
            self.covariance.concat(),
            config.cov_regularization,
        ))
    }
}
