//! Uncertainty-driven choice of the next interaction target.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cmm::{FeatureVector, LabeledSample, MixtureClassifier, Outcome};
use crate::error::{Error, Result};
use crate::percept::geom::Vec3;
use crate::percept::Frame;
use crate::simworld::Action;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplorationParams {
    /// Samples of each class to collect before the policy takes over.
    pub bootstrap_quota: usize,
    /// Affordances that start with a bootstrap phase.
    pub bootstrap_actions: Vec<Action>,
    /// Upper bound on bootstrap interactions, in case one class never shows up.
    pub bootstrap_cap: usize,
}

impl Default for ExplorationParams {
    fn default() -> Self {
        Self {
            bootstrap_quota: 10,
            bootstrap_actions: vec![Action::Button, Action::Lift],
            bootstrap_cap: 500,
        }
    }
}

impl ExplorationParams {
    pub fn validate(&self) -> Result<()> {
        if self.bootstrap_quota > 0 && self.bootstrap_cap == 0 {
            return Err(Error::InvalidConfig("bootstrap_cap must be positive".into()));
        }
        Ok(())
    }

    pub fn quota_for(&self, action: Action) -> usize {
        if self.bootstrap_actions.contains(&action) {
            self.bootstrap_quota
        } else {
            0
        }
    }
}

/// Asymmetric uncertainty shape: 1 at 0.5, 0 at 0, `2(1 - ln 2)` at 1.
pub fn uncertainty_fn(x: f64) -> f64 {
    if x >= 0.5 {
        -2.0 * x * ((2.0 * x).ln() - 1.0)
    } else if x > 0.0 {
        let y = 4.0 * x * x;
        -y * (y.ln() - 1.0)
    } else {
        0.0
    }
}

/// Uncertainty of the classifier at `x`. The curve is mirrored when the
/// effect class holds more samples, so the minority class is favoured.
pub fn uncertainty(classifier: &MixtureClassifier, x: &[f64]) -> Result<f64> {
    let p = classifier.predict(x)?;
    Ok(uncertainty_from(classifier, p))
}

fn uncertainty_from(classifier: &MixtureClassifier, p: f64) -> f64 {
    if classifier.class_size(Outcome::Effect) <= classifier.class_size(Outcome::NoEffect) {
        uncertainty_fn(p)
    } else {
        uncertainty_fn(1.0 - p)
    }
}

/// Membership of `x` in its closest component over both classes; 0 when
/// the classifier holds nothing.
pub fn confidence(classifier: &MixtureClassifier, x: &[f64]) -> Result<f64> {
    Ok(classifier.pooled_membership(x)?.into_iter().fold(0.0, f64::max))
}

pub fn choice_score(u: f64, c: f64) -> f64 {
    u * (1.0 - c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceEntry {
    pub segment: usize,
    pub raw: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceMap {
    pub entries: Vec<ChoiceEntry>,
}

impl ChoiceMap {
    /// Normalizes raw scores; all-zero scores give the uniform distribution.
    pub fn from_scores(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Empty("choice map needs at least one segment"));
        }
        if let Some(bad) = raw.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::Domain(*bad));
        }
        let total: f64 = raw.iter().sum();
        let n = raw.len() as f64;
        let entries = raw
            .into_iter()
            .enumerate()
            .map(|(segment, r)| ChoiceEntry {
                segment,
                raw: r,
                probability: if total > 0.0 { r / total } else { 1.0 / n },
            })
            .collect();
        Ok(Self { entries })
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.probability).collect()
    }
}

/// Per-segment `u (1 - c)`, optionally multiplied by a prior weight per
/// segment (used to steer a composite affordance towards its base).
pub fn build_choice_map(classifier: &MixtureClassifier, features: &[FeatureVector], bias: Option<&[f64]>) -> Result<ChoiceMap> {
    if let Some(b) = bias {
        if b.len() != features.len() {
            return Err(Error::LengthMismatch {
                left: features.len(),
                right: b.len(),
            });
        }
    }
    let raw = features
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let u = uncertainty(classifier, &x.0)?;
            let c = confidence(classifier, &x.0)?;
            Ok(choice_score(u, c) * bias.map_or(1.0, |b| b[i]))
        })
        .collect::<Result<Vec<_>>>()?;
    ChoiceMap::from_scores(raw)
}

/// Categorical draw from the map.
pub fn sample_target<R: Rng + ?Sized>(map: &ChoiceMap, rng: &mut R) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for e in &map.entries {
        acc += e.probability;
        if r < acc {
            return e.segment;
        }
    }
    // rounding left the cumulative sum short of one
    map.entries
        .iter()
        .rev()
        .find(|e| e.probability > 0.0)
        .map_or(map.entries[0].segment, |e| e.segment)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Bootstrap,
    Explore,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Bootstrap => "bootstrap",
            Phase::Explore => "explore",
        }
    }
}

/// Result of acting on one segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interaction {
    pub executed: bool,
    pub effect: bool,
}

/// Something that can be looked at and acted on.
pub trait Environment {
    fn perceive(&mut self) -> Result<Frame>;
    fn interact(&mut self, action: Action, frame: &Frame, segment: usize) -> Result<Interaction>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionRecord {
    pub iteration: usize,
    pub phase: Phase,
    pub action: Action,
    pub segment: usize,
    pub target: Vec3,
    pub executed: bool,
    pub effect: bool,
    pub p_before: f64,
    pub uncertainty: f64,
    pub confidence: f64,
    pub feature: FeatureVector,
}

#[derive(Debug, Clone)]
pub struct ExplorationState {
    pub classifier: MixtureClassifier,
    pub interaction_count: usize,
    pub bootstrap_quota: usize,
    pub history: Vec<InteractionRecord>,
}

impl ExplorationState {
    pub fn new(classifier: MixtureClassifier, bootstrap_quota: usize) -> Self {
        Self {
            classifier,
            interaction_count: 0,
            bootstrap_quota,
            history: Vec::new(),
        }
    }

    /// True until both classes hold at least the quota.
    pub fn needs_bootstrap(&self) -> bool {
        let q = self.bootstrap_quota;
        self.classifier.class_size(Outcome::Effect) < q || self.classifier.class_size(Outcome::NoEffect) < q
    }
}

/// What one step saw and did; the frame is the one the decision was made on.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub frame: Frame,
    pub record: InteractionRecord,
}

/// One interaction: perceive, score segments, pick a target, act, detect
/// the effect and learn from it. In the bootstrap phase targets are drawn
/// uniformly (or in proportion to `bias` when given).
pub fn exploration_step<E: Environment + ?Sized, R: Rng + ?Sized>(
    state: &mut ExplorationState,
    env: &mut E,
    action: Action,
    phase: Phase,
    bias: Option<&MixtureClassifier>,
    rng: &mut R,
) -> Result<StepReport> {
    let frame = env.perceive()?;
    let bias_weights = bias
        .map(|b| frame.features.iter().map(|x| b.predict(&x.0)).collect::<Result<Vec<_>>>())
        .transpose()?;
    let map = match phase {
        Phase::Explore => build_choice_map(&state.classifier, &frame.features, bias_weights.as_deref())?,
        Phase::Bootstrap => ChoiceMap::from_scores(bias_weights.clone().unwrap_or_else(|| vec![1.0; frame.features.len()]))?,
    };
    let segment = sample_target(&map, rng);
    let x = frame.features[segment].clone();
    let p_before = state.classifier.predict(&x.0)?;
    let u = uncertainty_from(&state.classifier, p_before);
    let c = confidence(&state.classifier, &x.0)?;
    let outcome = env.interact(action, &frame, segment)?;
    // a primitive that could not run observed nothing, hence no effect
    let effect = outcome.executed && outcome.effect;
    state
        .classifier
        .add_sample(LabeledSample::new(x.clone(), Outcome::from_flag(effect)))?;
    let record = InteractionRecord {
        iteration: state.interaction_count,
        phase,
        action,
        segment,
        target: frame.segments[segment].centroid.position,
        executed: outcome.executed,
        effect,
        p_before,
        uncertainty: u,
        confidence: c,
        feature: x,
    };
    state.interaction_count += 1;
    state.history.push(record.clone());
    Ok(StepReport { frame, record })
}

/// Bootstrap steps while either class is short of the quota (at most
/// `bootstrap_cap` of them), then `interactions` policy-driven steps.
/// `on_step` sees the state and report after every step.
#[allow(clippy::too_many_arguments)]
pub fn explore<E, R, F>(
    state: &mut ExplorationState,
    env: &mut E,
    action: Action,
    bootstrap_cap: usize,
    interactions: usize,
    bias: Option<&MixtureClassifier>,
    rng: &mut R,
    mut on_step: F,
) -> Result<()>
where
    E: Environment + ?Sized,
    R: Rng + ?Sized,
    F: FnMut(&ExplorationState, &StepReport) -> Result<()>,
{
    let mut bootstrap_left = bootstrap_cap;
    let mut explore_left = interactions;
    loop {
        let phase = if bootstrap_left > 0 && state.needs_bootstrap() {
            bootstrap_left -= 1;
            Phase::Bootstrap
        } else if explore_left > 0 {
            explore_left -= 1;
            Phase::Explore
        } else {
            return Ok(());
        };
        let report = exploration_step(state, env, action, phase, bias, rng)?;
        on_step(state, &report)?;
    }
}
