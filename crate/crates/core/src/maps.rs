//! Relevance maps, composite affordances and the merged affordance map.

use std::fmt::Write as _;

use crate::cmm::{FeatureVector, MixtureClassifier};
use crate::error::{Error, Result};
use crate::percept::geom::Vec3;
use crate::simworld::Action;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Probability per segment that the segment affords `affordance`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceMap {
    pub affordance: Action,
    pub weights: Vec<f64>,
}

impl RelevanceMap {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// One line per segment: `id x y z weight`.
    pub fn to_text(&self, centroids: &[Vec3]) -> Result<String> {
        check_len(self.len(), centroids.len())?;
        let mut out = format!("# affordance={}\n# id x y z weight\n", self.affordance);
        for (i, (w, c)) in self.weights.iter().zip(centroids).enumerate() {
            let _ = writeln!(out, "{i} {} {} {} {}", c[0], c[1], c[2], w);
        }
        Ok(out)
    }
}

fn check_len(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::SegmentationMismatch { left, right })
    }
}

pub fn relevance_map(classifier: &MixtureClassifier, affordance: Action, features: &[FeatureVector]) -> Result<RelevanceMap> {
    let weights = features
        .iter()
        .map(|x| classifier.predict(&x.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(RelevanceMap { affordance, weights })
}

/// Composite affordance: the conditional map filtered by its base.
pub fn compose(conditional: &RelevanceMap, base: &RelevanceMap) -> Result<RelevanceMap> {
    compose_many(conditional, std::slice::from_ref(base))
}

/// Conditional map times the product of independent base maps.
pub fn compose_many(conditional: &RelevanceMap, bases: &[RelevanceMap]) -> Result<RelevanceMap> {
    let mut weights = conditional.weights.clone();
    for b in bases {
        check_len(weights.len(), b.len())?;
        for (w, v) in weights.iter_mut().zip(&b.weights) {
            *w *= v;
        }
    }
    Ok(RelevanceMap {
        affordance: conditional.affordance,
        weights,
    })
}

/// More specific affordances win ties.
pub fn priority(a: Action) -> u8 {
    match a {
        Action::Push => 0,
        Action::Button => 1,
        Action::Lift => 2,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffordanceMap {
    pub affordances: Vec<Action>,
    /// Per segment, one weight per entry of `affordances`; sub-threshold
    /// weights are exactly zero.
    pub weights: Vec<Vec<f64>>,
    pub labels: Vec<Option<Action>>,
}

/// Zeroes weights below `threshold` and labels each segment with its
/// strongest surviving affordance.
pub fn merge_maps(maps: &[RelevanceMap], threshold: f64) -> Result<AffordanceMap> {
    let n = maps.first().map_or(0, RelevanceMap::len);
    for m in maps {
        check_len(n, m.len())?;
    }
    let mut weights = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let row: Vec<f64> = maps
            .iter()
            .map(|m| if m.weights[i] >= threshold { m.weights[i] } else { 0.0 })
            .collect();
        let label = maps
            .iter()
            .zip(&row)
            .filter(|(_, w)| **w > 0.0)
            .max_by(|(a, wa), (b, wb)| wa.total_cmp(wb).then(priority(a.affordance).cmp(&priority(b.affordance))))
            .map(|(m, _)| m.affordance);
        weights.push(row);
        labels.push(label);
    }
    Ok(AffordanceMap {
        affordances: maps.iter().map(|m| m.affordance).collect(),
        weights,
        labels,
    })
}

impl AffordanceMap {
    /// Surviving weights as relevance maps again.
    pub fn surviving(&self) -> Vec<RelevanceMap> {
        self.affordances
            .iter()
            .enumerate()
            .map(|(k, &a)| RelevanceMap {
                affordance: a,
                weights: self.weights.iter().map(|row| row[k]).collect(),
            })
            .collect()
    }

    /// One line per segment: `id x y z`, one weight column per affordance,
    /// then the label (`none` when nothing survived).
    pub fn to_text(&self, centroids: &[Vec3]) -> Result<String> {
        check_len(self.weights.len(), centroids.len())?;
        let mut out = String::from("# id x y z");
        for a in &self.affordances {
            let _ = write!(out, " {a}");
        }
        out.push_str(" label\n");
        for (i, (row, c)) in self.weights.iter().zip(centroids).enumerate() {
            let _ = write!(out, "{i} {} {} {}", c[0], c[1], c[2]);
            for w in row {
                let _ = write!(out, " {w}");
            }
            let label = self.labels[i].map_or("none", Action::name);
            let _ = writeln!(out, " {label}");
        }
        Ok(out)
    }
}
