//! Soft-count precision, recall and balanced accuracy.
//!
//! Predictions are probabilities, so every segment contributes fractionally
//! to both the positive and negative counts.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};

/// Per-segment ground truth. `background[i]` is the Kronecker flag: true when
/// segment `i` does not afford the studied action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub background: Vec<bool>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.background.len()
    }

    pub fn is_empty(&self) -> bool {
        self.background.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SoftCounts {
    pub tp: f64,
    pub tn: f64,
    pub fp: f64,
    pub fn_: f64,
    /// Mass of segments that afford the action.
    pub gt_effect: f64,
    /// Mass of background segments.
    pub gt_no_effect: f64,
}

pub fn soft_counts(predictions: &[f64], gt: &GroundTruth) -> Result<SoftCounts> {
    if predictions.len() != gt.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: gt.len(),
        });
    }
    let mut c = SoftCounts::default();
    for (&p, &bg) in predictions.iter().zip(&gt.background) {
        let delta = if bg { 1.0 } else { 0.0 };
        c.tp += p * (1.0 - delta);
        c.tn += (1.0 - p) * delta;
        c.fp += p * delta;
        c.fn_ += (1.0 - p) * (1.0 - delta);
        c.gt_effect += 1.0 - delta;
        c.gt_no_effect += delta;
    }
    Ok(c)
}

/// Which scores hit a zero denominator and were reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Degenerate {
    pub precision: bool,
    pub recall: bool,
    pub accuracy: bool,
}

impl Degenerate {
    pub fn any(&self) -> bool {
        self.precision || self.recall || self.accuracy
    }
}

impl fmt::Display for Degenerate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.precision, "precision_undefined"),
            (self.recall, "recall_undefined"),
            (self.accuracy, "accuracy_undefined"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, n)| *n)
        .collect();
        f.write_str(&names.join("|"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub degenerate: Degenerate,
}

fn ratio(num: f64, den: f64, flag: &mut bool) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        *flag = true;
        0.0
    }
}

pub fn prf(c: &SoftCounts) -> Scores {
    let mut degenerate = Degenerate::default();
    let precision = ratio(c.tp, c.tp + c.fp, &mut degenerate.precision);
    let recall = ratio(c.tp, c.tp + c.fn_, &mut degenerate.recall);
    let accuracy = if c.gt_effect > 0.0 && c.gt_no_effect > 0.0 {
        0.5 * (c.tp / c.gt_effect + c.tn / c.gt_no_effect)
    } else {
        degenerate.accuracy = true;
        0.0
    };
    Scores {
        precision,
        recall,
        accuracy,
        degenerate,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub affordance: String,
    pub iteration: usize,
    pub counts: SoftCounts,
    pub scores: Scores,
}

impl MetricsRow {
    pub fn evaluate(affordance: &str, iteration: usize, predictions: &[f64], gt: &GroundTruth) -> Result<Self> {
        let counts = soft_counts(predictions, gt)?;
        Ok(Self {
            affordance: affordance.to_string(),
            iteration,
            scores: prf(&counts),
            counts,
        })
    }
}

pub const CSV_HEADER: &str = "affordance,iteration,tp,tn,fp,fn,precision,recall,accuracy,flags";

/// Renders rows as CSV, header included.
pub fn to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.affordance,
            r.iteration,
            r.counts.tp,
            r.counts.tn,
            r.counts.fp,
            r.counts.fn_,
            r.scores.precision,
            r.scores.recall,
            r.scores.accuracy,
            r.scores.degenerate
        );
    }
    out
}
