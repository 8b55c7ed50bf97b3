//! Experiment driver: explores each scheduled affordance in turn, records
//! metrics and checkpoints, and merges the learnt maps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cmm::{FeatureVector, LabeledSample, MixtureClassifier, Outcome};
use crate::error::{io_err, Error, Result};
use crate::exploration::{explore, ExplorationState, InteractionRecord};
use crate::maps::{compose, merge_maps, relevance_map, AffordanceMap, RelevanceMap, DEFAULT_THRESHOLD};
use crate::metrics::{to_csv, MetricsRow};
use crate::percept::{perceive, Frame};
use crate::simworld::{ground_truth, Action, Scenario, SimWorld};

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub schedule: Vec<Action>,
    /// Policy-driven interactions per affordance, after any bootstrap.
    pub interactions: usize,
    pub seed: u64,
    pub checkpoint_every: usize,
    pub threshold: f64,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            seed: scenario.seed,
            scenario,
            schedule: Action::ALL.to_vec(),
            interactions: 200,
            checkpoint_every: 10,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.schedule.is_empty() {
            return Err(Error::InvalidConfig("empty affordance schedule".into()));
        }
        for (i, a) in self.schedule.iter().enumerate() {
            if self.schedule[..i].contains(a) {
                return Err(Error::InvalidConfig(format!("{a} is scheduled twice")));
            }
            if *a == Action::Lift && !self.schedule[..i].contains(&Action::Push) {
                return Err(Error::InvalidConfig(
                    "lift is composed with push, so push must run first".into(),
                ));
            }
        }
        if self.checkpoint_every == 0 {
            return Err(Error::InvalidConfig("checkpoint interval must be positive".into()));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "map threshold {} outside (0, 1]",
                self.threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Stream {
    Classifier = 0,
    Sensor = 1,
    Actuator = 2,
    Policy = 3,
    FinalFrame = 4,
}

fn action_index(a: Action) -> u64 {
    match a {
        Action::Push => 0,
        Action::Button => 1,
        Action::Lift => 2,
    }
}

/// Independent, reproducible seed per affordance and purpose.
fn derive_seed(seed: u64, action: Option<Action>, stream: Stream) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(action.map_or(15, action_index) * 16 + stream as u64);
    rng.next_u64()
}

fn rng_for(seed: u64, action: Option<Action>, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, action, stream))
}

pub fn new_classifier(config: &ExperimentConfig, action: Action) -> Result<MixtureClassifier> {
    MixtureClassifier::new(
        config.scenario.cmm.clone(),
        derive_seed(config.seed, Some(action), Stream::Classifier),
    )
}

/// Relevance of every segment, with lift filtered by the push map.
fn relevance_for(
    action: Action,
    classifier: &MixtureClassifier,
    push: Option<&MixtureClassifier>,
    frame: &Frame,
) -> Result<RelevanceMap> {
    let own = relevance_map(classifier, action, &frame.features)?;
    match (action, push) {
        (Action::Lift, Some(p)) => compose(&own, &relevance_map(p, Action::Push, &frame.features)?),
        _ => Ok(own),
    }
}

#[derive(Debug, Clone)]
pub struct AffordanceRun {
    pub action: Action,
    pub state: ExplorationState,
    pub rows: Vec<MetricsRow>,
    /// `(file name, serialized classifier)` in write order.
    pub checkpoints: Vec<(String, String)>,
}

impl AffordanceRun {
    pub fn final_row(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub runs: Vec<AffordanceRun>,
    /// Frame of the initial scene on which the final maps are evaluated.
    pub final_frame: Frame,
    pub relevance: Vec<RelevanceMap>,
    pub affordance_map: AffordanceMap,
}

impl RunOutput {
    pub fn run(&self, action: Action) -> Option<&AffordanceRun> {
        self.runs.iter().find(|r| r.action == action)
    }

    pub fn relevance_of(&self, action: Action) -> Option<&RelevanceMap> {
        self.relevance.iter().find(|m| m.affordance == action)
    }

    pub fn metrics_csv(&self) -> String {
        let rows: Vec<MetricsRow> = self.runs.iter().flat_map(|r| r.rows.iter().cloned()).collect();
        to_csv(&rows)
    }

    pub fn history_log(&self, seed: u64) -> String {
        let records: Vec<&InteractionRecord> = self.runs.iter().flat_map(|r| r.state.history.iter()).collect();
        format_history(seed, &records)
    }
}

/// Explores one affordance from the scenario's initial scene.
pub fn run_affordance(config: &ExperimentConfig, action: Action, push: Option<&MixtureClassifier>) -> Result<AffordanceRun> {
    let sc = &config.scenario;
    let mut world = SimWorld::new(
        sc,
        rng_for(config.seed, Some(action), Stream::Sensor),
        rng_for(config.seed, Some(action), Stream::Actuator),
    );
    let mut policy = rng_for(config.seed, Some(action), Stream::Policy);
    let mut state = ExplorationState::new(new_classifier(config, action)?, sc.exploration.quota_for(action));
    let bias = if action == Action::Lift { push } else { None };
    let mut rows = Vec::new();
    let mut checkpoints = Vec::new();

    explore(
        &mut state,
        &mut world,
        action,
        sc.exploration.bootstrap_cap,
        config.interactions,
        bias,
        &mut policy,
        |state, report| {
            let relevance = relevance_for(action, &state.classifier, push, &report.frame)?;
            // affordance flags never change during a run, so the initial scene serves
            let gt = ground_truth(&sc.scene, &report.frame, action);
            rows.push(MetricsRow::evaluate(
                action.name(),
                report.record.iteration,
                &relevance.weights,
                &gt,
            )?);
            if state.interaction_count % config.checkpoint_every == 0 {
                checkpoints.push((
                    format!("{action}_{:04}.cmm", state.interaction_count),
                    state.classifier.to_text(),
                ));
            }
            Ok(())
        },
    )?;
    checkpoints.push((format!("{action}_final.cmm"), state.classifier.to_text()));
    Ok(AffordanceRun {
        action,
        state,
        rows,
        checkpoints,
    })
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let mut runs: Vec<AffordanceRun> = Vec::new();
    for &action in &config.schedule {
        let push = runs.iter().find(|r| r.action == Action::Push).map(|r| &r.state.classifier);
        let run = run_affordance(config, action, push)?;
        runs.push(run);
    }
    let sc = &config.scenario;
    let final_frame = perceive(&sc.scene, &sc.percept(), &mut rng_for(config.seed, None, Stream::FinalFrame))?;
    let push = runs.iter().find(|r| r.action == Action::Push).map(|r| &r.state.classifier);
    let relevance = runs
        .iter()
        .map(|r| relevance_for(r.action, &r.state.classifier, push, &final_frame))
        .collect::<Result<Vec<_>>>()?;
    let affordance_map = merge_maps(&relevance, config.threshold)?;
    Ok(RunOutput {
        runs,
        final_frame,
        relevance,
        affordance_map,
    })
}

const HISTORY_COLUMNS: &str =
    "affordance\titeration\tphase\tsegment\tx\ty\tz\texecuted\teffect\tp_before\tuncertainty\tconfidence\tfeature";

pub fn format_history(seed: u64, records: &[&InteractionRecord]) -> String {
    let mut out = format!("# seed={seed}\n# {HISTORY_COLUMNS}\n");
    for r in records {
        let feature: Vec<String> = r.feature.0.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.action,
            r.iteration,
            r.phase.name(),
            r.segment,
            r.target[0],
            r.target[1],
            r.target[2],
            u8::from(r.executed),
            u8::from(r.effect),
            r.p_before,
            r.uncertainty,
            r.confidence,
            feature.join(",")
        );
    }
    out
}

/// One parsed history line; enough to re-train.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub action: Action,
    pub iteration: usize,
    pub effect: bool,
    pub feature: FeatureVector,
}

pub fn parse_history(text: &str) -> Result<(u64, Vec<HistoryEntry>)> {
    let err = |line: usize, reason: String| Error::Parse {
        what: "history log",
        line,
        reason,
    };
    let mut seed = None;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if let Some(rest) = line.strip_prefix("# seed=") {
            seed = Some(rest.trim().parse::<u64>().map_err(|e| err(n, e.to_string()))?);
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 13 {
            return Err(err(n, format!("expected 13 columns, found {}", cols.len())));
        }
        let action: Action = cols[0].parse()?;
        let iteration = cols[1].parse::<usize>().map_err(|e| err(n, e.to_string()))?;
        let effect = match cols[8] {
            "0" => false,
            "1" => true,
            other => return Err(err(n, format!("bad effect flag {other:?}"))),
        };
        let feature = cols[12]
            .split(',')
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| err(n, e.to_string()))?;
        entries.push(HistoryEntry {
            action,
            iteration,
            effect,
            feature: FeatureVector(feature),
        });
    }
    let seed = seed.ok_or_else(|| err(1, "missing seed header".into()))?;
    Ok((seed, entries))
}

/// Re-trains one classifier per affordance from a history log. With
/// `limit`, an affordance stops after that many of its interactions.
pub fn replay(history: &str, scenario: &Scenario, limit: Option<usize>) -> Result<BTreeMap<Action, MixtureClassifier>> {
    let (seed, entries) = parse_history(history)?;
    let mut config = ExperimentConfig::new(scenario.clone());
    config.seed = seed;
    let mut out: BTreeMap<Action, MixtureClassifier> = BTreeMap::new();
    for e in entries {
        let c = match out.entry(e.action) {
            std::collections::btree_map::Entry::Occupied(slot) => slot.into_mut(),
            std::collections::btree_map::Entry::Vacant(slot) => slot.insert(new_classifier(&config, e.action)?),
        };
        if limit.is_some_and(|l| c.total_samples() >= l) {
            continue;
        }
        c.add_sample(LabeledSample::new(e.feature, Outcome::from_flag(e.effect)))?;
    }
    Ok(out)
}

/// Paths and contents written by [`write_outputs`], relative to the root.
pub fn output_files(config: &ExperimentConfig, out: &RunOutput) -> Result<Vec<(PathBuf, String)>> {
    let mut files = vec![
        (PathBuf::from("metrics.csv"), out.metrics_csv()),
        (PathBuf::from("history.log"), out.history_log(config.seed)),
        (PathBuf::from("scenario.resolved.toml"), resolved_toml(config)),
    ];
    for r in &out.runs {
        for (name, text) in &r.checkpoints {
            files.push((Path::new("checkpoints").join(name), text.clone()));
        }
    }
    let centroids: Vec<_> = out.final_frame.segments.iter().map(|s| s.centroid.position).collect();
    for m in &out.relevance {
        files.push((
            Path::new("maps").join(format!("{}_relevance.txt", m.affordance)),
            m.to_text(&centroids)?,
        ));
    }
    files.push((
        Path::new("maps").join("affordance_map.txt"),
        out.affordance_map.to_text(&centroids)?,
    ));
    Ok(files)
}

fn resolved_toml(config: &ExperimentConfig) -> String {
    let mut sc = config.scenario.clone();
    sc.seed = config.seed;
    sc.to_toml()
}

pub fn write_outputs(dir: &Path, config: &ExperimentConfig, out: &RunOutput) -> Result<()> {
    for (rel, text) in output_files(config, out)? {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    Ok(())
}

/// Replays `dir/history.log` against every numbered checkpoint in
/// `dir/checkpoints` and returns how many were verified.
pub fn verify_replay(dir: &Path) -> Result<usize> {
    let scenario_path = dir.join("scenario.resolved.toml");
    let scenario = Scenario::load(&scenario_path)?;
    let history_path = dir.join("history.log");
    let history = fs::read_to_string(&history_path).map_err(io_err(&history_path))?;
    let ckpt_dir = dir.join("checkpoints");
    let mut names: Vec<PathBuf> = fs::read_dir(&ckpt_dir)
        .map_err(io_err(&ckpt_dir))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(&ckpt_dir)))
        .collect::<Result<_>>()?;
    names.sort();
    let full = replay(&history, &scenario, None)?;
    let mut verified = 0;
    for path in names {
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let Some((aff, tag)) = stem.rsplit_once('_') else {
            continue;
        };
        let action: Action = aff.parse()?;
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let expected = MixtureClassifier::from_text(&text)?.digest();
        let actual = if tag == "final" {
            full.get(&action).map(MixtureClassifier::digest)
        } else {
            let n: usize = tag.parse().map_err(|_| Error::Parse {
                what: "checkpoint name",
                line: 0,
                reason: stem.to_string(),
            })?;
            replay(&history, &scenario, Some(n))?
                .get(&action)
                .map(MixtureClassifier::digest)
        }
        .unwrap_or_default();
        if actual != expected {
            return Err(Error::ReplayMismatch {
                checkpoint: path,
                expected,
                actual,
            });
        }
        verified += 1;
    }
    Ok(verified)
}
