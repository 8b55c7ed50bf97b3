use affordance_core::cmm::{CmmConfig, FeatureVector, LabeledSample, MixtureClassifier, Outcome};
use affordance_core::exploration::{
    choice_score, confidence, explore, sample_target, uncertainty_fn, ChoiceMap, Environment, ExplorationState, Interaction,
    Phase,
};
use affordance_core::percept::{Frame, PointCloud, PointSample, Segment, SurfaceTag};
use affordance_core::simworld::Action;
use affordance_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A fixed scene of point-sized segments with 2-d features, where `affords`
/// decides the outcome of every interaction.
struct Scripted<F: Fn(usize) -> bool> {
    frame: Frame,
    affords: F,
}

impl<F: Fn(usize) -> bool> Scripted<F> {
    fn new(n: usize, seed: u64, affords: F) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<PointSample> = (0..n)
            .map(|i| PointSample {
                position: [i as f64, 0.0, 0.0],
                color: [50.0, 0.0, 0.0],
                normal: [0.0, 0.0, 1.0],
            })
            .collect();
        let segments = points
            .iter()
            .enumerate()
            .map(|(i, p)| Segment {
                id: i,
                indices: vec![i],
                points: vec![*p],
                centroid: *p,
                neighbors: Vec::new(),
            })
            .collect();
        let features = (0..n)
            .map(|i| {
                let base = if affords(i) { 0.8 } else { 0.2 };
                FeatureVector(vec![base + 0.05 * rng.random::<f64>(), base + 0.05 * rng.random::<f64>()])
            })
            .collect();
        Self {
            frame: Frame {
                cloud: PointCloud {
                    tags: vec![SurfaceTag::Table; n],
                    points,
                },
                segments,
                features,
            },
            affords,
        }
    }
}

impl<F: Fn(usize) -> bool> Environment for Scripted<F> {
    fn perceive(&mut self) -> Result<Frame> {
        Ok(self.frame.clone())
    }

    fn interact(&mut self, _: Action, _: &Frame, segment: usize) -> Result<Interaction> {
        Ok(Interaction {
            executed: true,
            effect: (self.affords)(segment),
        })
    }
}

fn classifier() -> MixtureClassifier {
    MixtureClassifier::new(
        CmmConfig {
            feature_dim: 2,
            cov_regularization: 1e-3,
            init_cov_scale: 0.01,
            ..CmmConfig::default()
        },
        5,
    )
    .unwrap()
}

#[test]
fn always_successful_world_labels_everything_as_effect() {
    let mut env = Scripted::new(12, 1, |_| true);
    let mut state = ExplorationState::new(classifier(), 0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    explore(&mut state, &mut env, Action::Push, 0, 30, None, &mut rng, |_, _| Ok(())).unwrap();
    assert_eq!(state.history.len(), 30);
    assert!(state.history.iter().all(|r| r.effect && r.phase == Phase::Explore));
    assert_eq!(state.classifier.class_size(Outcome::Effect), 30);
}

#[test]
fn bootstrap_waits_for_rare_positives() {
    // 2 positive segments out of 60
    let mut env = Scripted::new(60, 3, |i| i % 30 == 7);
    let mut state = ExplorationState::new(classifier(), 10);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut balanced_at = None;
    explore(
        &mut state,
        &mut env,
        Action::Button,
        10_000,
        5,
        None,
        &mut rng,
        |s, report| {
            if balanced_at.is_none() && !s.needs_bootstrap() {
                balanced_at = Some(report.record.iteration);
            }
            Ok(())
        },
    )
    .unwrap();
    let boot: Vec<_> = state.history.iter().filter(|r| r.phase == Phase::Bootstrap).collect();
    let last_boot = boot.last().unwrap().iteration;
    assert_eq!(Some(last_boot), balanced_at);
    let positives = boot.iter().filter(|r| r.effect).count();
    let negatives = boot.len() - positives;
    assert!(positives >= 10 && negatives >= 10);
    // the last bootstrap step is the one that completed the short class
    assert_eq!(positives.min(negatives), 10);
    assert!(boot.len() > 100, "rare positives need many draws, got {}", boot.len());
    assert_eq!(state.history.len(), boot.len() + 5);
}

#[test]
fn bootstrap_cap_bounds_a_class_that_never_appears() {
    let mut env = Scripted::new(10, 5, |_| false);
    let mut state = ExplorationState::new(classifier(), 10);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    explore(&mut state, &mut env, Action::Button, 25, 3, None, &mut rng, |_, _| Ok(())).unwrap();
    assert_eq!(state.history.len(), 28);
    assert!(state.needs_bootstrap());
}

#[test]
fn uncertainty_branches_meet_at_one_half() {
    let upper = |x: f64| -2.0 * x * ((2.0 * x).ln() - 1.0);
    let lower = |x: f64| {
        let y = 4.0 * x * x;
        -y * (y.ln() - 1.0)
    };
    assert!((upper(0.5) - 1.0).abs() < 1e-9);
    assert!((lower(0.5) - 1.0).abs() < 1e-9);
    assert!((uncertainty_fn(0.5) - 1.0).abs() < 1e-9);
    let mut prev = uncertainty_fn(0.5);
    for i in 1..=10_000 {
        let x = 0.5 + 0.5 * i as f64 / 10_000.0;
        let u = uncertainty_fn(x);
        assert!(u <= prev);
        prev = u;
    }
    assert!((prev + 2.0 * (2.0_f64.ln() - 1.0)).abs() < 1e-12);
}

#[test]
fn closer_to_one_half_never_scores_lower() {
    for i in 0..=500 {
        let d1 = 0.5 * i as f64 / 500.0;
        let d2 = (d1 + 0.001).min(0.5);
        for side in [-1.0, 1.0] {
            let (near, far) = (0.5 + side * d1, 0.5 + side * d2);
            for c in [0.0, 0.3, 0.9] {
                assert!(choice_score(uncertainty_fn(near), c) >= choice_score(uncertainty_fn(far), c));
            }
        }
    }
}

#[test]
fn majority_effect_class_favours_low_predictions() {
    let mut c = classifier();
    for k in 0..6 {
        let v = 0.8 + 0.01 * k as f64;
        c.add_sample(LabeledSample::new(vec![v, v], Outcome::Effect)).unwrap();
    }
    for k in 0..2 {
        let v = 0.2 + 0.01 * k as f64;
        c.add_sample(LabeledSample::new(vec![v, v], Outcome::NoEffect)).unwrap();
    }
    assert!(c.class_size(Outcome::Effect) > c.class_size(Outcome::NoEffect));
    let u = |p: f64| affordance_core::exploration::uncertainty_fn(1.0 - p);
    // mirrored curve: p near 0 beats p near 1
    assert!(u(0.02) > u(0.98));
    let low = [0.2, 0.2];
    let high = [0.8, 0.8];
    let (pl, ph) = (c.predict(&low).unwrap(), c.predict(&high).unwrap());
    assert!(pl < 0.5 && ph > 0.5);
    let ul = affordance_core::exploration::uncertainty(&c, &low).unwrap();
    let uh = affordance_core::exploration::uncertainty(&c, &high).unwrap();
    assert!((ul - uncertainty_fn(1.0 - pl)).abs() < 1e-15 && (uh - uncertainty_fn(1.0 - ph)).abs() < 1e-15);
    assert!(confidence(&c, &low).unwrap() > 0.0);
}

#[test]
fn empty_classifier_predicts_one_half() {
    let c = classifier();
    assert_eq!(c.predict(&[0.3, -2.0]).unwrap(), 0.5);
    let full = MixtureClassifier::new(CmmConfig::default(), 0).unwrap();
    assert_eq!(full.predict(&[0.0; 48]).unwrap(), 0.5);
}

#[test]
fn sampling_frequencies_follow_the_map() {
    let map = ChoiceMap::from_scores(vec![0.75, 0.25]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 10_000;
    let a = (0..n).filter(|_| sample_target(&map, &mut rng) == 0).count();
    assert!((a as f64 / n as f64 - 0.75).abs() <= 0.02);

    let seq = |seed| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..50).map(|_| sample_target(&map, &mut r)).collect::<Vec<_>>()
    };
    assert_eq!(seq(3), seq(3));
    assert_eq!(sample_target(&ChoiceMap::from_scores(vec![1.0]).unwrap(), &mut rng), 0);
}
