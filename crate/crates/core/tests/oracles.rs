mod common;

use affordance_core::cmm::fisher_quantile;
use affordance_core::cmm::Outcome;
use affordance_core::metrics::{prf, soft_counts, GroundTruth};
use affordance_core::percept::features::ANGLE_BINS;
use affordance_core::percept::{fpfh, pair_angles, spfh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

#[test]
fn predict_matches_linear_space_densities() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..150 {
        let dim = rng.random_range(1..5);
        let c = common::random_classifier(&mut rng, dim);
        for _ in 0..5 {
            let x = common::random_point(&mut rng, dim);
            let got = c.predict(&x).unwrap();
            let want = common::predict(&c, &x);
            assert!(common::close(got, want, TOL), "case {case}: {got} vs {want}");
        }
    }
}

#[test]
fn membership_matches_normalized_weighted_densities() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    while checked < 150 {
        let dim = rng.random_range(1..5);
        let c = common::random_classifier(&mut rng, dim);
        let x = common::random_point(&mut rng, dim);
        for class in [Outcome::Effect, Outcome::NoEffect] {
            if c.components(class).is_empty() {
                assert!(c.membership(class, &x).is_err());
                continue;
            }
            let got = c.membership(class, &x).unwrap();
            let want = common::membership(&c, class, &x);
            assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                assert!(common::close(*g, *w, TOL), "{g} vs {w}");
            }
            checked += 1;
        }
    }
}

#[test]
fn component_moments_match_sample_estimates() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let dim = rng.random_range(1..5);
        let c = common::random_classifier(&mut rng, dim);
        let reg = c.config().cov_regularization;
        for class in [Outcome::Effect, Outcome::NoEffect] {
            for comp in c.components(class) {
                if comp.size() < 2 {
                    continue;
                }
                let xs: Vec<Vec<f64>> = comp.samples().iter().map(|s| s.feature.0.clone()).collect();
                let (mean, cov) = common::sample_moments(&xs, reg);
                for (a, b) in comp.mean().iter().zip(&mean) {
                    assert!(common::close(*a, *b, 1e-12));
                }
                for (a, b) in comp.covariance().iter().zip(&cov) {
                    assert!(common::close(*a, *b, 1e-12));
                }
            }
        }
    }
}

#[test]
fn soft_counts_and_scores_match_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..200 {
        let n = rng.random_range(2..60);
        let mut background: Vec<bool> = (0..n).map(|_| rng.random_bool(0.6)).collect();
        // both classes present so every score is defined
        background[0] = true;
        background[1] = false;
        let gt = GroundTruth { background };
        let pred: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let c = soft_counts(&pred, &gt).unwrap();
        let [tp, tn, fp, fneg] = common::soft_counts(&pred, &gt);
        for (g, w) in [c.tp, c.tn, c.fp, c.fn_].iter().zip([tp, tn, fp, fneg]) {
            assert!(common::close(*g, w, TOL));
        }
        let s = prf(&c);
        let [p, r, a] = common::prf(&pred, &gt);
        assert!(common::close(s.precision, p, TOL));
        assert!(common::close(s.recall, r, TOL));
        assert!(common::close(s.accuracy, a, TOL));
        assert!(!s.degenerate.any());
        // soft counts partition the mass
        assert!(common::close(c.tp + c.tn + c.fp + c.fn_, n as f64, 1e-9));
    }
}

#[test]
fn pair_angles_match_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..1000 {
        let s = common::random_sample(&mut rng, 1.0);
        let t = common::random_sample(&mut rng, 1.0);
        let (a, p, th) = pair_angles(&s, &t).unwrap();
        let (ra, rp, rth) = common::pair_angles(&s, &t).unwrap();
        assert!(common::close(a, ra, TOL) && common::close(p, rp, TOL) && common::close(th, rth, TOL));
        assert!((-1.0..=1.0).contains(&p));
        assert!(th > -std::f64::consts::PI && th <= std::f64::consts::PI);
    }
}

#[test]
fn spfh_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..200 {
        let center = common::random_sample(&mut rng, 1.0);
        let k = rng.random_range(0..12);
        let nb: Vec<_> = (0..k).map(|_| common::random_sample(&mut rng, 1.0)).collect();
        let got = spfh(&center, &nb, ANGLE_BINS);
        let want = common::spfh(&center, &nb, ANGLE_BINS);
        for (g, w) in got.iter().zip(&want) {
            assert!(common::close(*g, *w, TOL));
        }
    }
}

#[test]
fn fpfh_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let n = rng.random_range(1..15);
        let segs = common::random_segments(&mut rng, n);
        let radius = rng.random_range(0.05..0.4);
        for i in 0..n {
            let got = fpfh(&segs, i, radius);
            let want = common::fpfh(&segs, i, radius, ANGLE_BINS);
            for (g, w) in got.iter().zip(&want) {
                assert!(common::close(*g, *w, TOL));
            }
            assert!(common::close(got.iter().sum::<f64>(), 1.0, 1e-12));
        }
    }
}

#[test]
fn fisher_quantile_matches_numeric_integration() {
    for &(prob, d1, d2) in &common::F_TRIPLES {
        let (a, b) = (0.5 * f64::from(d1), 0.5 * f64::from(d2));
        let ln_beta = statrs::function::gamma::ln_gamma(a) + statrs::function::gamma::ln_gamma(b)
            - statrs::function::gamma::ln_gamma(a + b);
        let want = common::f_quantile_numeric(prob, f64::from(d1), f64::from(d2), ln_beta);
        let got = fisher_quantile(prob, d1, d2).unwrap();
        assert!(((got - want) / want).abs() < 1e-6, "({prob}, {d1}, {d2}): {got} vs {want}");
    }
}

#[test]
fn fisher_median_of_equal_dofs_is_one() {
    for d in [1, 10, 48] {
        assert!((fisher_quantile(0.5, d, d).unwrap() - 1.0).abs() < 1e-9);
    }
}
