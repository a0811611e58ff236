mod common;

use common::rng;
use migdet::detectors::{amf_statistic, mig_statistic, regularized_scm, DetectorKind, FeatureStructure};
use migdet::divergence::tbd;
use migdet::harness::{
    calibrate_thresholds, estimate_pd_all, run_trial_h0, run_trial_h1, threshold_from_statistics, validate_cfar,
    DetectionScenario,
};
use migdet::random::{complex_normal_vector, random_hpd, random_invertible, trial_rng};
use migdet::{CMatrix, DivergenceKind, Hpd};
use proptest::prelude::*;

/// TLD statistic written out with LU inverses and determinants.
fn tld_by_hand(x: &Hpd, r: &Hpd) -> f64 {
    let n = x.dim();
    let r_inv = r.matrix().clone().try_inverse().unwrap();
    let x_inv = x.matrix().clone().try_inverse().unwrap();
    let log_det = (r.matrix() * x_inv).determinant().ln().re;
    let trace = (&r_inv * x.matrix()).trace().re;
    (log_det + trace - n as f64) / (1.0 + r_inv.norm_squared()).sqrt()
}

fn tsl_by_hand(x: &Hpd, r: &Hpd) -> f64 {
    0.5 * (x.matrix() - r.matrix()).norm_squared() / (1.0 + r.matrix().norm_squared()).sqrt()
}

fn small_scenario(detector: DetectorKind) -> DetectionScenario {
    DetectionScenario::standard(8, FeatureStructure::Toeplitz, detector)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mig_statistics_match_their_divergences(seed in any::<u64>(), n in 1usize..=8, log_cond in 0.0f64..3.0) {
        let mut r = rng(seed);
        let cond = 10f64.powf(log_cond);
        let x = random_hpd(&mut r, n, cond);
        let y = random_hpd(&mut r, n, cond);
        for kind in DivergenceKind::TOTAL_BREGMAN {
            let a = mig_statistic(kind, &x, &y).unwrap();
            let b = tbd(kind, &x, &y).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
        }
        let tld = mig_statistic(DivergenceKind::Tld, &x, &y).unwrap();
        prop_assert!((tld - tld_by_hand(&x, &y)).abs() <= 1e-8 * (1.0 + tld));
        let tsl = mig_statistic(DivergenceKind::Tsl, &x, &y).unwrap();
        prop_assert!((tsl - tsl_by_hand(&x, &y)).abs() <= 1e-10 * (1.0 + tsl));
    }

    #[test]
    fn airm_statistic_is_symmetric_and_congruence_invariant(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let x = random_hpd(&mut r, n, 1e3);
        let y = random_hpd(&mut r, n, 1e3);
        let t = mig_statistic(DivergenceKind::Airm, &x, &y).unwrap();
        prop_assert!((t - mig_statistic(DivergenceKind::Airm, &y, &x).unwrap()).abs() <= 1e-8 * (1.0 + t));
        let a = random_invertible(&mut r, n);
        let moved = mig_statistic(DivergenceKind::Airm, &x.congruence(&a).unwrap(), &y.congruence(&a).unwrap()).unwrap();
        prop_assert!((t - moved).abs() <= 1e-8 * (1.0 + t));
    }

    #[test]
    fn amf_matches_a_linear_solve(seed in any::<u64>(), n in 2usize..=8) {
        let mut r = rng(seed);
        let cov = random_hpd(&mut r, n, 1e3);
        let x = complex_normal_vector(&mut r, n);
        let p = complex_normal_vector(&mut r, n);
        let lu = cov.matrix().clone().lu();
        let rx = lu.solve(&p).unwrap();
        let expected = x.dotc(&rx).norm_sqr() / p.dotc(&rx).re;
        let t = amf_statistic(&x, &cov, &p).unwrap();
        prop_assert!((t - expected).abs() <= 1e-9 * (1.0 + expected));
    }

    #[test]
    fn threshold_never_drops_when_pfa_drops(stats in prop::collection::vec(0.0f64..100.0, 100..400), a in 0.01f64..1.0, b in 0.01f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let strict = threshold_from_statistics(DetectorKind::Amf, &stats, lo).unwrap();
        let loose = threshold_from_statistics(DetectorKind::Amf, &stats, hi).unwrap();
        prop_assert!(strict.threshold >= loose.threshold);
        prop_assert!(strict.empirical_pfa <= lo + 1e-12);
    }
}

#[test]
fn sample_covariance_is_loaded_only_when_needed() {
    let mut r = rng(3);
    let n = 8;
    let full: Vec<_> = (0..32).map(|_| complex_normal_vector(&mut r, n)).collect();
    assert!(!regularized_scm(&full).unwrap().regularized);
    let short = &full[..4];
    let est = regularized_scm(short).unwrap();
    assert!(est.regularized);
    assert!(est.matrix.condition_number() <= 1e12);
}

#[test]
fn trials_replay_from_their_stream() {
    let scenario = small_scenario(DetectorKind::TldMig);
    let a = run_trial_h0(&scenario, &mut trial_rng(5, 1, 17)).unwrap();
    let b = run_trial_h0(&scenario, &mut trial_rng(5, 1, 17)).unwrap();
    let c = run_trial_h0(&scenario, &mut trial_rng(5, 1, 18)).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    assert_ne!(a, c);
}

#[test]
fn strong_targets_raise_every_statistic() {
    for d in DetectorKind::ALL {
        let scenario = small_scenario(d);
        let mut raised = 0;
        for t in 0..50 {
            let h0 = run_trial_h0(&scenario, &mut trial_rng(9, 2, t)).unwrap();
            let h1 = run_trial_h1(&scenario, 60.0, &mut trial_rng(9, 2, t)).unwrap();
            raised += usize::from(h1 > h0);
        }
        assert!(raised >= 48, "{d}: {raised}");
    }
}

#[test]
fn calibration_is_independent_of_worker_count() {
    let scenario = small_scenario(DetectorKind::TldMig);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| calibrate_thresholds(&scenario, &DetectorKind::ALL, 0.05, 400, 77).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one, four);
}

#[test]
fn detection_curves_behave_at_the_extremes() {
    let scenario = small_scenario(DetectorKind::TldMig);
    let thresholds = calibrate_thresholds(&scenario, &DetectorKind::ALL, 0.05, 400, 1).unwrap();
    let mut pairs: Vec<_> = thresholds.iter().map(|t| (t.detector, t.threshold)).collect();
    pairs.push((DetectorKind::Amf, f64::INFINITY));
    let curves = estimate_pd_all(&scenario, &pairs, &[-20.0, 80.0], 200, 1).unwrap();
    for c in &curves[..DetectorKind::ALL.len()] {
        assert!(c.rows[1].pd >= 0.99, "{}: {}", c.detector, c.rows[1].pd);
        assert!(c.rows[0].pd <= 0.15, "{}: {}", c.detector, c.rows[0].pd);
    }
    let never = &curves[DetectorKind::ALL.len()];
    assert!(never.rows.iter().all(|r| r.pd == 0.0));
}

#[test]
fn thresholds_hold_their_false_alarm_rate() {
    let scenario = small_scenario(DetectorKind::TldMig);
    let thresholds = calibrate_thresholds(&scenario, &DetectorKind::ALL, 0.05, 2000, 31).unwrap();
    let checks = validate_cfar(&scenario, &thresholds, 2000, 32).unwrap();
    for c in checks {
        assert!(c.passed, "{}: {} not in {:?}", c.detector, c.exceedances, c.interval);
    }
}

#[test]
fn scm_detector_reference_ignores_secondary_order() {
    // the reference estimate is a symmetric function of the secondary data
    let mut r = rng(8);
    let n = 6;
    let xs: Vec<_> = (0..10).map(|_| complex_normal_vector(&mut r, n)).collect();
    let mut rev = xs.clone();
    rev.reverse();
    let a = regularized_scm(&xs).unwrap().matrix;
    let b = regularized_scm(&rev).unwrap().matrix;
    let diff: CMatrix = a.matrix() - b.matrix();
    assert!(diff.norm() <= 1e-13 * a.norm());
}
