mod common;

use common::{hpd_set, rng};
use migdet::influence::{influence_bound, influence_fd_oracle, influence_matrix_at, ContaminationSetup};
use migdet::means::mean;
use migdet::{Hermitian, Hpd, MeanKind};
use proptest::prelude::*;

/// `tr(X̄⁻¹ H)`.
fn whitened_trace(center: &Hpd, h: &Hermitian) -> f64 {
    (center.inverse().matrix() * h.matrix()).trace().re
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn closed_form_matches_oracle_for_tsl_and_tld(
        seed in any::<u64>(), n in 1usize..=8, m in 1usize..=50, outliers in 1usize..=5,
    ) {
        let mut r = rng(seed);
        let base = hpd_set(&mut r, m, n, 100.0);
        let extra = hpd_set(&mut r, outliers, n, 100.0);
        let setup = ContaminationSetup::with_default_epsilon(base, extra).unwrap();
        for kind in [MeanKind::Tsl, MeanKind::Tld, MeanKind::ScmArithmetic] {
            let center = mean(kind, &setup.base).unwrap().mean;
            let closed = influence_matrix_at(kind, &center, &setup).unwrap();
            let oracle = influence_fd_oracle(kind, &setup).unwrap();
            let err = (closed.matrix() - oracle.matrix()).norm() / (1.0 + closed.norm());
            prop_assert!(err <= 5e-3, "{kind}: {err}");
        }
    }

    #[test]
    fn airm_and_tvn_satisfy_the_trace_condition(
        seed in any::<u64>(), n in 1usize..=6, m in 1usize..=20, outliers in 1usize..=5,
    ) {
        let mut r = rng(seed);
        let base = hpd_set(&mut r, m, n, 100.0);
        let extra = hpd_set(&mut r, outliers, n, 100.0);
        let setup = ContaminationSetup::with_default_epsilon(base, extra).unwrap();
        for kind in [MeanKind::Airm, MeanKind::Tvn] {
            let center = mean(kind, &setup.base).unwrap().mean;
            let closed = whitened_trace(&center, &influence_matrix_at(kind, &center, &setup).unwrap());
            let oracle = whitened_trace(&center, &influence_fd_oracle(kind, &setup).unwrap());
            prop_assert!((closed - oracle).abs() <= 1e-3 * (1.0 + closed.abs()), "{kind}: {closed} vs {oracle}");
        }
    }

    #[test]
    fn outliers_at_the_mean_have_no_influence(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=10) {
        let base = hpd_set(&mut rng(seed), m, n, 100.0);
        for kind in MeanKind::ALL {
            let center = mean(kind, &base).unwrap().mean;
            let setup = ContaminationSetup::with_default_epsilon(base.clone(), vec![center.clone(); 3]).unwrap();
            let h = influence_matrix_at(kind, &center, &setup).unwrap();
            prop_assert!(h.norm() <= 1e-8 * (1.0 + center.norm()), "{kind}: {}", h.norm());
        }
    }

    #[test]
    fn tsl_influence_respects_its_bound(
        seed in any::<u64>(), n in 1usize..=6, m in 1usize..=20, blowup in 0.0f64..8.0,
    ) {
        let mut r = rng(seed);
        let base = hpd_set(&mut r, m, n, 100.0);
        let extra: Vec<Hpd> = hpd_set(&mut r, 3, n, 100.0)
            .into_iter()
            .map(|p| p.scale(10f64.powf(blowup)).unwrap())
            .collect();
        let bound = influence_bound(migdet::DivergenceKind::Tsl, &base).unwrap();
        let setup = ContaminationSetup::with_default_epsilon(base, extra).unwrap();
        let center = mean(MeanKind::Tsl, &setup.base).unwrap().mean;
        let h = influence_matrix_at(MeanKind::Tsl, &center, &setup).unwrap().norm();
        prop_assert!(h <= bound * (1.0 + 1e-12), "{h} > {bound}");
    }
}
