mod common;

use common::{rel, rng};
use migdet::hpd::{integral_identity_residual, log_derivative, matrix_exp};
use migdet::random::{random_hermitian_direction, random_hpd, random_unitary};
use migdet::{CMatrix, Hermitian, Hpd};
use proptest::prelude::*;

fn conjugate(u: &CMatrix, m: &CMatrix) -> CMatrix {
    u * m * u.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exp_inverts_log(seed in any::<u64>(), n in 1usize..=8, log_cond in 0.0f64..4.0) {
        let x = random_hpd(&mut rng(seed), n, 10f64.powf(log_cond));
        let back = matrix_exp(&x.log()).unwrap();
        prop_assert!(rel(back.matrix(), x.matrix()) < 1e-10);
    }

    #[test]
    fn log_inverts_exp(seed in any::<u64>(), n in 1usize..=8, size in 0.0f64..4.0) {
        let h = random_hermitian_direction(&mut rng(seed), n).scale(size);
        let back = matrix_exp(&h).unwrap().log();
        prop_assert!((back.matrix() - h.matrix()).norm() <= 1e-10 * (1.0 + h.norm()));
    }

    #[test]
    fn functions_commute_with_unitary_conjugation(seed in any::<u64>(), n in 1usize..=8, log_cond in 0.0f64..4.0) {
        let mut r = rng(seed);
        let x = random_hpd(&mut r, n, 10f64.powf(log_cond));
        let u = random_unitary(&mut r, n);
        let y = Hpd::new(conjugate(&u, x.matrix())).unwrap();
        prop_assert!(rel(y.sqrt().matrix(), &conjugate(&u, x.sqrt().matrix())) < 1e-10);
        prop_assert!(rel(y.inverse().matrix(), &conjugate(&u, x.inverse().matrix())) < 1e-10);
        let (ly, lx) = (y.log(), x.log());
        prop_assert!((ly.matrix() - conjugate(&u, lx.matrix())).norm() <= 1e-10 * (1.0 + lx.norm()));
        let h = random_hermitian_direction(&mut r, n);
        let hu = Hermitian::from_hermitian_part(&conjugate(&u, h.matrix()));
        let (eu, e) = (matrix_exp(&hu).unwrap(), matrix_exp(&h).unwrap());
        prop_assert!(rel(eu.matrix(), &conjugate(&u, e.matrix())) < 1e-10);
    }

    #[test]
    fn integral_identity_holds(seed in any::<u64>(), n in 1usize..=8, log_cond in 0.0f64..4.0) {
        let x = random_hpd(&mut rng(seed), n, 10f64.powf(log_cond));
        prop_assert!(integral_identity_residual(&x).unwrap() <= 1e-8);
    }

    #[test]
    fn log_derivative_matches_central_differences(seed in any::<u64>(), n in 1usize..=6, log_cond in 0.0f64..3.0) {
        let mut r = rng(seed);
        let a = random_hpd(&mut r, n, 10f64.powf(log_cond));
        let h = random_hermitian_direction(&mut r, n);
        let t = 1e-4 * a.eigenvalues()[0];
        let plus = Hpd::new(a.matrix() + h.matrix().scale(t)).unwrap().log();
        let minus = Hpd::new(a.matrix() - h.matrix().scale(t)).unwrap().log();
        let fd = (plus.matrix() - minus.matrix()).scale(0.5 / t);
        let exact = log_derivative(&a, &h).unwrap();
        prop_assert!(rel(&fd, exact.matrix()) < 1e-6, "{}", rel(&fd, exact.matrix()));
    }
}
