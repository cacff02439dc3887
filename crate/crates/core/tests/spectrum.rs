use proptest::prelude::*;
use spdelab_core::spectrum::{c0, c_eps, TraceVerdict};
use spdelab_core::{SpectralOperator, Time};

fn eigen_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..200.0, 1..6).prop_map(|mut v| {
        v.sort_by(|a, b| a.total_cmp(b));
        v
    })
}

proptest! {
    #[test]
    fn semigroup_composes(eig in eigen_strategy(), s in 0.0f64..3.0, t in 0.0f64..3.0, seed in -5.0f64..5.0) {
        let op = SpectralOperator::new(eig.clone(), 0.5).unwrap();
        let x: Vec<f64> = (0..eig.len()).map(|k| seed + k as f64).collect();
        let a = op.semigroup_apply(s, &op.semigroup_apply(t, &x).unwrap()).unwrap();
        let b = op.semigroup_apply(s + t, &x).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-14 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn covariance_is_scaled_invariant_covariance(eig in eigen_strategy(), t in 1e-9f64..20.0) {
        let op = SpectralOperator::new(eig.clone(), 0.5).unwrap();
        let q = op.covariance_qt(t).unwrap().coefficients;
        let qi = op.covariance_qt(Time::Infinity).unwrap().coefficients;
        for k in 0..eig.len() {
            let oracle = qi[k] * -(-2.0 * t * eig[k]).exp_m1();
            prop_assert!((q[k] - oracle).abs() <= 1e-14 * oracle.abs());
            prop_assert!(q[k] <= qi[k]);
        }
    }

    #[test]
    fn covariance_is_monotone(eig in eigen_strategy(), t in 1e-6f64..10.0, dt in 0.0f64..1.0) {
        let op = SpectralOperator::new(eig, 0.5).unwrap();
        let a = op.covariance_qt(t).unwrap().coefficients;
        let b = op.covariance_qt(t + dt).unwrap().coefficients;
        for (u, v) in a.iter().zip(&b) {
            prop_assert!(u <= v);
        }
    }
}

#[test]
fn lambda_t_scaled_by_root_t_stays_below_one() {
    let op = SpectralOperator::new(vec![0.1, 1.0, 7.0, 100.0, 1e4], 0.5).unwrap();
    for i in 0..400 {
        let t = 10f64.powf(-10.0 + 12.0 * i as f64 / 399.0);
        let l = op.lambda_t_diag(t).unwrap().coefficients;
        for v in l {
            assert!(t.sqrt() * v <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn c0_matches_dense_scan() {
    // Dense scan on s ∈ [1e−8, 50] of √2√s e^{−s}(1 − e^{−2s})^{−1/2}.
    let mut best = 0.0f64;
    for i in 0..200_000 {
        let s = 10f64.powf(-8.0 + (50f64.log10() + 8.0) * i as f64 / 199_999.0);
        let v = 2f64.sqrt() * s.sqrt() * (-s).exp() / (-(-2.0 * s).exp_m1()).sqrt();
        best = best.max(v);
    }
    assert!((c0() - best).abs() < 1e-7);
    assert!(c_eps(0.2) > 0.0 && c_eps(0.2).is_finite());
}

#[test]
fn trace_verdicts_follow_growth_exponent() {
    for (alpha, delta, expected) in [
        (2.0, 0.4, TraceVerdict::Converges),
        (1.0, 0.0, TraceVerdict::Diverges),
        (2.0, 0.6, TraceVerdict::Diverges),
        (3.0, 0.6, TraceVerdict::Converges),
    ] {
        let op = SpectralOperator::from_growth(1.0, alpha, 50, 0.5).unwrap();
        let r = op.trace_check(delta, true).unwrap();
        assert_eq!(r.verdict, expected, "alpha {alpha} delta {delta}");
        let oracle: f64 = (1..=50).map(|k| (k as f64).powf(-alpha * (1.0 - delta))).sum();
        assert!((r.partial_sum - oracle).abs() < 1e-12 * oracle);
    }
    let op = SpectralOperator::new(vec![1.0, 4.0], 0.5).unwrap();
    assert!(op.trace_check(0.5, true).is_err());
    assert!(op.trace_check(0.5, false).unwrap().truncated);
}

#[test]
fn invalid_operators_are_rejected() {
    assert!(SpectralOperator::new(vec![], 0.5).is_err());
    assert!(SpectralOperator::new(vec![2.0, 1.0], 0.5).is_err());
    assert!(SpectralOperator::new(vec![0.0, 1.0], 0.5).is_err());
    assert!(SpectralOperator::new(vec![1.0], 1.0).is_err());
    let op = SpectralOperator::new(vec![1.0], 0.5).unwrap();
    assert!(op.semigroup_apply(-1.0, &[1.0]).is_err());
    assert!(op.semigroup_apply(1.0, &[1.0, 2.0]).is_err());
    assert!(op.lambda_t_diag(0.0).is_err());
    assert!(op.covariance_qt(-1.0).is_err());
}
