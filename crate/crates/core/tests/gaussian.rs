use proptest::prelude::*;
use spdelab_core::gaussian::{
    integrability_scan, kernel_lp_norm, ou_transition_log_density, GaussianMeasure, Integrability,
};
use spdelab_core::math::normal_cdf;
use spdelab_core::stats::{ks_critical_1pct, ks_statistic, Estimate};
use spdelab_core::SpectralOperator;

#[test]
fn sample_moments() {
    let n = 100_000;
    let g = GaussianMeasure::new(vec![0.0, 0.0], vec![1.0, 4.0]).unwrap();
    let draws = g.sample(n, 11);
    for k in 0..2 {
        let col: Vec<f64> = draws.iter().map(|d| d[k]).collect();
        let v = g.variances()[k];
        let mean = col.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() <= 3.0 * (v / n as f64).sqrt());
        let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let se = v * (2.0 / (n - 1) as f64).sqrt();
        assert!((var - v).abs() <= 3.0 * se, "mode {k}: {var} vs {v}");
    }
}

#[test]
fn invariant_measure_is_stationary() {
    let op = SpectralOperator::new(vec![1.0, 4.0, 9.0], 0.5).unwrap();
    let mu = GaussianMeasure::invariant(&op);
    let n = 100_000;
    let start = mu.sample(n, 5);
    let moved: Vec<Vec<f64>> = start
        .iter()
        .enumerate()
        .map(|(i, x)| GaussianMeasure::ou_transition(&op, 0.3, x).unwrap().sample_one(6, i as u64))
        .collect();
    for k in 0..3 {
        let sd = mu.variances()[k].sqrt();
        let col: Vec<f64> = moved.iter().map(|x| x[k]).collect();
        let d = ks_statistic(&col, |y| normal_cdf(y / sd));
        assert!(d < ks_critical_1pct(n), "mode {k}: KS {d}");
    }
}

#[test]
fn averaging_kernel_over_mu_reproduces_mu() {
    let op = SpectralOperator::new(vec![1.0, 2.0], 0.5).unwrap();
    let mu = GaussianMeasure::invariant(&op);
    let f = |y: &[f64]| y[0].cos() + y[1].tanh();
    // E cos(Y) = e^{−σ²/2} for Y ~ N(0, σ²); tanh is odd.
    let oracle = (-mu.variances()[0] / 2.0).exp();
    let n = 50_000;
    let values: Vec<f64> = mu
        .sample(n, 1)
        .iter()
        .enumerate()
        .map(|(i, x)| f(&GaussianMeasure::ou_transition(&op, 0.7, x).unwrap().sample_one(2, i as u64)))
        .collect();
    let e = Estimate::from_samples(&values);
    assert!(e.agrees_with(oracle, 3.0, 0.0), "{e:?} vs {oracle}");
}

#[test]
fn chapman_kolmogorov_by_marginalization() {
    let op = SpectralOperator::new(vec![1.3], 0.5).unwrap();
    let (t, s) = (0.4, 0.25);
    for (x, y) in [(0.0, 0.0), (1.2, -0.7), (-2.0, 0.5)] {
        let direct = ou_transition_log_density(&op, t + s, &[x], &[y]).unwrap();
        // Trapezoid over z on a wide grid; the integrand is Gaussian, so
        // the rule is spectrally accurate.
        let (lo, hi, n) = (-12.0, 12.0, 4001);
        let h = (hi - lo) / (n - 1) as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let z = lo + h * i as f64;
            let a = ou_transition_log_density(&op, t, &[x], &[z]).unwrap();
            let b = ou_transition_log_density(&op, s, &[z], &[y]).unwrap();
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc += w * (a + b).exp();
        }
        let marginal = (acc * h).ln();
        assert!((direct - marginal).abs() < 1e-6, "{direct} vs {marginal}");
    }
}

#[test]
fn scan_verdicts_match_predicted_slope() {
    for (d, p) in [(1, 1.5), (2, 2.0), (3, 4.0), (4, 1.5), (5, 2.0), (8, 1.2)] {
        let eig: Vec<f64> = (1..=d).map(|k| (k * k) as f64).collect();
        let op = SpectralOperator::new(eig, 0.5).unwrap();
        let slope = -(d as f64) * (0.5 - 0.5 / p);
        let expected = if slope > -1.0 { Integrability::Finite } else { Integrability::Divergent };
        let r = integrability_scan(&op, p, 1.0).unwrap();
        assert_eq!(r.verdict, expected, "d={d} p'={p}");
        assert!((r.slope - slope).abs() < 1e-2, "d={d} p'={p}: {} vs {slope}", r.slope);
        if expected == Integrability::Finite {
            assert!(r.integral_estimate.is_finite() && r.integral_estimate > 0.0);
        }
    }
}

proptest! {
    #[test]
    fn kernel_norm_is_one_at_p_one(eig in prop::collection::vec(0.1f64..50.0, 1..8), t in 1e-6f64..10.0) {
        let mut eig = eig;
        eig.sort_by(|a, b| a.total_cmp(b));
        let op = SpectralOperator::new(eig, 0.5).unwrap();
        prop_assert_eq!(kernel_lp_norm(&op, t, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn kernel_norm_decreases_in_time(p in 1.01f64..4.0, t in 1e-5f64..5.0, factor in 1.0f64..10.0) {
        let op = SpectralOperator::new(vec![1.0, 3.0], 0.5).unwrap();
        let a = kernel_lp_norm(&op, t, p).unwrap();
        let b = kernel_lp_norm(&op, t * factor, p).unwrap();
        prop_assert!(b <= a * (1.0 + 1e-14));
        prop_assert!(b >= 1.0);
    }

    #[test]
    fn log_density_matches_closed_form(x in -3.0f64..3.0, y in -3.0f64..3.0, t in 0.01f64..5.0) {
        let op = SpectralOperator::new(vec![2.0], 0.5).unwrap();
        let q = (1.0 - (-4.0 * t).exp()) / 4.0;
        let m = (-2.0 * t).exp() * x;
        let oracle = -(y - m) * (y - m) / (2.0 * q) - 0.5 * (2.0 * std::f64::consts::PI * q).ln();
        let v = ou_transition_log_density(&op, t, &[x], &[y]).unwrap();
        prop_assert!((v - oracle).abs() < 1e-11 * (1.0 + oracle.abs()));
    }
}
