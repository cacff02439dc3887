use spdelab_core::drifts::{SineDrift, TanhDrift};
use spdelab_core::field::{FnField, ZeroDrift};
use spdelab_core::girsanov::{
    girsanov_weight, left_node_values, segmented_novikov_check, stochastic_integral, weighted_estimate,
    weighted_expectation, Direction, Functional, GirsanovWeight,
};
use spdelab_core::paths::{simulate_mild, simulate_ou_with, NoisePanel, PathEnsemble, TimeGrid, Trajectory};
use spdelab_core::stats::Estimate;
use spdelab_core::{DriftField, Error, ScalarField, Smoothness, SpectralOperator};

fn op2() -> SpectralOperator {
    SpectralOperator::new(vec![1.0, 4.0], 0.5).unwrap()
}

/// OU paths with their AddDrift weights.
fn weighted_ou<D: DriftField>(op: &SpectralOperator, b: &D, x: &[f64], grid: TimeGrid, n: u64, seed: u64) -> (Vec<Trajectory>, Vec<GirsanovWeight>) {
    (0..n)
        .map(|i| {
            let panel = NoisePanel::generate(op, grid, seed, i);
            let path = simulate_ou_with(op, x, &panel).unwrap();
            let w = girsanov_weight(&path, b, &panel, Direction::AddDrift).unwrap();
            (path, w)
        })
        .unzip()
}

#[test]
fn ito_isometry_for_deterministic_integrands() {
    let op = op2();
    let grid = TimeGrid::new(1.5, 12).unwrap();
    let c = 0.8;
    let n = 100_000;
    let b: Vec<f64> = (0..12).flat_map(|_| [0.0, c]).collect();
    let vals: Vec<f64> = (0..n).map(|i| stochastic_integral(&b, &NoisePanel::generate(&op, grid, 3, i)).unwrap()).collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let want = c * c * 1.5;
    assert!((var - want).abs() <= 3.0 * want * (2.0 / (n - 1) as f64).sqrt(), "{var} vs {want}");
}

#[test]
fn exponential_martingale_has_unit_mean_across_refinements() {
    let op = op2();
    let b = SineDrift { dim: 2, amplitude: 1.0 };
    for steps in [8, 16, 32, 64] {
        let grid = TimeGrid::new(1.0, steps).unwrap();
        let (_, w) = weighted_ou(&op, &b, &[0.5, 0.0], grid, 20_000, 7);
        let m: Vec<f64> = w.iter().map(|w| w.weight()).collect();
        let e = Estimate::from_samples(&m);
        assert!(e.agrees_with(1.0, 3.0, 0.0), "steps {steps}: {e:?}");
        assert!(w.iter().all(|w| w.quadratic_term >= 0.0));
    }
}

#[test]
fn change_of_measure_matches_direct_simulation() {
    let op = op2();
    let b = TanhDrift { dim: 2, amplitude: 1.2 };
    let x = [0.2, -0.3];
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let n = 20_000;
    let (paths, weights) = weighted_ou(&op, &b, &x, grid, n, 11);
    let ensemble = PathEnsemble { grid, initial: x.to_vec(), seed: 11, trajectories: paths };
    let direct: Vec<Trajectory> =
        (0..n).map(|i| simulate_mild(&op, &b, &x, &NoisePanel::generate(&op, grid, 12, i)).unwrap()).collect();
    let tests: Vec<(Box<dyn ScalarField>, Functional)> = vec![
        (Box::new(FnField::new(|y: &[f64]| y[0].tanh(), 1.0, Smoothness::Smooth)), Functional::Terminal),
        (Box::new(FnField::new(|y: &[f64]| (y[0] + y[1]).cos(), 1.0, Smoothness::Smooth)), Functional::Terminal),
        (Box::new(FnField::new(|y: &[f64]| y[1].sin(), 1.0, Smoothness::Smooth)), Functional::TimeAverage),
        (Box::new(FnField::new(|y: &[f64]| y[0].tanh(), 1.0, Smoothness::Smooth)), Functional::Sup),
        (Box::new(FnField::new(|y: &[f64]| (-y[0] * y[0]).exp(), 1.0, Smoothness::Smooth)), Functional::TimeAverage),
    ];
    for (i, (f, functional)) in tests.iter().enumerate() {
        let w = weighted_expectation(f.as_ref(), &ensemble, &weights, *functional).unwrap();
        assert!(!w.degenerate);
        let d: Vec<f64> = direct.iter().map(|p| functional.apply(f.as_ref(), p)).collect();
        let e = Estimate::from_samples(&d);
        let combined = (w.estimate.std_error.powi(2) + e.std_error.powi(2)).sqrt();
        assert!((w.estimate.value - e.value).abs() <= 3.0 * combined, "functional {i}: {:?} vs {e:?}", w.estimate);
    }
}

#[test]
fn inverse_weight_is_bounded_uniformly_in_start() {
    let op = op2();
    let b = SineDrift { dim: 2, amplitude: 0.8 };
    let horizon = 1.0;
    let grid = TimeGrid::new(horizon, 20).unwrap();
    let ceiling = (2.0 * 0.8f64 * 0.8 * horizon).exp();
    for s in 0..8 {
        let x = [-2.0 + 0.5 * s as f64, 1.0 - 0.3 * s as f64];
        let inv: Vec<f64> = (0..5000)
            .map(|i| {
                let panel = NoisePanel::generate(&op, grid, 100 + s, i);
                let path = simulate_mild(&op, &b, &x, &panel).unwrap();
                1.0 / girsanov_weight(&path, &b, &panel, Direction::RemoveDrift).unwrap().weight()
            })
            .collect();
        let e = Estimate::from_samples(&inv);
        assert!(e.value <= ceiling + 3.0 * e.std_error, "{e:?} > {ceiling}");
    }
}

#[test]
fn segmented_novikov() {
    let op = op2();
    let b = SineDrift { dim: 2, amplitude: 1.0 };
    let grid = TimeGrid::new(4.0, 64).unwrap();
    let r = segmented_novikov_check(&op, &b, &[0.0, 0.0], grid, 4, 20_000, 3).unwrap();
    assert!(r.passed, "{r:?}");
    for s in &r.segments {
        assert!((s.exponent_bound - 0.5).abs() < 1e-15);
        assert!(s.exponential_moment.value <= 0.5f64.exp());
    }
    let z = segmented_novikov_check(&op, &ZeroDrift(2), &[0.0, 0.0], grid, 4, 100, 3).unwrap();
    assert!(z.passed && z.segments.iter().all(|s| s.exponential_moment.value == 1.0 && s.martingale_mean.value == 1.0));
    let err = segmented_novikov_check(&op, &b, &[0.0, 0.0], grid, 2, 100, 3).unwrap_err();
    assert!(matches!(err, Error::SegmentTooLong { .. }));
}

#[test]
fn right_node_drift_biases_the_martingale() {
    let op = SpectralOperator::new(vec![1.0], 0.5).unwrap();
    let b = TanhDrift { dim: 1, amplitude: 1.5 };
    let grid = TimeGrid::new(1.0, 4).unwrap();
    let n = 50_000;
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for i in 0..n {
        let panel = NoisePanel::generate(&op, grid, 9, i);
        let path = simulate_ou_with(&op, &[0.0], &panel).unwrap();
        let l = left_node_values(&path, &b);
        // shift by one node: values at t_{j+1} paired with ΔW_j
        let r: Vec<f64> = (1..=4).map(|j| b.eval(path.state(j))[0]).collect();
        let quad = |v: &[f64]| 0.5 * v.iter().map(|a| a * a).sum::<f64>() * grid.dt();
        left.push((stochastic_integral(&l, &panel).unwrap() - quad(&l)).exp());
        right.push((stochastic_integral(&r, &panel).unwrap() - quad(&r)).exp());
    }
    let (el, er) = (Estimate::from_samples(&left), Estimate::from_samples(&right));
    assert!(el.agrees_with(1.0, 3.0, 0.0), "{el:?}");
    assert!(!er.agrees_with(1.0, 5.0, 0.0), "{er:?}");
}

#[test]
fn standard_error_scales_like_inverse_root_n() {
    let op = op2();
    let b = SineDrift { dim: 2, amplitude: 1.0 };
    let grid = TimeGrid::new(1.0, 16).unwrap();
    let (_, w) = weighted_ou(&op, &b, &[0.0, 0.0], grid, 100_000, 21);
    let m: Vec<f64> = w.iter().map(|w| w.weight()).collect();
    let se: Vec<f64> = [1_000, 10_000, 100_000].iter().map(|&n| Estimate::from_samples(&m[..n]).std_error).collect();
    for pair in se.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!((ratio - 10f64.sqrt()).abs() < 0.2 * 10f64.sqrt(), "{se:?}");
    }
}

#[test]
fn concentrated_weights_are_flagged() {
    let v = [1.0, 2.0, 3.0, 4.0, 5.0];
    let w = weighted_estimate(&v, &[0.0, -40.0, -40.0, -40.0, -40.0]).unwrap();
    assert!(w.degenerate && w.effective_samples < 1.01);
    assert!((w.estimate.value - 1.0).abs() < 1e-12);
    let flat = weighted_estimate(&[2.0; 20], &[0.3; 20]).unwrap();
    assert!(!flat.degenerate && (flat.effective_samples - 20.0).abs() < 1e-12);
}
