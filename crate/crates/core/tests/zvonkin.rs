use spdelab_core::drifts::{dirichlet_drift, DirichletKind};
use spdelab_core::field::{FnField, ZeroDrift};
use spdelab_core::kolmogorov::{lambda0, solve_vector, KolmogorovSolution, SolverOptions};
use spdelab_core::mollify::{MollifiedDrift, TabulatedDrift};
use spdelab_core::paths::{simulate_mild, NoisePanel, TimeGrid};
use spdelab_core::stats::convergence_order;
use spdelab_core::zvonkin::{ito_identity_residual, laplace_consistency, mean_value_check, modified_mild_residual};
use spdelab_core::{DriftField, Smoothness, SpectralOperator};

fn setup() -> (SpectralOperator, TabulatedDrift, f64) {
    let op = SpectralOperator::new(vec![1.0, 4.0], 0.4).unwrap();
    let raw = dirichlet_drift(&DirichletKind::Composite { lambda1: 1.0, tail: vec![0.5] }).unwrap();
    let b = MollifiedDrift::new(&op, raw, 2, 4096, 3).unwrap();
    let b = TabulatedDrift::on_invariant_box(&op, &b, 41, 5.0).unwrap();
    let lambda = lambda0(b.sup_norm()).max(2.0 * b.sup_norm());
    (op, b, lambda)
}

/// Mean sup residual over `paths` Brownian paths for each step count.
fn residual_ladder(op: &SpectralOperator, b: &TabulatedDrift, sol: &KolmogorovSolution, i: usize, ladder: &[usize], paths: u64) -> Vec<f64> {
    let fine = TimeGrid::new(1.0, 256).unwrap();
    ladder
        .iter()
        .map(|&n| {
            let total: f64 = (0..paths)
                .map(|p| {
                    let panel = NoisePanel::generate(op, fine, 5, p).coarsen(256 / n).unwrap();
                    let path = simulate_mild(op, b, &[0.3, 0.1], &panel).unwrap();
                    modified_mild_residual(op, sol, &path, &panel, sol.lambda(), i).unwrap().sup_residual
                })
                .sum();
            total / paths as f64
        })
        .collect()
}

#[test]
fn modified_mild_residual_converges_for_every_admissible_lambda() {
    let (op, b, lambda) = setup();
    let opts = SolverOptions::for_dim(2);
    let ladder = [16usize, 32, 64, 128];
    let dts: Vec<f64> = ladder.iter().map(|n| 1.0 / *n as f64).collect();
    let mut finest = Vec::new();
    for scale in [1.0, 2.0] {
        let sol = solve_vector(&op, &b, scale * lambda, &opts).unwrap();
        for i in 0..2 {
            let errs = residual_ladder(&op, &b, &sol, i, &ladder, 12);
            let order = convergence_order(&dts, &errs);
            assert!((0.4..=1.1).contains(&order), "λ×{scale} component {i}: order {order}, {errs:?}");
            finest.push(errs[3]);
        }
    }
    for i in 0..2 {
        let ratio = finest[i] / finest[i + 2];
        assert!((1.0 / 3.0..=3.0).contains(&ratio), "component {i}: ratio {ratio}");
    }
}

#[test]
fn ito_residuals_are_additive_in_the_start_time() {
    let (op, b, lambda) = setup();
    let sol = solve_vector(&op, &b, lambda, &SolverOptions::for_dim(2)).unwrap();
    let grid = TimeGrid::new(1.0, 100).unwrap();
    for p in 0..4 {
        let panel = NoisePanel::generate(&op, grid, 8, p);
        let path = simulate_mild(&op, &b, &[0.2, -0.2], &panel).unwrap();
        for i in 0..2 {
            let full = ito_identity_residual(&op, &b, &sol, &path, &panel, lambda, i, 0.0).unwrap();
            let late = ito_identity_residual(&op, &b, &sol, &path, &panel, lambda, i, 0.1).unwrap();
            assert_eq!(late.times[0], full.times[10]);
            for (k, r) in late.residuals.iter().enumerate() {
                let overlap = full.residuals[10 + k] - full.residuals[10];
                assert!((r - overlap).abs() <= 1e-12, "{r} vs {overlap}");
            }
            assert!(full.sup_residual < 0.05 && late.sup_residual <= 2.0 * full.sup_residual + 1e-12);
        }
    }
    let panel = NoisePanel::generate(&op, grid, 8, 0);
    let path = simulate_mild(&op, &b, &[0.2, -0.2], &panel).unwrap();
    assert!(ito_identity_residual(&op, &b, &sol, &path, &panel, lambda, 0, 1.0).is_err());
}

#[test]
fn zero_drift_ito_residual_vanishes() {
    let op = SpectralOperator::new(vec![1.0, 4.0], 0.4).unwrap();
    let sol = solve_vector(&op, &ZeroDrift(2), 1.0, &SolverOptions::for_dim(2)).unwrap();
    let grid = TimeGrid::new(1.0, 50).unwrap();
    let panel = NoisePanel::generate(&op, grid, 1, 0);
    let path = simulate_mild(&op, &ZeroDrift(2), &[0.5, 0.5], &panel).unwrap();
    for r in [0.0, 0.3] {
        let res = ito_identity_residual(&op, &ZeroDrift(2), &sol, &path, &panel, 1.0, 1, r).unwrap();
        assert_eq!(res.sup_residual, 0.0);
    }
}

#[test]
fn laplace_transform_of_the_drift_reproduces_the_solution() {
    let (op, b, lambda) = setup();
    let x = [0.3, 0.1];
    for scale in [1.0, 2.0, 4.0] {
        let l = scale * lambda;
        // e^{-λT} < 1e-5 and λΔt ≤ 0.05
        let horizon = 12.0 / l;
        let grid = TimeGrid::new(horizon, 240).unwrap();
        let sol = solve_vector(&op, &b, l, &SolverOptions::for_dim(2)).unwrap();
        for i in 0..2 {
            let c = laplace_consistency(&op, &b, &sol, i, &x, grid, 400, 4).unwrap();
            // trapezoid error (λΔt)²/12 relative, Euler bias of order Δt·‖B‖/λ
            let slack = (l * grid.dt()).powi(2) / 12.0 * c.value.abs() + grid.dt() * b.sup_norm() / l;
            assert!(c.transform.agrees_with(c.value, 3.0, slack), "λ×{scale} i={i}: {c:?}");
        }
    }
}

#[test]
fn mean_value_identity_along_paired_paths() {
    let op = SpectralOperator::new(vec![1.0, 4.0], 0.4).unwrap();
    let (_, b, _) = setup();
    let grid = TimeGrid::new(1.0, 20).unwrap();
    let f = FnField::with_gradient(
        |x: &[f64]| x[0].sin() * x[1].cos(),
        |x: &[f64]| vec![x[0].cos() * x[1].cos(), -x[0].sin() * x[1].sin()],
        1.0,
        Smoothness::Smooth,
    );
    let mut pairs = Vec::new();
    for p in 0..8 {
        let panel = NoisePanel::generate(&op, grid, 3, p);
        let x = simulate_mild(&op, &b, &[0.3, 0.1], &panel).unwrap();
        let y = simulate_mild(&op, &ZeroDrift(2), &[0.3, 0.1], &panel).unwrap();
        for j in 0..=20 {
            pairs.push((x.state(j).to_vec(), y.state(j).to_vec()));
        }
    }
    assert!(mean_value_check(&f, &pairs).unwrap() <= 1e-12);
    assert!(b.sup_norm() > 0.0);
}
