use spdelab_core::drifts::{SignDrift, SineDrift};
use spdelab_core::field::{FnField, ZeroDrift};
use spdelab_core::gaussian::GaussianMeasure;
use spdelab_core::kolmogorov::{
    lambda0, regularity_functional, solve_scalar, solve_vector, KolmogorovSolution, RegularityDiagnostics,
    SolverOptions,
};
use spdelab_core::mollify::MollifiedDrift;
use spdelab_core::{DriftField, Error, ScalarField, Smoothness, SpectralOperator};

fn op2() -> SpectralOperator {
    SpectralOperator::new(vec![1.0, 2.0], 0.4).unwrap()
}

fn probes(op: &SpectralOperator, n: usize, seed: u64) -> Vec<Vec<f64>> {
    GaussianMeasure::invariant(op).sample(n, seed)
}

fn f2() -> FnField<impl Fn(&[f64]) -> f64 + Sync> {
    FnField::new(|y: &[f64]| (y[0] - 0.5 * y[1]).cos() * (0.3 * y[1]).sin() + 0.2, 1.2, Smoothness::Smooth)
}

#[test]
fn solution_is_bounded_by_twice_the_source() {
    let op = op2();
    let b = SineDrift { dim: 2, amplitude: 1.0 };
    let f = f2();
    let lambda = lambda0(b.sup_norm());
    let sol = solve_scalar(&op, &b, &f, lambda, &SolverOptions::for_dim(2)).unwrap();
    for ratio in sol.provenance().contraction_ratios() {
        assert!(ratio <= 0.55, "ratio {ratio}");
    }
    for x in probes(&op, 64, 1) {
        let (u, _) = sol.estimates(0, &x);
        assert!(u.value.abs() <= 2.0 * f.sup_norm() + 5.0 * u.std_error);
        assert!(sol.psi(0, &x).abs() <= 2.0 * f.sup_norm());
    }
}

#[test]
fn below_threshold_is_not_contractive() {
    let op = op2();
    let b = SineDrift { dim: 2, amplitude: 1.0 };
    let lambda = 0.9 * lambda0(1.0);
    let err = solve_scalar(&op, &b, &f2(), lambda, &SolverOptions::for_dim(2)).unwrap_err();
    assert!(matches!(err, Error::NotContractive { .. }));
    let err = solve_vector(&op, &b, lambda, &SolverOptions::for_dim(2)).unwrap_err();
    assert!(matches!(err, Error::NotContractive { .. }));
}

#[test]
fn iteration_cap_reports_no_convergence() {
    let op = op2();
    let b = SineDrift { dim: 2, amplitude: 1.0 };
    let mut opts = SolverOptions::for_dim(2);
    opts.max_iter = 2;
    opts.tol = 1e-14;
    let err = solve_scalar(&op, &b, &f2(), lambda0(1.0), &opts).unwrap_err();
    assert!(matches!(err, Error::NoConvergence { iterations: 2, .. }));
}

#[test]
fn vector_components_match_scalar_solves() {
    let op = op2();
    let b = SineDrift { dim: 2, amplitude: 1.0 };
    let lambda = lambda0(1.0).max(2.0);
    let opts = SolverOptions::for_dim(2);
    let vector = solve_vector(&op, &b, lambda, &opts).unwrap();
    for i in 0..2 {
        let bi = FnField::new(move |y: &[f64]| b.eval(y)[i], 1.0, Smoothness::Smooth);
        let scalar = solve_scalar(&op, &b, &bi, lambda, &opts).unwrap();
        for x in probes(&op, 16, 2) {
            let (a, c) = (vector.component(i, &x), scalar.value(&x));
            assert!((a - c).abs() < 1e-10, "component {i}: {a} vs {c}");
        }
    }
    let zero = solve_vector(&op, &ZeroDrift(2), 1.0, &opts).unwrap();
    assert_eq!(zero.component(1, &[0.3, 0.2]), 0.0);
}

fn sup_gradient(sol: &KolmogorovSolution, points: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for x in points {
        for i in 0..sol.components() {
            let g = sol.gradient(i, x);
            best = best.max(g.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
    }
    best
}

#[test]
fn gradient_decays_with_lambda() {
    let op = op2();
    let b = SineDrift { dim: 2, amplitude: 1.0 };
    let opts = SolverOptions::for_dim(2);
    let lambda = lambda0(1.0).max(2.0);
    let pts = probes(&op, 64, 3);
    let g1 = sup_gradient(&solve_vector(&op, &b, lambda, &opts).unwrap(), &pts);
    let g4 = sup_gradient(&solve_vector(&op, &b, 4.0 * lambda, &opts).unwrap(), &pts);
    assert!(g4 / g1 <= 0.55, "{g1} {g4}");
}

#[test]
fn pde_residual_by_finite_differences() {
    let op = op2();
    let b = SineDrift { dim: 2, amplitude: 1.0 };
    let f = f2();
    let lambda = lambda0(1.0);
    let sol = solve_scalar(&op, &b, &f, lambda, &SolverOptions::for_dim(2)).unwrap();
    let h = 1e-3;
    let pts: Vec<Vec<f64>> = probes(&op, 16, 4).into_iter().map(|x| x.iter().map(|v| v.clamp(-1.0, 1.0)).collect()).collect();
    for x in pts {
        let u = sol.value(&x);
        let mut lu = 0.0;
        let mut du = [0.0; 2];
        for k in 0..2 {
            let mut p = x.clone();
            let mut m = x.clone();
            p[k] += h;
            m[k] -= h;
            let (up, um) = (sol.value(&p), sol.value(&m));
            du[k] = (up - um) / (2.0 * h);
            lu += 0.5 * (up - 2.0 * u + um) / (h * h) - op.eigenvalue(k) * x[k] * du[k];
        }
        let bx = b.eval(&x);
        let residual = lambda * u - lu - (bx[0] * du[0] + bx[1] * du[1]) - f.eval(&x);
        assert!(residual.abs() <= 5e-3 * f.sup_norm(), "residual {residual} at {x:?}");
        // the gradient contract agrees with the difference quotient
        let g = sol.gradient(0, &x);
        assert!((g[0] - du[0]).abs() < 1e-5 && (g[1] - du[1]).abs() < 1e-5);
    }
}

#[test]
fn mollified_solutions_settle() {
    let op = SpectralOperator::new(vec![1.0], 0.4).unwrap();
    let sign = SignDrift { alphas: vec![0.5] };
    let f = FnField::new(|y: &[f64]| y[0].sin(), 1.0, Smoothness::Smooth);
    let lambda = lambda0(0.5);
    let opts = SolverOptions::for_dim(1);
    let pts: Vec<Vec<f64>> = (0..41).map(|i| vec![-2.0 + 0.1 * i as f64]).collect();
    let levels = [1, 2, 4, 8, 16];
    let sols: Vec<KolmogorovSolution> = levels
        .iter()
        .map(|&n| {
            let bn = MollifiedDrift::new(&op, sign.clone(), n, 16_384, 5).unwrap();
            solve_scalar(&op, &bn, &f, lambda, &opts).unwrap()
        })
        .collect();
    let mut prev = f64::INFINITY;
    for w in sols.windows(2) {
        let d = pts.iter().map(|x| (w[0].value(x) - w[1].value(x)).abs()).fold(0.0, f64::max);
        assert!(d < prev, "distance {d} after {prev}");
        prev = d;
    }
    let gmax: Vec<f64> = sols.iter().map(|s| sup_gradient(s, &pts)).collect();
    for (s, g) in sols.iter().zip(&gmax) {
        assert!(pts.iter().all(|x| s.value(x).abs() <= 2.0 * f.sup_norm()));
        assert!(*g <= 1.5 * gmax[0]);
    }
}

#[test]
fn hessian_contracts() {
    // B = 0 with linear f: u is linear.
    let op = op2();
    let lin = FnField::new(|y: &[f64]| 0.3 * y[0] - 0.2 * y[1], f64::INFINITY, Smoothness::Smooth);
    let sol = solve_scalar(&op, &ZeroDrift(2), &lin, 1.0, &SolverOptions::for_dim(2)).unwrap();
    let h = sol.hessian(0, &[0.2, -0.1]);
    match h {
        Ok(h) => assert!(h.max_abs() <= h.noise_floor.max(1e-6), "{h:?}"),
        Err(e) => assert!(matches!(e, Error::StepUnderflow { .. })),
    }

    // m = 1, f = x²: u = x²/(λ + 2) + (1/λ − 1/(λ + 2))/2, so u″ = 2/(λ + 2).
    let op1 = SpectralOperator::new(vec![1.0], 0.4).unwrap();
    let sq = FnField::new(|y: &[f64]| y[0] * y[0], f64::INFINITY, Smoothness::Smooth);
    let sol = solve_scalar(&op1, &ZeroDrift(1), &sq, 1.0, &SolverOptions::for_dim(1)).unwrap();
    for x in [-0.8, 0.0, 0.5] {
        let want = x * x / 3.0 + 0.5 * (1.0 - 1.0 / 3.0);
        assert!((sol.value(&[x]) - want).abs() < 1e-6);
        let h = sol.hessian(0, &[x]).unwrap();
        assert!((h.get(0, 0) - 2.0 / 3.0).abs() < 1e-3, "{h:?}");
    }

    // symmetry before symmetrization, smooth drift
    let b = SineDrift { dim: 2, amplitude: 1.0 };
    let sol = solve_scalar(&op, &b, &f2(), lambda0(1.0), &SolverOptions::for_dim(2)).unwrap();
    for x in probes(&op, 8, 6) {
        let h = sol.hessian(0, &x).unwrap();
        // raw defect within the quadrature tolerance; exact after symmetrization
        assert!(h.asymmetry <= sol.provenance().quad.tolerance, "{h:?}");
        assert_eq!(h.get(0, 1), h.get(1, 0));
    }

    // measurable drift: no Hessian contract
    let sign = SignDrift { alphas: vec![0.3, 0.3] };
    let sol = solve_scalar(&op, &sign, &f2(), lambda0(sign.sup_norm()), &SolverOptions::for_dim(2)).unwrap();
    assert!(sol.hessian(0, &[0.1, 0.1]).is_err());
}

#[test]
fn regularity_functional_basics() {
    let op = op2();
    let opts = SolverOptions::for_dim(2);
    let diag = RegularityDiagnostics::new(0.4, 5.0, 0.5, 1.0, 1.0).unwrap();
    assert_eq!(diag.gamma, 2.5);
    assert!(RegularityDiagnostics::new(0.4, 4.0, 0.5, 1.0, 1.0).is_err());
    let pts = probes(&op, 20, 7);

    let zero = solve_vector(&op, &ZeroDrift(2), 1.0, &opts).unwrap();
    let v = regularity_functional(&op, &zero, &pts, &diag).unwrap();
    assert_eq!(v.s_value, 0.0);

    let b = SineDrift { dim: 2, amplitude: 1.0 };
    let sol = solve_vector(&op, &b, lambda0(1.0).max(2.0), &opts).unwrap();
    let v = regularity_functional(&op, &sol, &pts, &diag).unwrap();
    assert!(v.s_value.is_finite() && v.s_value > 0.0);
    assert!(v.partial_sums.windows(2).all(|w| w[0] <= w[1]));
    assert!((v.partial_sums[1] - v.s_value).abs() <= 1e-12 * v.s_value);

    let wrong = RegularityDiagnostics::new(0.3, 5.0, 0.5, 1.0, 1.0).unwrap();
    assert!(regularity_functional(&op, &sol, &pts, &wrong).is_err());
}
