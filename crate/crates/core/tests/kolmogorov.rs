use spdelab_core::field::{ConstantDrift, FnDrift, FnField, Smoothness, ZeroDrift};
use spdelab_core::kolmogorov::{apply_t_lambda, lambda0, solve_scalar, SolverOptions};
use spdelab_core::{DriftField, SpectralOperator};

/// Thomas solve of `½u″ + (B(x) − x)u′ − λu = −f` on `[a, b]` with
/// second-order central differences, dropping `u″` and upwinding at the ends.
fn ode_oracle(b: impl Fn(f64) -> f64, f: impl Fn(f64) -> f64, lambda: f64, a: f64, e: f64, n: usize) -> Vec<(f64, f64)> {
    let h = (e - a) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
    let (mut lo, mut di, mut up, mut rhs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let x = xs[i];
        let drift = b(x) - x;
        rhs[i] = -f(x);
        if i == 0 {
            // inward drift: forward difference
            di[i] = -lambda - drift / h;
            up[i] = drift / h;
        } else if i == n - 1 {
            di[i] = -lambda + drift / h;
            lo[i] = -drift / h;
        } else {
            lo[i] = 0.5 / (h * h) - drift / (2.0 * h);
            di[i] = -1.0 / (h * h) - lambda;
            up[i] = 0.5 / (h * h) + drift / (2.0 * h);
        }
    }
    for i in 1..n {
        let m = lo[i] / di[i - 1];
        di[i] -= m * up[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    let mut u = vec![0.0; n];
    u[n - 1] = rhs[n - 1] / di[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = (rhs[i] - up[i] * u[i + 1]) / di[i];
    }
    xs.into_iter().zip(u).collect()
}

fn sine_drift() -> impl DriftField {
    FnDrift::new(1, 0.5, Smoothness::Smooth, |x: &[f64], out: &mut [f64]| out[0] = 0.5 * x[0].sin())
}

#[test]
fn scalar_solution_matches_ode_oracle() {
    let op = SpectralOperator::new(vec![1.0], 0.5).unwrap();
    let b = sine_drift();
    let f = FnField::new(|x: &[f64]| x[0].cos(), 1.0, Smoothness::Smooth);
    let lambda = std::f64::consts::PI;
    assert!(lambda >= lambda0(0.5) * (1.0 - 1e-9));
    let sol = solve_scalar(&op, &b, &f, lambda, &SolverOptions::for_dim(1)).unwrap();
    let oracle = ode_oracle(|x| 0.5 * x.sin(), |x| x.cos(), lambda, -8.0, 8.0, 16001);
    let mut worst = 0.0f64;
    for (x, u) in oracle.iter().step_by(50).filter(|(x, _)| x.abs() <= 3.0) {
        worst = worst.max((sol.value(&[*x]) - u).abs());
    }
    assert!(worst < 1e-3, "sup difference {worst}");
    let ratios = sol.provenance().contraction_ratios();
    assert!(ratios.iter().all(|r| *r <= 0.55), "{ratios:?}");
}

#[test]
fn zero_drift_solution_is_resolvent() {
    let op = SpectralOperator::new(vec![1.0, 3.0], 0.5).unwrap();
    let f = FnField::new(|x: &[f64]| (x[0] - x[1]).sin(), 1.0, Smoothness::Smooth);
    let opts = SolverOptions::for_dim(2);
    let sol = solve_scalar(&op, &ZeroDrift(2), &f, 2.0, &opts).unwrap();
    let mc = spdelab_core::semigroup::QuadratureSpec::monte_carlo(20_000, 32, 5);
    for x in [[0.1, 0.2], [-0.4, 0.3], [0.0, 0.0]] {
        let r = spdelab_core::semigroup::resolvent(&op, &f, 2.0, &x, &mc).unwrap();
        assert!(r.agrees_with(sol.value(&x), 4.0, 1e-4), "{r:?} {}", sol.value(&x));
    }
}

#[test]
fn t_lambda_of_constant_drift_matches_dense_quadrature() {
    // m = 1, B ≡ 1: T_λφ(x) = ∫ e^{−λt} e^{−t} E φ′(e^{−t}x + √q Z) dt for smooth φ.
    let op = SpectralOperator::new(vec![1.0], 0.5).unwrap();
    let lambda = lambda0(1.0);
    let phi = FnField::new(|x: &[f64]| (2.0 * x[0]).sin(), 1.0, Smoothness::Smooth);
    let quad = spdelab_core::semigroup::QuadratureSpec::monte_carlo(40_000, 32, 11);
    let gh = spdelab_core::quadrature::gauss_hermite_normal(80);
    let time = spdelab_core::quadrature::gauss_legendre(400, 0.0, 40.0 / lambda);
    for x in [-0.8, 0.0, 0.5] {
        let est = apply_t_lambda(&op, &ConstantDrift(vec![1.0]), lambda, &phi, &[x], &quad).unwrap();
        let dense = time.integrate(|t| {
            let q = (1.0 - (-2.0 * t).exp()) / 2.0;
            let m = (-t).exp() * x;
            (-lambda * t).exp() * (-t).exp() * gh.integrate(|z| 2.0 * (2.0 * (m + q.sqrt() * z)).cos())
        });
        assert!(est.agrees_with(dense, 4.0, 1e-3), "{est:?} vs {dense}");
        assert!(est.value.abs() <= 0.5 + 5.0 * est.std_error);
    }
}
