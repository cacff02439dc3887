//! Finite-difference reference solution for one-mode Kolmogorov equations.

/// Solve `½u″ + (B(x) − λ₁x)u′ − λu = −f` on `[a, e]` with `n` nodes:
/// central differences inside, one-sided upwinding at the ends where the
/// drift points inward. Returns `(x, u(x))` pairs.
pub fn ode_oracle(
    b: impl Fn(f64) -> f64,
    f: impl Fn(f64) -> f64,
    eigenvalue: f64,
    lambda: f64,
    a: f64,
    e: f64,
    n: usize,
) -> Vec<(f64, f64)> {
    let h = (e - a) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
    let (mut lo, mut di, mut up, mut rhs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let x = xs[i];
        let drift = b(x) - eigenvalue * x;
        rhs[i] = -f(x);
        if i == 0 {
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
    // Thomas elimination
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
