//! Residuals of the identities satisfied by the Kolmogorov solution along
//! mild paths.
//!
//! With `u` the vector solution at rate `λ`, a mild solution satisfies for
//! each component `i`
//!
//! ```text
//! X_t^i = e^{−λ_i t}(x_i + u^i(x)) − u^i(X_t) + (λ + λ_i)∫_0^t e^{−λ_i(t−s)} u^i(X_s) ds
//!         + ∫_0^t e^{−λ_i(t−s)} (dW_s^i + ⟨Du^i(X_s), dW_s⟩)
//! ```
//!
//! and the Itô identity `du^i(X) = (λu^i − B^i)(X) dt + ⟨Du^i(X), dW⟩`.
//! Both are evaluated with left-node integrands and exact exponential step
//! factors.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{DriftField, ScalarField};
use crate::kolmogorov::KolmogorovSolution;
use crate::math;
use crate::paths::{NoisePanel, TimeGrid, Trajectory};
use crate::quadrature;
use crate::spectrum::{phi_coefficient, SpectralOperator};
use crate::stats::Estimate;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityResidual {
    pub component: usize,
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
    pub sup_residual: f64,
    pub steps: usize,
}

impl IdentityResidual {
    fn new(component: usize, times: Vec<f64>, residuals: Vec<f64>, steps: usize) -> Self {
        let sup_residual = residuals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Self { component, times, residuals, sup_residual, steps }
    }
}

fn check(
    op: &SpectralOperator,
    sol: &KolmogorovSolution,
    path: &Trajectory,
    panel: &NoisePanel,
    lambda: f64,
    i: usize,
) -> Result<()> {
    if sol.lambda() != lambda {
        return Err(Error::SolutionMismatch { built: sol.lambda(), requested: lambda });
    }
    if path.grid() != panel.grid() || path.dim() != op.dim() || i >= op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: path.dim() });
    }
    Ok(())
}

fn solution_component(sol: &KolmogorovSolution, i: usize) -> usize {
    if sol.components() == 1 {
        0
    } else {
        i
    }
}

/// Residual of the modified mild formulation for component `i` at every
/// node.
pub fn modified_mild_residual(
    op: &SpectralOperator,
    sol: &KolmogorovSolution,
    path: &Trajectory,
    panel: &NoisePanel,
    lambda: f64,
    i: usize,
) -> Result<IdentityResidual> {
    check(op, sol, path, panel, lambda, i)?;
    let c = solution_component(sol, i);
    let grid = path.grid();
    let dt = grid.dt();
    let li = op.eigenvalue(i);
    let decay = math::exp(-li * dt);
    let phi = phi_coefficient(li, dt);
    let d = op.dim();
    let mut g = vec![0.0; d];
    let x0 = path.state(0);
    let u0 = sol.value_and_gradient(c, x0, &mut g);
    let start = x0[i] + u0;
    let (mut drift_part, mut noise_part) = (0.0, 0.0);
    let mut u_prev = u0;
    let mut g_prev = g.clone();
    let mut residuals = Vec::with_capacity(grid.steps() + 1);
    residuals.push(0.0);
    for j in 0..grid.steps() {
        let dw = panel.dw(j);
        let eta = panel.eta(j)[i];
        let mut stochastic = eta * (1.0 + g_prev[i]);
        for k in 0..d {
            if k != i {
                // Conditional mean of ∫ e^{−λ_i(t_{j+1}−s)} dβ_k given ΔW_k.
                stochastic += g_prev[k] * phi / dt * dw[k];
            }
        }
        drift_part = decay * drift_part + phi * u_prev;
        noise_part = decay * noise_part + stochastic;
        let t = grid.time(j + 1);
        let x = path.state(j + 1);
        let u = sol.value_and_gradient(c, x, &mut g);
        let rhs = math::exp(-li * t) * start - u + (lambda + li) * drift_part + noise_part;
        residuals.push(x[i] - rhs);
        u_prev = u;
        g_prev.copy_from_slice(&g);
    }
    Ok(IdentityResidual::new(i, grid.times(), residuals, grid.steps()))
}

/// Residual of `u^i(X_t) − u^i(X_r) − ∫_r^t (λu^i − B^i)(X_s) ds − ∫_r^t ⟨Du^i(X_s), dW_s⟩`
/// at nodes `t ≥ r`, with `r` rounded to the nearest node.
#[allow(clippy::too_many_arguments)]
pub fn ito_identity_residual<D: DriftField + ?Sized>(
    op: &SpectralOperator,
    drift: &D,
    sol: &KolmogorovSolution,
    path: &Trajectory,
    panel: &NoisePanel,
    lambda: f64,
    i: usize,
    r: f64,
) -> Result<IdentityResidual> {
    check(op, sol, path, panel, lambda, i)?;
    let grid = path.grid();
    if !(r >= 0.0 && r < grid.horizon()) {
        return Err(Error::InvalidTime { value: r, requirement: "in [0, T)" });
    }
    let c = solution_component(sol, i);
    let dt = grid.dt();
    let first = math::round(r / dt) as usize;
    let d = op.dim();
    let mut g = vec![0.0; d];
    let mut b = vec![0.0; d];
    let u_r = sol.value_and_gradient(c, path.state(first), &mut g);
    let mut integral = 0.0;
    let mut times = vec![grid.time(first)];
    let mut residuals = vec![0.0];
    let mut u_prev = u_r;
    let mut g_prev = g.clone();
    for j in first..grid.steps() {
        drift.eval_into(path.state(j), &mut b);
        integral += (lambda * u_prev - b[i]) * dt + math::dot(&g_prev, panel.dw(j));
        let u = sol.value_and_gradient(c, path.state(j + 1), &mut g);
        times.push(grid.time(j + 1));
        residuals.push(u - u_r - integral);
        u_prev = u;
        g_prev.copy_from_slice(&g);
    }
    Ok(IdentityResidual::new(i, times, residuals, grid.steps()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceConsistency {
    /// `u^i(x)`.
    pub value: f64,
    /// `∫_0^T e^{−λt} E B^i(X_t) dt + e^{−λT} E u^i(X_T)`.
    pub transform: Estimate,
}

/// Compare `u^i(x)` with the Laplace transform of `t ↦ E B^i(X_t)` over
/// `paths` mild paths (trapezoidal in time), closed by the exact tail term.
#[allow(clippy::too_many_arguments)]
pub fn laplace_consistency<D: DriftField + ?Sized>(
    op: &SpectralOperator,
    drift: &D,
    sol: &KolmogorovSolution,
    i: usize,
    x: &[f64],
    grid: TimeGrid,
    paths: usize,
    seed: u64,
) -> Result<LaplaceConsistency> {
    let c = solution_component(sol, i);
    let lambda = sol.lambda();
    let dt = grid.dt();
    let n = grid.steps();
    let mut samples = Vec::with_capacity(paths);
    let mut b = vec![0.0; op.dim()];
    for p in 0..paths {
        let panel = NoisePanel::generate(op, grid, seed, p as u64);
        let path = crate::paths::simulate_mild(op, drift, x, &panel)?;
        let mut acc = 0.0;
        for j in 0..=n {
            drift.eval_into(path.state(j), &mut b);
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            acc += w * dt * math::exp(-lambda * grid.time(j)) * b[i];
        }
        acc += math::exp(-lambda * grid.horizon()) * sol.component(c, path.terminal());
        samples.push(acc);
    }
    Ok(LaplaceConsistency { value: sol.component(c, x), transform: Estimate::from_samples(&samples) })
}

/// `max |f(X) − f(Y) − ∫_0^1 ⟨Df(rX + (1−r)Y), X − Y⟩ dr|` over the pairs,
/// with 32-point Gauss–Legendre in `r`.
pub fn mean_value_check<F: ScalarField + ?Sized>(f: &F, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    let rule = quadrature::gauss_legendre(32, 0.0, 1.0);
    let mut worst = 0.0f64;
    for (x, y) in pairs {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let mut z = vec![0.0; x.len()];
        let mut integral = 0.0;
        for (r, w) in rule.nodes.iter().zip(&rule.weights) {
            for k in 0..x.len() {
                z[k] = r * x[k] + (1.0 - r) * y[k];
            }
            let g = f.gradient(&z).ok_or(Error::InvalidParameter {
                name: "f",
                reason: "needs a gradient contract",
            })?;
            integral += w * math::dot(&g, &diff);
        }
        worst = worst.max((f.eval(x) - f.eval(y) - integral).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FnField, Smoothness, ZeroDrift};
    use crate::kolmogorov::{solve_vector, SolverOptions};

    #[test]
    fn zero_drift_collapses() {
        let op = SpectralOperator::new(vec![1.0, 4.0], 0.5).unwrap();
        let sol = solve_vector(&op, &ZeroDrift(2), 1.0, &SolverOptions::for_dim(2)).unwrap();
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let panel = NoisePanel::generate(&op, grid, 2, 0);
        let path = crate::paths::simulate_mild(&op, &ZeroDrift(2), &[0.4, -0.3], &panel).unwrap();
        for i in 0..2 {
            let r = modified_mild_residual(&op, &sol, &path, &panel, 1.0, i).unwrap();
            assert!(r.sup_residual <= 1e-12, "{}", r.sup_residual);
            let r = ito_identity_residual(&op, &ZeroDrift(2), &sol, &path, &panel, 1.0, i, 0.0).unwrap();
            assert_eq!(r.sup_residual, 0.0);
        }
        assert!(matches!(
            modified_mild_residual(&op, &sol, &path, &panel, 2.0, 0),
            Err(Error::SolutionMismatch { .. })
        ));
    }

    #[test]
    fn mean_value_examples() {
        let lin = FnField::with_gradient(
            |x: &[f64]| 2.0 * x[0] - x[1],
            |_x: &[f64]| vec![2.0, -1.0],
            f64::INFINITY,
            Smoothness::Smooth,
        );
        let quad = FnField::with_gradient(
            |x: &[f64]| x[0] * x[0] + x[0] * x[1],
            |x: &[f64]| vec![2.0 * x[0] + x[1], x[0]],
            f64::INFINITY,
            Smoothness::Smooth,
        );
        let pairs = vec![(vec![1.0, 2.0], vec![-0.5, 0.3]), (vec![3.0, -1.0], vec![0.0, 0.0])];
        assert!(mean_value_check(&lin, &pairs).unwrap() <= 1e-12);
        assert!(mean_value_check(&quad, &pairs).unwrap() <= 1e-12);
        let same = vec![(vec![1.0, 2.0], vec![1.0, 2.0])];
        assert_eq!(mean_value_check(&quad, &same).unwrap(), 0.0);
    }
}
