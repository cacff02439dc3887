//! The elliptic Kolmogorov equation `λu − Lu − ⟨B, Du⟩ = f`.
//!
//! With `T_λφ = ⟨B, D(λ − L)^{−1}φ⟩` the solution is
//! `u = (λ − L)^{−1}ψ` where `ψ = f + T_λψ`. For `λ ≥ λ_0 = 4‖B‖_0² C_{1,0}²`
//! the map `T_λ` is a contraction with constant `1/2`, and `ψ` is found by
//! the Neumann iteration `ψ_{n+1} = f + T_λψ_n` seeded at `ψ_0 = f`.
//!
//! `ψ` is represented by its values at the nodes of a tensor grid covering
//! several invariant standard deviations per mode, interpolated by a cubic
//! spline between nodes. Each sweep evaluates `T_λψ_n` at every node with the
//! shared Gaussian/time quadrature. With a Gauss–Hermite rule both the
//! quadrature and the spline are tensor products, so smoothing over the whole
//! grid factors into one small matrix product per axis; Monte Carlo rules
//! fall back to pointwise evaluation through [`Smoother`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{DriftField, ScalarField, Smoothness};
use crate::grid::{contract_leading, product_leading_rotate, Axis, TensorGrid, TensorSpline};
use crate::math;
use crate::quadrature;
use crate::semigroup::{GaussianRule, LaplaceRule, QuadratureSpec, Smoother};
use crate::spectrum::{c10, lambda_coefficient, q_coefficient, SpectralOperator};
use crate::stats::Estimate;

/// `λ_0 = 4‖B‖_0² C_{1,0}²`.
pub fn lambda0(drift_bound: f64) -> f64 {
    let c = c10();
    4.0 * drift_bound * drift_bound * c * c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Grid nodes per mode.
    pub nodes: usize,
    /// Half-width of the grid box in invariant standard deviations.
    pub width: f64,
    pub quad: QuadratureSpec,
    pub max_iter: usize,
    /// Stop once the sup change between sweeps falls below this.
    pub tol: f64,
}

impl SolverOptions {
    /// Defaults sized so one sweep stays cheap in dimension `m`.
    pub fn for_dim(m: usize) -> Self {
        let (nodes, points, times) = match m {
            0 | 1 => (257, 40, 32),
            2 => (61, 24, 32),
            3 => (21, 16, 32),
            _ => (11, 8, 24),
        };
        let width = if m <= 1 { 8.0 } else { 5.0 };
        Self { nodes, width, quad: QuadratureSpec::hermite(points, times), max_iter: 60, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub iterations: usize,
    /// Sup change between successive iterates, one entry per sweep.
    pub residual_history: Vec<f64>,
    pub quad: QuadratureSpec,
    pub nodes: usize,
    pub width: f64,
}

impl Provenance {
    /// Ratios of successive sweep changes.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.residual_history.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hessian {
    pub dim: usize,
    /// Row-major, symmetrized.
    pub matrix: Vec<f64>,
    /// Largest `|H_kl − H_lk|` before symmetrization.
    pub asymmetry: f64,
    /// Estimated quadrature noise in the difference quotients.
    pub noise_floor: f64,
    pub step: f64,
}

impl Hessian {
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.matrix[k * self.dim + l]
    }

    pub fn hs_norm(&self) -> f64 {
        math::norm(&self.matrix)
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Laplace-transformed OU smoothing with a one-dimensional Gauss–Hermite rule
/// applied along every mode, specialised to tensor splines.
#[derive(Debug, Clone)]
struct Separable {
    dim: usize,
    z: Vec<f64>,
    w: Vec<f64>,
    weights: Vec<f64>,
    /// `[j * dim + k]` entries.
    decay: Vec<f64>,
    spread: Vec<f64>,
    lambda_t: Vec<f64>,
}

impl Separable {
    fn new(op: &SpectralOperator, lambda: f64, points: usize, quad: &QuadratureSpec) -> Self {
        let rule = LaplaceRule::new(lambda, quad.time_nodes, quad.time_transform);
        let gh = quadrature::gauss_hermite_normal(points);
        let dim = op.dim();
        let mut decay = Vec::with_capacity(rule.times.len() * dim);
        let mut spread = Vec::with_capacity(rule.times.len() * dim);
        let mut lambda_t = Vec::with_capacity(rule.times.len() * dim);
        for &t in &rule.times {
            for &l in op.eigenvalues() {
                decay.push(math::exp(-l * t));
                spread.push(math::sqrt(q_coefficient(l, t)));
                lambda_t.push(lambda_coefficient(l, t));
            }
        }
        Self { dim, z: gh.nodes, w: gh.weights, weights: rule.weights, decay, spread, lambda_t }
    }

    /// Per-axis smoothing rows at coordinate `x` along axis `k` for time `j`:
    /// plain weights into `v`, weights times `z` into `g`.
    fn rows(&self, spline: &TensorSpline, j: usize, k: usize, x: f64, v: &mut [f64], g: &mut [f64]) {
        let a = self.decay[j * self.dim + k] * x;
        let s = self.spread[j * self.dim + k];
        for (z, w) in self.z.iter().zip(&self.w) {
            let (start, b) = spline.axis_weights(k, a + s * z);
            for r in 0..4 {
                v[start + r] += w * b[r];
                g[start + r] += w * z * b[r];
            }
        }
    }

    fn point(&self, spline: &TensorSpline, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.dim;
        let ext = spline.extended_dims();
        grad.fill(0.0);
        let mut value = 0.0;
        for j in 0..self.weights.len() {
            // Tensors tagged with the axis whose gradient row they carry.
            let mut parts: Vec<(Vec<f64>, Option<usize>)> = vec![(spline.coefficients().to_vec(), None)];
            for k in 0..d {
                let mut v = vec![0.0; ext[k]];
                let mut g = vec![0.0; ext[k]];
                self.rows(spline, j, k, x[k], &mut v, &mut g);
                let mut next = Vec::with_capacity(parts.len() + 1);
                for (t, tag) in &parts {
                    next.push((contract_leading(t, ext[k], &v), *tag));
                    if tag.is_none() {
                        next.push((contract_leading(t, ext[k], &g), Some(k)));
                    }
                }
                parts = next;
            }
            let w = self.weights[j];
            for (t, tag) in parts {
                match tag {
                    None => value += w * t[0],
                    Some(l) => grad[l] += w * self.lambda_t[j * d + l] * t[0],
                }
            }
        }
        value
    }

    /// Contribution of time node `j` to the gradient at every grid node.
    fn grid_gradients_at(&self, spline: &TensorSpline, grid: &TensorGrid, j: usize) -> Vec<Vec<f64>> {
        let d = self.dim;
        let ext = spline.extended_dims();
        let mut parts: Vec<(Vec<f64>, Option<usize>)> = vec![(spline.coefficients().to_vec(), None)];
        for (k, axis) in grid.axes().iter().enumerate() {
            let rows = axis.nodes;
            let mut vm = vec![0.0; rows * ext[k]];
            let mut gm = vec![0.0; rows * ext[k]];
            for a in 0..rows {
                let (v, g) = (&mut vm[a * ext[k]..(a + 1) * ext[k]], &mut gm[a * ext[k]..(a + 1) * ext[k]]);
                self.rows(spline, j, k, axis.node(a), v, g);
            }
            let mut next = Vec::with_capacity(parts.len() + 1);
            for (t, tag) in &parts {
                // The plain value is never needed after the last axis.
                if tag.is_some() || k + 1 < d {
                    next.push((product_leading_rotate(t, ext[k], &vm, rows), *tag));
                }
                if tag.is_none() {
                    next.push((product_leading_rotate(t, ext[k], &gm, rows), Some(k)));
                }
            }
            parts = next;
        }
        let mut out = vec![Vec::new(); d];
        let w = self.weights[j];
        for (mut t, tag) in parts {
            if let Some(l) = tag {
                let c = w * self.lambda_t[j * d + l];
                t.iter_mut().for_each(|v| *v *= c);
                out[l] = t;
            }
        }
        out
    }

    /// Gradient of the smoothed spline at every grid node, `[axis][node]`.
    fn grid_gradients(&self, spline: &TensorSpline, grid: &TensorGrid) -> Vec<Vec<f64>> {
        #[cfg(feature = "parallel")]
        let per_time: Vec<Vec<Vec<f64>>> = {
            use rayon::prelude::*;
            (0..self.weights.len()).into_par_iter().map(|j| self.grid_gradients_at(spline, grid, j)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let per_time: Vec<Vec<Vec<f64>>> =
            (0..self.weights.len()).map(|j| self.grid_gradients_at(spline, grid, j)).collect();
        let mut out = vec![vec![0.0; grid.len()]; self.dim];
        for part in per_time {
            for (o, p) in out.iter_mut().zip(part) {
                o.iter_mut().zip(p).for_each(|(a, b)| *a += b);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
enum Engine {
    Separable(Separable),
    Sampled(Smoother),
}

impl Engine {
    fn new(op: &SpectralOperator, lambda: f64, quad: &QuadratureSpec) -> Result<Self> {
        match quad.gaussian {
            GaussianRule::Hermite(p) => {
                quad.validate()?;
                if !(lambda > 0.0) {
                    return Err(Error::InvalidParameter { name: "lambda", reason: "must be positive" });
                }
                Ok(Engine::Separable(Separable::new(op, lambda, p, quad)))
            }
            GaussianRule::MonteCarlo => Ok(Engine::Sampled(Smoother::laplace(op, lambda, quad)?)),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Engine::Separable(s) => s.dim,
            Engine::Sampled(s) => s.dim(),
        }
    }

    fn value_and_gradient(&self, spline: &TensorSpline, x: &[f64], grad: &mut [f64]) -> f64 {
        match self {
            Engine::Separable(s) => s.point(spline, x, grad),
            Engine::Sampled(s) => s.value_and_gradient(x, |y| spline.eval(y), grad),
        }
    }
}

/// A converged solution (scalar or vector valued) with evaluation contracts.
#[derive(Debug, Clone)]
pub struct KolmogorovSolution {
    lambda: f64,
    psi: Vec<TensorSpline>,
    engine: Engine,
    smooth_drift: bool,
    provenance: Provenance,
}

impl KolmogorovSolution {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.engine.dim()
    }

    /// 1 for a scalar solution, `m` for the vector solution.
    pub fn components(&self) -> usize {
        self.psi.len()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// The fixed point `ψ = f + T_λψ` of component `i`.
    pub fn psi(&self, i: usize, x: &[f64]) -> f64 {
        self.psi[i].eval(x)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.component(0, x)
    }

    pub fn component(&self, i: usize, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.value_and_gradient(i, x, &mut g)
    }

    pub fn gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.value_and_gradient(i, x, &mut g);
        g
    }

    pub fn value_and_gradient(&self, i: usize, x: &[f64], grad: &mut [f64]) -> f64 {
        self.engine.value_and_gradient(&self.psi[i], x, grad)
    }

    /// Value and gradient components with quadrature standard errors.
    pub fn estimates(&self, i: usize, x: &[f64]) -> (Estimate, Vec<Estimate>) {
        let s = &self.psi[i];
        match &self.engine {
            Engine::Sampled(sm) => sm.value_and_gradient_estimates(x, |y| s.eval(y)),
            Engine::Separable(sep) => {
                let mut g = vec![0.0; sep.dim];
                let v = sep.point(s, x, &mut g);
                (Estimate::exact(v), g.into_iter().map(Estimate::exact).collect())
            }
        }
    }

    /// Central differences of the gradient contract at step
    /// `h = max(1e−4, 1e−3(1 + |x|))`, then symmetrized.
    pub fn hessian(&self, i: usize, x: &[f64]) -> Result<Hessian> {
        if !self.smooth_drift {
            return Err(Error::InvalidParameter { name: "drift", reason: "Hessians need a smooth (mollified) drift" });
        }
        let d = self.dim();
        let h = (1e-3 * (1.0 + math::norm(x))).max(1e-4);
        let s = &self.psi[i];
        let mut raw = vec![0.0; d * d];
        let mut noise_floor = 0.0f64;
        let mut gmax = 0.0f64;
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        match &self.engine {
            Engine::Sampled(sm) => {
                let n = sm.nodes().len();
                let (mut vp, mut vm) = (vec![0.0; n], vec![0.0; n]);
                let (mut gp, mut gm) = (vec![0.0; n * d], vec![0.0; n * d]);
                let mut col = vec![0.0; n];
                for l in 0..d {
                    xp[l] = x[l] + h;
                    xm[l] = x[l] - h;
                    sm.node_values(&xp, |y| s.eval(y), &mut vp, Some(&mut gp));
                    sm.node_values(&xm, |y| s.eval(y), &mut vm, Some(&mut gm));
                    for k in 0..d {
                        for j in 0..n {
                            col[j] = (gp[j * d + k] - gm[j * d + k]) / (2.0 * h);
                            gmax = gmax.max(gp[j * d + k].abs());
                        }
                        let e = sm.nodes().estimate(&col);
                        raw[l * d + k] = e.value;
                        noise_floor = noise_floor.max(e.std_error);
                    }
                    xp[l] = x[l];
                    xm[l] = x[l];
                }
            }
            Engine::Separable(sep) => {
                let (mut gp, mut gm) = (vec![0.0; d], vec![0.0; d]);
                for l in 0..d {
                    xp[l] = x[l] + h;
                    xm[l] = x[l] - h;
                    sep.point(s, &xp, &mut gp);
                    sep.point(s, &xm, &mut gm);
                    for k in 0..d {
                        raw[l * d + k] = (gp[k] - gm[k]) / (2.0 * h);
                        gmax = gmax.max(gp[k].abs()).max(gm[k].abs());
                    }
                    xp[l] = x[l];
                    xm[l] = x[l];
                }
            }
        }
        noise_floor += 8.0 * f64::EPSILON * gmax / h;
        let mut asymmetry = 0.0f64;
        let mut matrix = raw.clone();
        for k in 0..d {
            for l in 0..d {
                asymmetry = asymmetry.max((raw[k * d + l] - raw[l * d + k]).abs());
                matrix[k * d + l] = 0.5 * (raw[k * d + l] + raw[l * d + k]);
            }
        }
        let out = Hessian { dim: d, matrix, asymmetry, noise_floor, step: h };
        let signal = out.max_abs();
        if noise_floor > signal && noise_floor > self.provenance.quad.tolerance {
            return Err(Error::StepUnderflow { floor: noise_floor, signal });
        }
        Ok(out)
    }
}

fn check_lambda(lambda: f64, threshold: f64) -> Result<()> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter { name: "lambda", reason: "must be positive" });
    }
    // Relative slack so that λ = λ_0 computed elsewhere is admissible.
    if lambda < threshold * (1.0 - 1e-12) {
        return Err(Error::NotContractive { lambda, threshold });
    }
    Ok(())
}

fn grid_for(op: &SpectralOperator, opts: &SolverOptions) -> Result<TensorGrid> {
    let axes = op
        .invariant_std()
        .iter()
        .map(|s| Axis::new(-opts.width * s, opts.width * s, opts.nodes))
        .collect::<Result<Vec<_>>>()?;
    Ok(TensorGrid::new(axes))
}

/// `T_λφ(x) = ⟨B(x), D(λ − L)^{−1}φ(x)⟩`.
pub fn apply_t_lambda<D, F>(
    op: &SpectralOperator,
    drift: &D,
    lambda: f64,
    phi: &F,
    x: &[f64],
    quad: &QuadratureSpec,
) -> Result<Estimate>
where
    D: DriftField + ?Sized,
    F: ScalarField + ?Sized,
{
    if x.len() != op.dim() || drift.dim() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: x.len().min(drift.dim()) });
    }
    let b = drift.eval(x);
    if math::norm(&b) == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    Ok(Smoother::laplace(op, lambda, quad)?.directional(x, |y| phi.eval(y), &b))
}

/// Neumann iteration for one or several right-hand sides sharing the drift.
fn neumann<D: DriftField + ?Sized>(
    op: &SpectralOperator,
    drift: &D,
    lambda: f64,
    grid: &TensorGrid,
    rhs: Vec<Vec<f64>>,
    opts: &SolverOptions,
) -> Result<(Vec<TensorSpline>, Engine, Provenance)> {
    let engine = Engine::new(op, lambda, &opts.quad)?;
    let d = op.dim();
    let n = grid.len();
    let mut b_nodes = vec![0.0; n * d];
    let mut p = vec![0.0; d];
    for j in 0..n {
        grid.point(j, &mut p);
        drift.eval_into(&p, &mut b_nodes[j * d..(j + 1) * d]);
    }
    let mut psi = rhs.clone();
    let mut history = Vec::new();
    loop {
        let splines = psi
            .iter()
            .map(|v| TensorSpline::fit(grid.clone(), v))
            .collect::<Result<Vec<_>>>()?;
        let mut change = 0.0f64;
        for (c, spline) in splines.iter().enumerate() {
            let next: Vec<f64> = match &engine {
                Engine::Separable(sep) => {
                    let g = sep.grid_gradients(spline, grid);
                    (0..n)
                        .map(|j| {
                            let b = &b_nodes[j * d..(j + 1) * d];
                            rhs[c][j] + (0..d).map(|k| b[k] * g[k][j]).sum::<f64>()
                        })
                        .collect()
                }
                Engine::Sampled(sm) => {
                    let sweep = |j: usize| {
                        let b = &b_nodes[j * d..(j + 1) * d];
                        if b.iter().all(|v| *v == 0.0) {
                            return rhs[c][j];
                        }
                        let mut p = vec![0.0; d];
                        let mut g = vec![0.0; d];
                        grid.point(j, &mut p);
                        sm.value_and_gradient(&p, |y| spline.eval(y), &mut g);
                        rhs[c][j] + math::dot(b, &g)
                    };
                    #[cfg(feature = "parallel")]
                    let next: Vec<f64> = {
                        use rayon::prelude::*;
                        (0..n).into_par_iter().map(sweep).collect()
                    };
                    #[cfg(not(feature = "parallel"))]
                    let next: Vec<f64> = (0..n).map(sweep).collect();
                    next
                }
            };
            for j in 0..n {
                change = change.max((next[j] - psi[c][j]).abs());
            }
            psi[c] = next;
        }
        history.push(change);
        if change < opts.tol {
            break;
        }
        if history.len() >= opts.max_iter {
            return Err(Error::NoConvergence { iterations: history.len(), residual: change, tolerance: opts.tol });
        }
    }
    let splines = psi
        .iter()
        .map(|v| TensorSpline::fit(grid.clone(), v))
        .collect::<Result<Vec<_>>>()?;
    let provenance = Provenance {
        iterations: history.len(),
        residual_history: history,
        quad: opts.quad,
        nodes: opts.nodes,
        width: opts.width,
    };
    Ok((splines, engine, provenance))
}

/// Solve `λu − Lu − ⟨B, Du⟩ = f` for `λ ≥ λ_0`.
pub fn solve_scalar<D, F>(
    op: &SpectralOperator,
    drift: &D,
    f: &F,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<KolmogorovSolution>
where
    D: DriftField + ?Sized,
    F: ScalarField + ?Sized,
{
    if drift.dim() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: drift.dim() });
    }
    check_lambda(lambda, lambda0(drift.sup_norm()))?;
    let grid = grid_for(op, opts)?;
    let mut p = vec![0.0; op.dim()];
    let rhs: Vec<f64> = (0..grid.len())
        .map(|j| {
            grid.point(j, &mut p);
            f.eval(&p)
        })
        .collect();
    let (psi, engine, provenance) = neumann(op, drift, lambda, &grid, vec![rhs], opts)?;
    Ok(KolmogorovSolution {
        lambda,
        psi,
        engine,
        smooth_drift: drift.smoothness() == Smoothness::Smooth,
        provenance,
    })
}

/// The vector solution `u = ∫_0^∞ e^{−λt} R_t(Du·B + B) dt`, componentwise
/// the scalar solution with `f = B^{(i)}`; requires `λ ≥ max(λ_0, 2‖B‖_0)`.
pub fn solve_vector<D>(op: &SpectralOperator, drift: &D, lambda: f64, opts: &SolverOptions) -> Result<KolmogorovSolution>
where
    D: DriftField + ?Sized,
{
    let d = op.dim();
    if drift.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: drift.dim() });
    }
    let bound = drift.sup_norm();
    check_lambda(lambda, lambda0(bound).max(2.0 * bound))?;
    let grid = grid_for(op, opts)?;
    let n = grid.len();
    let mut rhs = vec![vec![0.0; n]; d];
    let mut p = vec![0.0; d];
    let mut b = vec![0.0; d];
    for j in 0..n {
        grid.point(j, &mut p);
        drift.eval_into(&p, &mut b);
        for i in 0..d {
            rhs[i][j] = b[i];
        }
    }
    let (psi, engine, provenance) = neumann(op, drift, lambda, &grid, rhs, opts)?;
    Ok(KolmogorovSolution {
        lambda,
        psi,
        engine,
        smooth_drift: drift.smoothness() == Smoothness::Smooth,
        provenance,
    })
}

/// Parameters of the regularity functional and its stopping time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityDiagnostics {
    pub delta: f64,
    pub q: f64,
    /// Always `q / 2`.
    pub gamma: f64,
    pub theta: f64,
    /// Trigger level `R` of the stopping time.
    pub level: f64,
    pub horizon: f64,
}

impl RegularityDiagnostics {
    pub fn new(delta: f64, q: f64, theta: f64, level: f64, horizon: f64) -> Result<Self> {
        if !(q > 4.0) {
            return Err(Error::InvalidParameter { name: "q", reason: "must exceed 4" });
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidTime { value: horizon, requirement: "strictly positive" });
        }
        Ok(Self { delta, q, gamma: q / 2.0, theta, level, horizon })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityValue {
    /// `T` times the average integrand over the points.
    pub s_value: f64,
    /// The same estimate using only the first `n` components, `n = 1..m`.
    pub partial_sums: Vec<f64>,
    /// Integrand `(Σ_n λ_n^{−(1−δ)} ‖D²u^{(n)}‖_HS²)^γ` at each point.
    pub integrand: Vec<f64>,
}

/// Estimate `S_T = ∫_0^T ∫_0^1 (Σ_n λ_n^{−(1−δ)} ‖D²u^{(n)}(Z_s^r)‖²)^γ dr ds` from
/// states `Z_s^r` sampled uniformly over `(s, r)`.
pub fn regularity_functional(
    op: &SpectralOperator,
    solution: &KolmogorovSolution,
    points: &[Vec<f64>],
    diag: &RegularityDiagnostics,
) -> Result<RegularityValue> {
    if (diag.gamma - diag.q / 2.0).abs() > 1e-12 || !(diag.q > 4.0) {
        return Err(Error::InvalidParameter { name: "gamma", reason: "must equal q/2 with q > 4" });
    }
    if (diag.delta - op.delta()).abs() > 1e-12 {
        return Err(Error::InvalidParameter { name: "delta", reason: "must match the spectral operator" });
    }
    let comps = solution.components();
    let weights: Vec<f64> = op.eigenvalues().iter().take(comps).map(|l| math::powf(*l, -(1.0 - diag.delta))).collect();
    let mut integrand = Vec::with_capacity(points.len());
    let mut partial = vec![0.0; comps];
    for x in points {
        let mut acc = 0.0;
        for n in 0..comps {
            let h = solution.hessian(n, x)?.hs_norm();
            acc += weights[n] * h * h;
            partial[n] += math::powf(acc, diag.gamma);
        }
        integrand.push(math::powf(acc, diag.gamma));
    }
    let scale = if points.is_empty() { 0.0 } else { diag.horizon / points.len() as f64 };
    let s_value = crate::stats::pairwise_sum(&integrand) * scale;
    let partial_sums = partial.iter().map(|v| v * scale).collect();
    Ok(RegularityValue { s_value, partial_sums, integrand })
}

/// First time the running integral of `integrand` (sampled on a uniform
/// grid of step `dt`) reaches `level`; `None` if it never does.
pub fn stopping_time(integrand: &[f64], dt: f64, level: f64) -> Option<f64> {
    let mut acc = 0.0;
    for (j, v) in integrand.iter().enumerate() {
        let next = acc + v * dt;
        if next >= level {
            return Some(j as f64 * dt + if *v > 0.0 { (level - acc) / v } else { 0.0 });
        }
        acc = next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ConstantField, FnField, ZeroDrift};

    #[test]
    fn lambda0_examples() {
        assert_eq!(lambda0(0.0), 0.0);
        assert!((lambda0(1.0) - 4.0 * core::f64::consts::PI).abs() < 1e-6);
        assert!((lambda0(2.0) / lambda0(1.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_drift_reduces_to_resolvent() {
        let op = SpectralOperator::new(vec![1.0], 0.5).unwrap();
        let sq = FnField::new(|x: &[f64]| x[0] * x[0], f64::INFINITY, Smoothness::Smooth);
        let sol = solve_scalar(&op, &ZeroDrift(1), &sq, 1.0, &SolverOptions::for_dim(1)).unwrap();
        assert_eq!(sol.provenance().iterations, 1);
        // (1 − L)^{−1} x² = x²/3 + 1/3
        for x in [-1.0, 0.0, 0.5, 1.5] {
            assert!((sol.value(&[x]) - (x * x + 1.0) / 3.0).abs() < 1e-4, "{x} {}", sol.value(&[x]));
            let h = sol.hessian(0, &[x]).unwrap();
            assert!((h.get(0, 0) - 2.0 / 3.0).abs() < 1e-3, "{}", h.get(0, 0));
        }
    }

    #[test]
    fn below_threshold_is_rejected() {
        let op = SpectralOperator::new(vec![1.0], 0.5).unwrap();
        let b = crate::field::ConstantDrift(vec![1.0]);
        let r = solve_scalar(&op, &b, &ConstantField(1.0), 1.0, &SolverOptions::for_dim(1));
        assert!(matches!(r, Err(Error::NotContractive { .. })));
        let r = solve_vector(&op, &b, lambda0(1.0), &SolverOptions::for_dim(1));
        assert!(r.is_ok());
    }

    #[test]
    fn stopping_time_interpolates() {
        assert_eq!(stopping_time(&[1.0, 1.0, 1.0], 0.5, 1.0), Some(1.0));
        assert_eq!(stopping_time(&[1.0, 1.0], 0.5, 5.0), None);
    }
}
