//! Path simulation by exact-linear exponential Euler.
//!
//! Over a step of length `Δ` mode `k` evolves as
//!
//! ```text
//! X_k ← e^{−λ_kΔ} X_k + φ_k(Δ) B_k(X) + η_k,   η_k = ∫ e^{−λ_k(Δ−s)} dβ_k(s)
//! ```
//!
//! with `φ_k(Δ) = (1 − e^{−λ_kΔ})/λ_k`. A [`NoisePanel`] stores, per step and
//! mode, the Brownian increment `ΔW` and the convolved increment `η` drawn
//! jointly from their exact bivariate Gaussian law, so the stochastic
//! integrals of the Girsanov module and the OU recursion see the same
//! Brownian path.

use alloc::vec;
use alloc::vec::Vec;

use crate::drifts::RationalDetector;
use crate::error::{Error, Result};
use crate::field::DriftField;
use crate::math;
use crate::quadrature;
use crate::rng::{domain, NormalStream};
use crate::spectrum::{phi_coefficient, q_coefficient, SpectralOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidTime { value: horizon, requirement: "positive and finite" });
        }
        if steps == 0 {
            return Err(Error::InvalidParameter { name: "steps", reason: "must be at least 1" });
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        self.horizon * j as f64 / self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|j| self.time(j)).collect()
    }

    /// The grid with `factor` times fewer steps.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.steps.is_multiple_of(factor) {
            return Err(Error::InvalidParameter { name: "factor", reason: "must divide the step count" });
        }
        Self::new(self.horizon, self.steps / factor)
    }
}

/// `q(Δ) − φ(Δ)²/Δ`, the conditional variance of `η` given `ΔW`.
fn residual_variance(lambda: f64, dt: f64) -> f64 {
    let x = lambda * dt;
    let v = if x < 0.05 {
        residual_variance_series(lambda, x)
    } else {
        let p = phi_coefficient(lambda, dt);
        q_coefficient(lambda, dt) - p * p / dt
    };
    v.max(0.0)
}

fn residual_variance_series(lambda: f64, x: f64) -> f64 {
    {
        let c = [
            1.0 / 12.0,
            -1.0 / 12.0,
            17.0 / 360.0,
            -7.0 / 360.0,
            43.0 / 6720.0,
            -107.0 / 60480.0,
            769.0 / 1814400.0,
        ];
        let mut acc = 0.0;
        for ci in c.iter().rev() {
            acc = acc * x + ci;
        }
        acc * x * x * x / lambda
    }
}

/// Per-step, per-mode noise of one path; entries laid out `[j * dim + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePanel {
    grid: TimeGrid,
    dim: usize,
    eigenvalues: Vec<f64>,
    dw: Vec<f64>,
    eta: Vec<f64>,
    pub seed: u64,
    pub path_id: u64,
}

impl NoisePanel {
    /// Draw the panel of path `path_id`; reproducible from `(seed, path_id)`.
    pub fn generate(op: &SpectralOperator, grid: TimeGrid, seed: u64, path_id: u64) -> Self {
        let dim = op.dim();
        let dt = grid.dt();
        let sdt = math::sqrt(dt);
        let coef: Vec<(f64, f64)> = op
            .eigenvalues()
            .iter()
            .map(|&l| (phi_coefficient(l, dt) / sdt, math::sqrt(residual_variance(l, dt))))
            .collect();
        let n = grid.steps() * dim;
        let mut dw = Vec::with_capacity(n);
        let mut eta = Vec::with_capacity(n);
        let mut s = NormalStream::new(seed, domain::NOISE_PANEL, path_id);
        for _ in 0..grid.steps() {
            for &(a, b) in &coef {
                let xi = s.normal();
                let zeta = s.normal();
                dw.push(sdt * xi);
                eta.push(a * xi + b * zeta);
            }
        }
        Self { grid, dim, eigenvalues: op.eigenvalues().to_vec(), dw, eta, seed, path_id }
    }

    /// The noiseless panel.
    pub fn zero(op: &SpectralOperator, grid: TimeGrid) -> Self {
        let n = grid.steps() * op.dim();
        Self {
            grid,
            dim: op.dim(),
            eigenvalues: op.eigenvalues().to_vec(),
            dw: vec![0.0; n],
            eta: vec![0.0; n],
            seed: 0,
            path_id: 0,
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `ΔW_{k,j}`.
    pub fn dw(&self, j: usize) -> &[f64] {
        &self.dw[j * self.dim..(j + 1) * self.dim]
    }

    /// `η_{k,j} = ∫_{t_j}^{t_{j+1}} e^{−λ_k(t_{j+1}−s)} dβ_k(s)`.
    pub fn eta(&self, j: usize) -> &[f64] {
        &self.eta[j * self.dim..(j + 1) * self.dim]
    }

    /// Standard normal increments `ΔW / √Δ`.
    pub fn xi(&self) -> Vec<f64> {
        let s = math::sqrt(self.grid.dt());
        self.dw.iter().map(|v| v / s).collect()
    }

    /// The same Brownian path seen on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.coarsen(factor)?;
        let d = self.dim;
        let fine = self.grid.dt();
        let coarse = grid.dt();
        let mut dw = vec![0.0; grid.steps() * d];
        let mut eta = vec![0.0; grid.steps() * d];
        for j in 0..grid.steps() {
            for i in 0..factor {
                let f = j * factor + i;
                let remaining = coarse - (i + 1) as f64 * fine;
                for k in 0..d {
                    dw[j * d + k] += self.dw[f * d + k];
                    eta[j * d + k] += math::exp(-self.eigenvalues[k] * remaining.max(0.0)) * self.eta[f * d + k];
                }
            }
        }
        Ok(Self { grid, dim: d, eigenvalues: self.eigenvalues.clone(), dw, eta, seed: self.seed, path_id: self.path_id })
    }
}

/// States at every grid node, `[j * dim + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    dim: usize,
    states: Vec<f64>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, dim: usize, states: Vec<f64>) -> Result<Self> {
        if states.len() != (grid.steps() + 1) * dim {
            return Err(Error::DimensionMismatch { expected: (grid.steps() + 1) * dim, got: states.len() });
        }
        Ok(Self { grid, dim, states })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state(&self, j: usize) -> &[f64] {
        &self.states[j * self.dim..(j + 1) * self.dim]
    }

    pub fn terminal(&self) -> &[f64] {
        self.state(self.grid.steps())
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.grid.steps() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Every `factor`-th node.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.coarsen(factor)?;
        let mut states = Vec::with_capacity((grid.steps() + 1) * self.dim);
        for j in 0..=grid.steps() {
            states.extend_from_slice(self.state(j * factor));
        }
        Ok(Self { grid, dim: self.dim, states })
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.len()).map(|j| math::norm(self.state(j))).fold(0.0, f64::max)
    }
}

/// `sup_j |X(t_j) − Y(t_j)|` over common nodes.
pub fn sup_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    (0..a.len().min(b.len())).map(|j| math::distance(a.state(j), b.state(j))).fold(0.0, f64::max)
}

/// A family of trajectories on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub grid: TimeGrid,
    pub initial: Vec<f64>,
    pub seed: u64,
    pub trajectories: Vec<Trajectory>,
}

fn check_dim(op: &SpectralOperator, x: &[f64]) -> Result<()> {
    if x.len() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: x.len() });
    }
    Ok(())
}

/// OU path driven by `panel`.
pub fn simulate_ou_with(op: &SpectralOperator, x: &[f64], panel: &NoisePanel) -> Result<Trajectory> {
    check_dim(op, x)?;
    let grid = panel.grid();
    let d = op.dim();
    let decay: Vec<f64> = op.eigenvalues().iter().map(|l| math::exp(-l * grid.dt())).collect();
    let mut states = vec![0.0; (grid.steps() + 1) * d];
    states[..d].copy_from_slice(x);
    for j in 0..grid.steps() {
        let (head, tail) = states.split_at_mut((j + 1) * d);
        let prev = &head[j * d..];
        let eta = panel.eta(j);
        for k in 0..d {
            // `+ 0.0` keeps this bit-identical to the mild scheme with zero drift.
            tail[k] = (decay[k] * prev[k] + 0.0) + eta[k];
        }
    }
    Trajectory::new(grid, d, states)
}

/// OU path number 0 of `seed`.
pub fn simulate_ou(op: &SpectralOperator, x: &[f64], grid: TimeGrid, seed: u64) -> Result<Trajectory> {
    simulate_ou_with(op, x, &NoisePanel::generate(op, grid, seed, 0))
}

/// Terminal state only, without storing the path.
pub fn ou_terminal(op: &SpectralOperator, x: &[f64], grid: TimeGrid, seed: u64, path_id: u64) -> Result<Vec<f64>> {
    let t = simulate_ou_with(op, x, &NoisePanel::generate(op, grid, seed, path_id))?;
    Ok(t.terminal().to_vec())
}

/// How the drift enters a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Left-node drift through the a.e. representative (Dirichlet ≡ 1).
    Forward,
    /// Left-node drift evaluated pointwise.
    Pointwise,
    /// Drift at the average of the left node and a pointwise predictor.
    MidpointPredictor,
    /// Pointwise, plus an attempted constant continuation of every
    /// component whose pointwise and a.e. drift values disagree (a detected
    /// rational); accepted when its one-step mild residual is at most
    /// [`BRANCH_ACCEPTANCE`].
    BranchSeeking,
}

pub const BRANCH_ACCEPTANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchAttempt {
    pub step: usize,
    pub component: usize,
    pub residual: f64,
    pub accepted: bool,
}

struct Stepper<'a, D: ?Sized> {
    drift: &'a D,
    decay: Vec<f64>,
    phi: Vec<f64>,
    b: Vec<f64>,
    g: Vec<f64>,
    mid: Vec<f64>,
}

impl<'a, D: DriftField + ?Sized> Stepper<'a, D> {
    fn new(op: &SpectralOperator, drift: &'a D, dt: f64) -> Self {
        let d = op.dim();
        Self {
            drift,
            decay: op.eigenvalues().iter().map(|l| math::exp(-l * dt)).collect(),
            phi: op.eigenvalues().iter().map(|&l| phi_coefficient(l, dt)).collect(),
            b: vec![0.0; d],
            g: vec![0.0; d],
            mid: vec![0.0; d],
        }
    }

    fn advance(&self, x: &[f64], b: &[f64], eta: &[f64], out: &mut [f64]) {
        for k in 0..x.len() {
            out[k] = (self.decay[k] * x[k] + self.phi[k] * b[k]) + eta[k];
        }
    }

    fn step(&mut self, variant: Variant, j: usize, x: &[f64], eta: &[f64], out: &mut [f64], log: &mut Vec<BranchAttempt>) {
        match variant {
            Variant::Forward => {
                self.drift.eval_generic_into(x, &mut self.b);
                self.advance(x, &self.b, eta, out);
            }
            Variant::Pointwise => {
                self.drift.eval_into(x, &mut self.b);
                self.advance(x, &self.b, eta, out);
            }
            Variant::MidpointPredictor => {
                self.drift.eval_into(x, &mut self.b);
                let mut pred = vec![0.0; x.len()];
                self.advance(x, &self.b, eta, &mut pred);
                for k in 0..x.len() {
                    self.mid[k] = 0.5 * (x[k] + pred[k]);
                }
                self.drift.eval_into(&self.mid, &mut self.b);
                self.advance(x, &self.b, eta, out);
            }
            Variant::BranchSeeking => {
                self.drift.eval_into(x, &mut self.b);
                self.drift.eval_generic_into(x, &mut self.g);
                self.advance(x, &self.b, eta, out);
                for k in 0..x.len() {
                    if self.b[k] != self.g[k] {
                        let residual = (x[k] - out[k]).abs();
                        let accepted = residual <= BRANCH_ACCEPTANCE;
                        if accepted {
                            out[k] = x[k];
                        }
                        log.push(BranchAttempt { step: j, component: k, residual, accepted });
                    }
                }
            }
        }
    }
}

fn run<D: DriftField + ?Sized>(
    op: &SpectralOperator,
    drift: &D,
    x: &[f64],
    panel: &NoisePanel,
    variant: Variant,
) -> Result<(Trajectory, Vec<BranchAttempt>)> {
    check_dim(op, x)?;
    if drift.dim() != op.dim() || panel.dim() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: drift.dim().min(panel.dim()) });
    }
    let grid = panel.grid();
    let d = op.dim();
    let mut stepper = Stepper::new(op, drift, grid.dt());
    let mut states = vec![0.0; (grid.steps() + 1) * d];
    states[..d].copy_from_slice(x);
    let mut log = Vec::new();
    for j in 0..grid.steps() {
        let (head, tail) = states.split_at_mut((j + 1) * d);
        stepper.step(variant, j, &head[j * d..], panel.eta(j), &mut tail[..d], &mut log);
    }
    Ok((Trajectory::new(grid, d, states)?, log))
}

/// Exponential-Euler mild solution with left-node pointwise drift.
pub fn simulate_mild<D: DriftField + ?Sized>(
    op: &SpectralOperator,
    drift: &D,
    x: &[f64],
    panel: &NoisePanel,
) -> Result<Trajectory> {
    Ok(run(op, drift, x, panel, Variant::Pointwise)?.0)
}

pub fn simulate_variant<D: DriftField + ?Sized>(
    op: &SpectralOperator,
    drift: &D,
    x: &[f64],
    panel: &NoisePanel,
    variant: Variant,
) -> Result<(Trajectory, Vec<BranchAttempt>)> {
    run(op, drift, x, panel, variant)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoSimulation {
    pub first: Trajectory,
    pub second: Trajectory,
    pub sup_distance: f64,
    pub attempts: Vec<BranchAttempt>,
}

/// Two variants on one shared panel.
pub fn co_simulate_with<D: DriftField + ?Sized>(
    op: &SpectralOperator,
    drift: &D,
    x: &[f64],
    panel: &NoisePanel,
    a: Variant,
    b: Variant,
) -> Result<CoSimulation> {
    let (first, mut attempts) = run(op, drift, x, panel, a)?;
    let (second, more) = run(op, drift, x, panel, b)?;
    attempts.extend(more);
    let sup_distance = sup_distance(&first, &second);
    Ok(CoSimulation { first, second, sup_distance, attempts })
}

pub fn co_simulate<D: DriftField + ?Sized>(
    op: &SpectralOperator,
    drift: &D,
    x: &[f64],
    grid: TimeGrid,
    seed: u64,
    a: Variant,
    b: Variant,
) -> Result<CoSimulation> {
    co_simulate_with(op, drift, x, &NoisePanel::generate(op, grid, seed, 0), a, b)
}

/// Which drift representative a residual is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representative {
    Pointwise,
    Generic,
}

/// Per-step one-step mild residual `|X_{j+1} − e^{ΔA}X_j − φ(Δ)B(X_j) − η_j|`.
pub fn mild_residuals<D: DriftField + ?Sized>(
    op: &SpectralOperator,
    drift: &D,
    path: &Trajectory,
    panel: &NoisePanel,
    representative: Representative,
) -> Result<Vec<f64>> {
    if path.grid() != panel.grid() || path.dim() != op.dim() {
        return Err(Error::DimensionMismatch { expected: panel.grid().steps(), got: path.grid().steps() });
    }
    let d = op.dim();
    let stepper = Stepper::new(op, drift, panel.grid().dt());
    let mut b = vec![0.0; d];
    let mut next = vec![0.0; d];
    Ok((0..panel.grid().steps())
        .map(|j| {
            let x = path.state(j);
            match representative {
                Representative::Pointwise => drift.eval_into(x, &mut b),
                Representative::Generic => drift.eval_generic_into(x, &mut b),
            }
            stepper.advance(x, &b, panel.eta(j), &mut next);
            math::distance(&next, path.state(j + 1))
        })
        .collect())
}

/// `10 (|x| + ‖B‖_0 T + max_j |η_j|)`, a coarse ceiling for mild paths.
pub fn sanity_ceiling(x: &[f64], drift_bound: f64, panel: &NoisePanel) -> f64 {
    let noise = (0..panel.grid().steps()).map(|j| math::norm(panel.eta(j))).fold(0.0, f64::max);
    10.0 * (math::norm(x) + drift_bound * panel.grid().horizon() + noise)
}

/// A continuous piecewise-linear scalar path given by breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        for i in 1..n {
            if t <= self.times[i] {
                let (t0, t1) = (self.times[i - 1], self.times[i]);
                let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 1.0 };
                return self.values[i - 1] + w * (self.values[i] - self.values[i - 1]);
            }
        }
        self.values[n - 1]
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        let mut ts: Vec<f64> = self.times.iter().chain(&other.times).copied().collect();
        ts.sort_by(|a, b| a.total_cmp(b));
        ts.iter().map(|t| (self.eval(*t) - other.eval(*t)).abs()).fold(0.0, f64::max)
    }
}

/// Exact solutions of `X' = b_Dir(X)`, `X_0 = x`, on `[0, T]`: the solution
/// `x + t`, and for each branch time `t_b` the solution following `x + t`
/// until `t_b` and constant afterwards. A branch is admissible only if
/// `x + t_b` is a detected rational.
pub fn dirichlet_solutions(
    x: f64,
    horizon: f64,
    branch_times: &[f64],
    detector: &RationalDetector,
) -> Result<Vec<PiecewiseLinear>> {
    let mut out = vec![PiecewiseLinear { times: vec![0.0, horizon], values: vec![x, x + horizon] }];
    for &tb in branch_times {
        if !(0.0..=horizon).contains(&tb) || !detector.is_rational(x + tb) {
            return Err(Error::InvalidParameter { name: "branch_time", reason: "branch state must be rational" });
        }
        out.push(PiecewiseLinear { times: vec![0.0, tb, horizon], values: vec![x, x + tb, x + tb] });
    }
    Ok(out)
}

/// `sup_t |X_t − x − ∫_0^t b(X_s) ds|` at the breakpoints and at `samples`
/// interior times, with the integral computed by Gauss–Legendre on each
/// linear piece.
pub fn integral_residual(path: &PiecewiseLinear, b: impl Fn(f64) -> f64, samples: usize) -> f64 {
    let x0 = path.values[0];
    let horizon = *path.times.last().unwrap_or(&0.0);
    let integral = |t: f64| {
        let mut acc = 0.0;
        for i in 1..path.times.len() {
            let (a, e) = (path.times[i - 1], path.times[i].min(t));
            if e <= a {
                break;
            }
            let rule = quadrature::gauss_legendre(8, a, e);
            acc += rule.integrate(|s| b(path.eval(s)));
        }
        acc
    };
    let mut ts = path.times.clone();
    ts.extend((1..samples).map(|i| horizon * i as f64 / samples as f64));
    ts.iter().map(|&t| (path.eval(t) - x0 - integral(t)).abs()).fold(0.0, f64::max)
}
