//! Stochastic integrals against the truncated noise and exponential
//! Girsanov weights.
//!
//! Drift values enter only at left nodes: [`stochastic_integral`] takes one
//! row per step, never a row for the terminal node.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{DriftField, ScalarField};
use crate::math;
use crate::paths::{NoisePanel, PathEnsemble, TimeGrid, Trajectory};
use crate::spectrum::SpectralOperator;
use crate::stats::{pairwise_sum, Estimate};

/// `Σ_j Σ_k b_k(t_j) ΔW_{k,j}` for `b_values` laid out `[j * m + k]`,
/// `j = 0..N−1`.
pub fn stochastic_integral(b_values: &[f64], panel: &NoisePanel) -> Result<f64> {
    let d = panel.dim();
    let n = panel.grid().steps();
    if b_values.len() != n * d {
        return Err(Error::DimensionMismatch { expected: n * d, got: b_values.len() });
    }
    let terms: Vec<f64> = (0..n).map(|j| math::dot(&b_values[j * d..(j + 1) * d], panel.dw(j))).collect();
    Ok(pairwise_sum(&terms))
}

/// `B(X(t_j))` at the left nodes `j = 0..N−1`.
pub fn left_node_values<D: DriftField + ?Sized>(path: &Trajectory, drift: &D) -> Vec<f64> {
    let d = path.dim();
    let n = path.grid().steps();
    let mut out = vec![0.0; n * d];
    for j in 0..n {
        drift.eval_into(path.state(j), &mut out[j * d..(j + 1) * d]);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Density of the drift-free law w.r.t. the drifted one:
    /// `ρ = exp(−∫⟨B, dW⟩ − ½∫|B|²)`, driven by the drifted path's noise.
    RemoveDrift,
    /// Density of the drifted law w.r.t. the drift-free one:
    /// `M = exp(∫⟨B, dW⟩ − ½∫|B|²)` along an OU path.
    AddDrift,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GirsanovWeight {
    pub log_weight: f64,
    /// `∫⟨B, dW⟩`.
    pub integral_term: f64,
    /// `½∫|B|² dt`.
    pub quadratic_term: f64,
    pub segment_count: usize,
}

impl GirsanovWeight {
    pub fn weight(&self) -> f64 {
        math::exp(self.log_weight)
    }
}

fn weight_from_values(b: &[f64], panel: &NoisePanel, direction: Direction) -> Result<GirsanovWeight> {
    let integral_term = stochastic_integral(b, panel)?;
    let sq: Vec<f64> = b.iter().map(|v| v * v).collect();
    let quadratic_term = 0.5 * pairwise_sum(&sq) * panel.grid().dt();
    let log_weight = match direction {
        Direction::RemoveDrift => -integral_term - quadratic_term,
        Direction::AddDrift => integral_term - quadratic_term,
    };
    Ok(GirsanovWeight { log_weight, integral_term, quadratic_term, segment_count: 1 })
}

pub fn girsanov_weight<D: DriftField + ?Sized>(
    path: &Trajectory,
    drift: &D,
    panel: &NoisePanel,
    direction: Direction,
) -> Result<GirsanovWeight> {
    if path.grid() != panel.grid() || path.dim() != panel.dim() {
        return Err(Error::DimensionMismatch { expected: panel.grid().steps(), got: path.grid().steps() });
    }
    weight_from_values(&left_node_values(path, drift), panel, direction)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentEstimate {
    pub start: f64,
    pub end: f64,
    /// `½‖B‖_0²·(segment length)`, the Novikov exponent ceiling.
    pub exponent_bound: f64,
    /// `E exp(½∫_seg |B|²)`.
    pub exponential_moment: Estimate,
    /// `E exp(∫_seg⟨B, dW⟩ − ½∫_seg|B|²)`.
    pub martingale_mean: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NovikovReport {
    pub segments: Vec<SegmentEstimate>,
    /// `E[M]` over the full horizon.
    pub total: Estimate,
    pub passed: bool,
}

/// Per-segment Novikov moments and martingale means along `paths` OU
/// paths started at `x`; passes iff every moment is finite and within its
/// ceiling, and every segment mean as well as `E[M]` is within 3 standard
/// errors of 1.
pub fn segmented_novikov_check<D: DriftField + ?Sized>(
    op: &SpectralOperator,
    drift: &D,
    x: &[f64],
    grid: TimeGrid,
    segments: usize,
    paths: usize,
    seed: u64,
) -> Result<NovikovReport> {
    if segments == 0 || !grid.steps().is_multiple_of(segments) {
        return Err(Error::InvalidParameter { name: "segments", reason: "must divide the step count" });
    }
    let bound = drift.sup_norm();
    let seg_len = grid.horizon() / segments as f64;
    let exponent = 0.5 * bound * bound * seg_len;
    if exponent > 0.5 {
        return Err(Error::SegmentTooLong { exponent });
    }
    let per = grid.steps() / segments;
    let d = op.dim();
    let dt = grid.dt();
    let mut moments = vec![Vec::with_capacity(paths); segments];
    let mut means = vec![Vec::with_capacity(paths); segments];
    let mut totals = Vec::with_capacity(paths);
    for p in 0..paths {
        let panel = NoisePanel::generate(op, grid, seed, p as u64);
        let path = crate::paths::simulate_ou_with(op, x, &panel)?;
        let b = left_node_values(&path, drift);
        let mut log_total = 0.0;
        for s in 0..segments {
            let (mut ito, mut quad) = (0.0, 0.0);
            for j in s * per..(s + 1) * per {
                let bj = &b[j * d..(j + 1) * d];
                ito += math::dot(bj, panel.dw(j));
                quad += 0.5 * math::dot(bj, bj) * dt;
            }
            moments[s].push(math::exp(quad));
            means[s].push(math::exp(ito - quad));
            log_total += ito - quad;
        }
        totals.push(math::exp(log_total));
    }
    let mut passed = true;
    let segs: Vec<SegmentEstimate> = (0..segments)
        .map(|s| {
            let exponential_moment = Estimate::from_samples(&moments[s]);
            let martingale_mean = Estimate::from_samples(&means[s]);
            passed &= exponential_moment.value.is_finite()
                && exponential_moment.value <= math::exp(exponent) * (1.0 + 1e-12)
                && martingale_mean.agrees_with(1.0, 3.0, 1e-12);
            SegmentEstimate {
                start: s as f64 * seg_len,
                end: (s + 1) as f64 * seg_len,
                exponent_bound: exponent,
                exponential_moment,
                martingale_mean,
            }
        })
        .collect();
    let total = Estimate::from_samples(&totals);
    passed &= total.agrees_with(1.0, 3.0, 1e-12);
    Ok(NovikovReport { segments: segs, total, passed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    Terminal,
    Sup,
    /// Trapezoidal time average over the grid.
    TimeAverage,
}

impl Functional {
    pub fn apply<F: ScalarField + ?Sized>(&self, f: &F, path: &Trajectory) -> f64 {
        let n = path.grid().steps();
        match self {
            Functional::Terminal => f.eval(path.terminal()),
            Functional::Sup => (0..=n).map(|j| f.eval(path.state(j))).fold(f64::NEG_INFINITY, f64::max),
            Functional::TimeAverage => {
                let v: Vec<f64> = (0..=n)
                    .map(|j| {
                        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                        w * f.eval(path.state(j))
                    })
                    .collect();
                pairwise_sum(&v) / n as f64
            }
        }
    }
}

pub const MIN_EFFECTIVE_SAMPLES: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEstimate {
    pub estimate: Estimate,
    pub effective_samples: f64,
    /// Effective sample size below [`MIN_EFFECTIVE_SAMPLES`].
    pub degenerate: bool,
}

/// Self-normalized importance estimate `Σ w_i f_i / Σ w_i` from log weights.
pub fn weighted_estimate(values: &[f64], log_weights: &[f64]) -> Result<WeightedEstimate> {
    if values.len() != log_weights.len() || values.is_empty() {
        return Err(Error::DimensionMismatch { expected: values.len(), got: log_weights.len() });
    }
    let max = log_weights.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    if !max.is_finite() {
        return Err(Error::InvalidWeights);
    }
    let w: Vec<f64> = log_weights.iter().map(|l| math::exp(l - max)).collect();
    let s = pairwise_sum(&w);
    let s2 = pairwise_sum(&w.iter().map(|v| v * v).collect::<Vec<_>>());
    let effective_samples = s * s / s2;
    Ok(WeightedEstimate {
        estimate: Estimate::from_weighted(values, &w),
        effective_samples,
        degenerate: effective_samples < MIN_EFFECTIVE_SAMPLES,
    })
}

pub fn weighted_expectation<F: ScalarField + ?Sized>(
    f: &F,
    ensemble: &PathEnsemble,
    weights: &[GirsanovWeight],
    functional: Functional,
) -> Result<WeightedEstimate> {
    if weights.len() != ensemble.trajectories.len() {
        return Err(Error::DimensionMismatch { expected: ensemble.trajectories.len(), got: weights.len() });
    }
    let values: Vec<f64> = ensemble.trajectories.iter().map(|p| functional.apply(f, p)).collect();
    let lw: Vec<f64> = weights.iter().map(|w| w.log_weight).collect();
    weighted_estimate(&values, &lw)
}
