//! The Ornstein–Uhlenbeck semigroup `R_tφ(x) = E φ(e^{tA}x + Q_t^{1/2}Z)`, its
//! gradient by Gaussian integration by parts, and the resolvent
//! `(λ − L)^{−1}φ = ∫_0^∞ e^{−λt} R_tφ dt`.
//!
//! Expectations share one set of standard normal nodes across states,
//! times and `λ` (common random numbers), so estimates depend smoothly on
//! their inputs.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::math;
use crate::quadrature;
use crate::rng::{domain, NormalStream};
use crate::spectrum::{lambda_coefficient, q_coefficient, SpectralOperator};
use crate::stats::{pairwise_sum, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianRule {
    /// Antithetic Monte Carlo with `mc_samples` draws.
    MonteCarlo,
    /// Tensor Gauss–Hermite with the given number of points per mode.
    Hermite(usize),
}

/// Node placement for Laplace integrals `∫_0^∞ e^{−λt} g(t) dt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeTransform {
    /// `t = s²` with Gauss–Legendre in `s` on `[0, √(40/λ)]`; absorbs the
    /// `t^{−1/2}` singularity of gradient integrands.
    SquareRoot,
    /// `t = e^v` with Gauss–Legendre in `v` on `[ln(1e−10/λ), ln(40/λ)]`.
    ExpSpaced,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub mc_samples: usize,
    pub time_nodes: usize,
    pub time_transform: TimeTransform,
    pub gaussian: GaussianRule,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            mc_samples: 4096,
            time_nodes: 32,
            time_transform: TimeTransform::SquareRoot,
            gaussian: GaussianRule::MonteCarlo,
            seed: 0,
            tolerance: 1e-6,
        }
    }
}

impl QuadratureSpec {
    pub fn monte_carlo(mc_samples: usize, time_nodes: usize, seed: u64) -> Self {
        Self { mc_samples, time_nodes, seed, ..Self::default() }
    }

    pub fn hermite(points: usize, time_nodes: usize) -> Self {
        Self { gaussian: GaussianRule::Hermite(points), time_nodes, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_samples == 0 || self.time_nodes == 0 || self.gaussian == GaussianRule::Hermite(0) {
            return Err(Error::InvalidParameter { name: "quadrature", reason: "counts must be at least 1" });
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter { name: "tolerance", reason: "must be positive" });
        }
        Ok(())
    }
}

/// Standard normal nodes in `ℝ^m` with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNodes {
    dim: usize,
    z: Vec<f64>,
    weights: Vec<f64>,
    /// Consecutive antithetic pairs; standard errors are taken over pairs.
    paired: bool,
}

impl GaussianNodes {
    pub fn new(dim: usize, spec: &QuadratureSpec) -> Self {
        match spec.gaussian {
            GaussianRule::MonteCarlo => {
                let pairs = spec.mc_samples.div_ceil(2);
                let mut z = Vec::with_capacity(2 * pairs * dim);
                for p in 0..pairs {
                    let mut s = NormalStream::new(spec.seed, domain::QUADRATURE, p as u64);
                    let start = z.len();
                    for _ in 0..dim {
                        z.push(s.normal());
                    }
                    for k in 0..dim {
                        z.push(-z[start + k]);
                    }
                }
                let n = 2 * pairs;
                Self { dim, z, weights: vec![1.0 / n as f64; n], paired: true }
            }
            GaussianRule::Hermite(p) => {
                let rule = quadrature::gauss_hermite_normal(p);
                let n = p.pow(dim as u32);
                let mut z = Vec::with_capacity(n * dim);
                let mut weights = Vec::with_capacity(n);
                let mut idx = vec![0usize; dim];
                for _ in 0..n {
                    let mut w = 1.0;
                    for &i in &idx {
                        z.push(rule.nodes[i]);
                        w *= rule.weights[i];
                    }
                    weights.push(w);
                    for d in idx.iter_mut() {
                        *d += 1;
                        if *d < p {
                            break;
                        }
                        *d = 0;
                    }
                }
                Self { dim, z, weights, paired: false }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.z[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Combine per-node values into an estimate.
    pub fn estimate(&self, values: &[f64]) -> Estimate {
        if self.paired {
            let pairs: Vec<f64> = values.chunks(2).map(|c| 0.5 * (c[0] + c[c.len() - 1])).collect();
            Estimate::from_samples(&pairs)
        } else {
            let wv: Vec<f64> = values.iter().zip(&self.weights).map(|(v, w)| v * w).collect();
            Estimate::exact(pairwise_sum(&wv))
        }
    }
}

/// Time nodes and weights for `∫_0^∞ e^{−λt} g(t) dt ≈ Σ_j W_j g(t_j)`; the
/// exponential factor is folded into `W_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceRule {
    pub times: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LaplaceRule {
    pub fn new(lambda: f64, nodes: usize, transform: TimeTransform) -> Self {
        let t_max = 40.0 / lambda;
        let (times, weights) = match transform {
            TimeTransform::SquareRoot => {
                let r = quadrature::gauss_legendre(nodes, 0.0, math::sqrt(t_max));
                r.nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(s, w)| {
                        let t = s * s;
                        (t, w * 2.0 * s * math::exp(-lambda * t))
                    })
                    .unzip()
            }
            TimeTransform::ExpSpaced => {
                let r = quadrature::gauss_legendre(nodes, math::ln(1e-10 / lambda), math::ln(t_max));
                r.nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(v, w)| {
                        let t = math::exp(*v);
                        (t, w * t * math::exp(-lambda * t))
                    })
                    .unzip()
            }
        };
        Self { times, weights }
    }

    /// A single time `t` with unit weight.
    pub fn point(t: f64) -> Self {
        Self { times: vec![t], weights: vec![1.0] }
    }
}

/// Precomputed per-time, per-mode coefficients for Gaussian smoothing
/// `Σ_j W_j E g(e^{t_jA}x + Q_{t_j}^{1/2} Z)` and its gradient.
#[derive(Debug, Clone)]
pub struct Smoother {
    dim: usize,
    nodes: GaussianNodes,
    weights: Vec<f64>,
    /// `[j * dim + k]` entries.
    decay: Vec<f64>,
    spread: Vec<f64>,
    lambda_t: Vec<f64>,
}

impl Smoother {
    pub fn new(op: &SpectralOperator, rule: LaplaceRule, nodes: GaussianNodes) -> Result<Self> {
        let dim = op.dim();
        if nodes.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: nodes.dim() });
        }
        let nt = rule.times.len();
        let (mut decay, mut spread, mut lambda_t) =
            (Vec::with_capacity(nt * dim), Vec::with_capacity(nt * dim), Vec::with_capacity(nt * dim));
        for &t in &rule.times {
            if !(t > 0.0) {
                return Err(Error::InvalidTime { value: t, requirement: "strictly positive" });
            }
            for &l in op.eigenvalues() {
                decay.push(math::exp(-l * t));
                spread.push(math::sqrt(q_coefficient(l, t)));
                lambda_t.push(lambda_coefficient(l, t));
            }
        }
        Ok(Self { dim, nodes, weights: rule.weights, decay, spread, lambda_t })
    }

    /// Smoothing at a single time `t > 0`.
    pub fn at_time(op: &SpectralOperator, t: f64, quad: &QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        Self::new(op, LaplaceRule::point(t), GaussianNodes::new(op.dim(), quad))
    }

    /// Laplace transform at rate `lambda > 0`.
    pub fn laplace(op: &SpectralOperator, lambda: f64, quad: &QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter { name: "lambda", reason: "must be positive" });
        }
        Self::new(
            op,
            LaplaceRule::new(lambda, quad.time_nodes, quad.time_transform),
            GaussianNodes::new(op.dim(), quad),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &GaussianNodes {
        &self.nodes
    }

    pub fn time_count(&self) -> usize {
        self.weights.len()
    }

    /// Per-node values `Σ_j W_j g(y_ij)` and, if `grad` is given, per-node
    /// gradient weights `Σ_j W_j g(y_ij) (Λ_{t_j})_k z_ik` laid out `[i * dim + k]`.
    pub fn node_values<G: FnMut(&[f64]) -> f64>(
        &self,
        x: &[f64],
        mut g: G,
        values: &mut [f64],
        mut grad: Option<&mut [f64]>,
    ) {
        let d = self.dim;
        let mut y = vec![0.0; d];
        let mut base = vec![0.0; d];
        if let Some(gr) = grad.as_deref_mut() {
            gr.fill(0.0);
        }
        values.fill(0.0);
        for j in 0..self.weights.len() {
            let row = j * d;
            for k in 0..d {
                base[k] = self.decay[row + k] * x[k];
            }
            let w = self.weights[j];
            for i in 0..self.nodes.len() {
                let z = self.nodes.node(i);
                for k in 0..d {
                    y[k] = base[k] + self.spread[row + k] * z[k];
                }
                let v = w * g(&y);
                values[i] += v;
                if let Some(gr) = grad.as_deref_mut() {
                    for k in 0..d {
                        gr[i * d + k] += v * self.lambda_t[row + k] * z[k];
                    }
                }
            }
        }
    }

    /// Quadrature sum of the smoothed value and gradient without error bars.
    pub fn value_and_gradient<G: FnMut(&[f64]) -> f64>(&self, x: &[f64], mut g: G, grad: &mut [f64]) -> f64 {
        let d = self.dim;
        let mut y = vec![0.0; d];
        let mut base = vec![0.0; d];
        let mut acc = vec![0.0; d];
        grad.fill(0.0);
        let mut value = 0.0;
        for j in 0..self.weights.len() {
            let row = j * d;
            for k in 0..d {
                base[k] = self.decay[row + k] * x[k];
            }
            let mut vj = 0.0;
            acc.fill(0.0);
            for i in 0..self.nodes.len() {
                let z = self.nodes.node(i);
                for k in 0..d {
                    y[k] = base[k] + self.spread[row + k] * z[k];
                }
                let v = self.nodes.weight(i) * g(&y);
                vj += v;
                for k in 0..d {
                    acc[k] += v * z[k];
                }
            }
            let w = self.weights[j];
            value += w * vj;
            for k in 0..d {
                grad[k] += w * self.lambda_t[row + k] * acc[k];
            }
        }
        value
    }

    pub fn value<G: FnMut(&[f64]) -> f64>(&self, x: &[f64], g: G) -> Estimate {
        let mut values = vec![0.0; self.nodes.len()];
        self.node_values(x, g, &mut values, None);
        self.nodes.estimate(&values)
    }

    /// Value and every gradient component, each with a standard error.
    pub fn value_and_gradient_estimates<G: FnMut(&[f64]) -> f64>(&self, x: &[f64], g: G) -> (Estimate, Vec<Estimate>) {
        let n = self.nodes.len();
        let d = self.dim;
        let mut values = vec![0.0; n];
        let mut grad = vec![0.0; n * d];
        self.node_values(x, g, &mut values, Some(&mut grad));
        let mut comps = Vec::with_capacity(d);
        let mut col = vec![0.0; n];
        for k in 0..d {
            for i in 0..n {
                col[i] = grad[i * d + k];
            }
            comps.push(self.nodes.estimate(&col));
        }
        (self.nodes.estimate(&values), comps)
    }

    /// `⟨∇, h⟩` with a standard error.
    pub fn directional<G: FnMut(&[f64]) -> f64>(&self, x: &[f64], g: G, h: &[f64]) -> Estimate {
        let n = self.nodes.len();
        let d = self.dim;
        let mut values = vec![0.0; n];
        let mut grad = vec![0.0; n * d];
        self.node_values(x, g, &mut values, Some(&mut grad));
        let dir: Vec<f64> = (0..n).map(|i| math::dot(&grad[i * d..(i + 1) * d], h)).collect();
        self.nodes.estimate(&dir)
    }
}

fn check_state(op: &SpectralOperator, x: &[f64]) -> Result<()> {
    if x.len() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: x.len() });
    }
    Ok(())
}

/// `R_tφ(x)`; `t = 0` returns `φ(x)` exactly.
pub fn apply_rt<F: ScalarField + ?Sized>(
    op: &SpectralOperator,
    phi: &F,
    t: f64,
    x: &[f64],
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    check_state(op, x)?;
    if t == 0.0 {
        return Ok(Estimate::exact(phi.eval(x)));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidTime { value: t, requirement: "non-negative" });
    }
    Ok(Smoother::at_time(op, t, quad)?.value(x, |y| phi.eval(y)))
}

/// `⟨DR_tφ(x), h⟩ = E[φ(e^{tA}x + Q_t^{1/2}Z) ⟨Λ_t h, Z⟩]`.
pub fn gradient_rt<F: ScalarField + ?Sized>(
    op: &SpectralOperator,
    phi: &F,
    t: f64,
    x: &[f64],
    h: &[f64],
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    check_state(op, x)?;
    check_state(op, h)?;
    if !(t > 0.0) {
        return Err(Error::InvalidTime { value: t, requirement: "strictly positive" });
    }
    if math::norm(h) == 0.0 {
        return Err(Error::InvalidParameter { name: "h", reason: "direction must be nonzero" });
    }
    Ok(Smoother::at_time(op, t, quad)?.directional(x, |y| phi.eval(y), h))
}

/// `(λ − L)^{−1}φ(x)`.
pub fn resolvent<F: ScalarField + ?Sized>(
    op: &SpectralOperator,
    phi: &F,
    lambda: f64,
    x: &[f64],
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    check_state(op, x)?;
    Ok(Smoother::laplace(op, lambda, quad)?.value(x, |y| phi.eval(y)))
}

/// `⟨D(λ − L)^{−1}φ(x), h⟩`, the time integral of [`gradient_rt`].
pub fn resolvent_gradient<F: ScalarField + ?Sized>(
    op: &SpectralOperator,
    phi: &F,
    lambda: f64,
    x: &[f64],
    h: &[f64],
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    check_state(op, x)?;
    check_state(op, h)?;
    Ok(Smoother::laplace(op, lambda, quad)?.directional(x, |y| phi.eval(y), h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ConstantField, CoordinateField, FnField, Smoothness};

    fn op2() -> SpectralOperator {
        SpectralOperator::new(vec![1.0, 4.0], 0.5).unwrap()
    }

    #[test]
    fn constants_are_exact() {
        let q = QuadratureSpec::monte_carlo(1000, 16, 1);
        let v = apply_rt(&op2(), &ConstantField(1.0), 0.3, &[0.2, 0.1], &q).unwrap();
        assert!((v.value - 1.0).abs() < 1e-14 && v.std_error < 1e-14);
        let g = gradient_rt(&op2(), &ConstantField(1.0), 0.3, &[0.2, 0.1], &[1.0, 0.0], &q).unwrap();
        assert!(g.value.abs() < 1e-14);
        let r = resolvent(&op2(), &ConstantField(1.0), 3.0, &[0.2, 0.1], &q).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn moments_under_hermite_are_exact() {
        let q = QuadratureSpec::hermite(6, 48);
        let x = [0.7, -0.4];
        let t = 0.25;
        let v = apply_rt(&op2(), &CoordinateField(1), t, &x, &q).unwrap();
        assert!((v.value - (-4.0 * t).exp() * x[1]).abs() < 1e-13);
        let sq = FnField::new(|y: &[f64]| y[0] * y[0], f64::INFINITY, Smoothness::Smooth);
        let v = apply_rt(&op2(), &sq, t, &x, &q).unwrap();
        let want = (-2.0 * t).exp() * x[0] * x[0] + q_coefficient(1.0, t);
        assert!((v.value - want).abs() < 1e-13);
        let g = gradient_rt(&op2(), &CoordinateField(0), t, &x, &[1.0, 0.0], &q).unwrap();
        assert!((g.value - (-t).exp()).abs() < 1e-13);
        let r = resolvent(&op2(), &CoordinateField(1), 2.0, &x, &q).unwrap();
        assert!((r.value - x[1] / 6.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn exp_spaced_rule_integrates_singular_profile() {
        // ∫ e^{−λt} t^{−1/2} dt = √(π/λ)
        for transform in [TimeTransform::SquareRoot, TimeTransform::ExpSpaced] {
            let r = LaplaceRule::new(2.0, 64, transform);
            let s: f64 = r.times.iter().zip(&r.weights).map(|(t, w)| w / t.sqrt()).sum();
            assert!((s - (core::f64::consts::PI / 2.0).sqrt()).abs() < 1e-4, "{transform:?} {s}");
        }
    }
}
