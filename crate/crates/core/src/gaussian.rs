//! Finite-dimensional Gaussian measures in the eigenbasis: the invariant
//! measure `μ = N(0, Q)`, the OU transition kernel `N(e^{tA}x, Q_t)`, and the
//! `L^{p'}(μ)` norm of the transition density `k_t(0, ·)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math;
use crate::quadrature;
use crate::rng::{domain, NormalStream};
use crate::spectrum::{SpectralOperator, Time};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    mean: Vec<f64>,
    variances: Vec<f64>,
}

impl GaussianMeasure {
    pub fn new(mean: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if mean.len() != variances.len() {
            return Err(Error::DimensionMismatch { expected: mean.len(), got: variances.len() });
        }
        if variances.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter { name: "variances", reason: "must be finite and non-negative" });
        }
        Ok(Self { mean, variances })
    }

    /// `μ = N(0, −½A^{−1})`.
    pub fn invariant(op: &SpectralOperator) -> Self {
        Self {
            mean: vec![0.0; op.dim()],
            variances: op.covariance_qt(Time::Infinity).expect("infinity is valid").coefficients,
        }
    }

    /// `N(e^{tA}x, Q_t)`.
    pub fn ou_transition(op: &SpectralOperator, t: f64, x: &[f64]) -> Result<Self> {
        let mean = op.semigroup_apply(t, x)?;
        let variances = op.covariance_qt(t)?.coefficients;
        Ok(Self { mean, variances })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Draw `n` independent samples. Draw `i` only depends on `(seed, i)`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        (0..n).map(|i| self.sample_one(seed, i as u64)).collect()
    }

    pub fn sample_one(&self, seed: u64, index: u64) -> Vec<f64> {
        let mut s = NormalStream::new(seed, domain::GAUSSIAN_SAMPLE, index);
        self.mean
            .iter()
            .zip(&self.variances)
            .map(|(m, v)| m + math::sqrt(*v) * s.normal())
            .collect()
    }

    /// Log of the Lebesgue density at `y`; every variance must be positive.
    pub fn log_density(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: y.len() });
        }
        let mut acc = 0.0;
        for ((m, v), yk) in self.mean.iter().zip(&self.variances).zip(y) {
            if *v <= 0.0 {
                return Err(Error::InvalidParameter { name: "variances", reason: "degenerate measure has no density" });
            }
            let d = yk - m;
            acc -= d * d / (2.0 * v) + 0.5 * math::ln(2.0 * PI * v);
        }
        Ok(acc)
    }
}

/// `log` of the density of `N(e^{tA}x, Q_t)` at `y`.
pub fn ou_transition_log_density(op: &SpectralOperator, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidTime { value: t, requirement: "strictly positive" });
    }
    GaussianMeasure::ou_transition(op, t, x)?.log_density(y)
}

/// `ln ‖k_t(0,·)‖_{L^{p'}(μ)} = (−½ + 1/(2p'))·ln det(I − e^{2tA}) − (1/(2p'))·ln det(I + (p'−1)e^{2tA})`,
/// accumulated mode by mode in log space.
pub fn kernel_lp_log_norm(op: &SpectralOperator, t: f64, p_prime: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidTime { value: t, requirement: "strictly positive" });
    }
    if !(p_prime >= 1.0) {
        return Err(Error::InvalidParameter { name: "p_prime", reason: "must be at least 1" });
    }
    let a = -0.5 + 0.5 / p_prime;
    let b = -0.5 / p_prime;
    let mut acc = 0.0;
    for &l in op.eigenvalues() {
        let e2 = math::exp(-2.0 * t * l);
        acc += a * math::ln(math::one_minus_exp_neg(2.0 * t * l)) + b * math::ln1p((p_prime - 1.0) * e2);
    }
    Ok(acc)
}

pub fn kernel_lp_norm(op: &SpectralOperator, t: f64, p_prime: f64) -> Result<f64> {
    Ok(math::exp(kernel_lp_log_norm(op, t, p_prime)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrability {
    Finite,
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrabilityReport {
    pub verdict: Integrability,
    /// Fitted log-log slope of the kernel norm as `r → 0`.
    pub slope: f64,
    /// `∫_{r_min}^{T}` of the kernel norm.
    pub integral_estimate: f64,
    /// `−d(½ − 1/(2p'))`, the slope predicted by `1 − e^{−2rλ} ~ 2rλ`.
    pub predicted_slope: f64,
}

/// Options for [`integrability_scan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub r_min: f64,
    /// Upper end of the slope-fitting window.
    pub fit_max: f64,
    pub fit_points: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { r_min: 1e-8, fit_max: 1e-5, fit_points: 16 }
    }
}

/// Decide whether `∫_0^T ‖k_r(0,·)‖_{L^{p'}(μ)} dr` is finite from the small-`r`
/// slope of the kernel norm: finite iff the slope exceeds −1.
pub fn integrability_scan(op: &SpectralOperator, p_prime: f64, horizon: f64) -> Result<IntegrabilityReport> {
    integrability_scan_with(op, p_prime, horizon, ScanOptions::default())
}

pub fn integrability_scan_with(
    op: &SpectralOperator,
    p_prime: f64,
    horizon: f64,
    opts: ScanOptions,
) -> Result<IntegrabilityReport> {
    if !(p_prime > 1.0) {
        return Err(Error::InvalidParameter { name: "p_prime", reason: "must exceed 1" });
    }
    if !(horizon > opts.r_min) {
        return Err(Error::InvalidTime { value: horizon, requirement: "larger than r_min" });
    }
    let n = opts.fit_points.max(2);
    let (l0, l1) = (math::ln(opts.r_min), math::ln(opts.fit_max));
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let lr = l0 + (l1 - l0) * i as f64 / (n - 1) as f64;
        xs.push(lr);
        ys.push(kernel_lp_log_norm(op, math::exp(lr), p_prime)?);
    }
    let (slope, _) = crate::stats::linear_fit(&xs, &ys);
    // r = e^u turns the endpoint singularity into exponential decay.
    let mut integrand = |u: f64| {
        let r = math::exp(u);
        r * math::exp(kernel_lp_log_norm(op, r, p_prime).unwrap_or(f64::NAN))
    };
    let integral_estimate =
        quadrature::adaptive_simpson(&mut integrand, math::ln(opts.r_min), math::ln(horizon), 1e-10, 40);
    let predicted_slope = -(op.dim() as f64) * (0.5 - 0.5 / p_prime);
    let verdict = if slope > -1.0 { Integrability::Finite } else { Integrability::Divergent };
    Ok(IntegrabilityReport { verdict, slope, integral_estimate, predicted_slope })
}
