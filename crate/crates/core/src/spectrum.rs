//! The diagonal operator `A`, its semigroup, the covariances `Q_t` and the
//! smoothing operators `Λ_t = Q_t^{-1/2} e^{tA}`.
//!
//! `A e_k = −λ_k e_k` with `0 < λ_1 ≤ λ_2 ≤ …`, truncated to `m` modes.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::math;
use crate::quadrature;

/// A time argument that may be the infinity sentinel (invariant measure).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Time {
    Finite(f64),
    Infinity,
}

impl From<f64> for Time {
    fn from(t: f64) -> Self {
        if t == f64::INFINITY {
            Time::Infinity
        } else {
            Time::Finite(t)
        }
    }
}

/// Closed-form eigenvalue growth `λ_k = c·k^α`, used for tail analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthLaw {
    pub c: f64,
    pub alpha: f64,
}

impl GrowthLaw {
    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.c * math::powf(k as f64, self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOperator {
    eigenvalues: Vec<f64>,
    delta: f64,
    growth: Option<GrowthLaw>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelRole {
    Semigroup,
    Covariance,
    LambdaT,
}

/// Diagonal coefficients of `e^{tA}`, `Q_t` or `Λ_t` in the eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalKernel {
    pub coefficients: Vec<f64>,
    pub role: KernelRole,
}

impl DiagonalKernel {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.coefficients.iter().zip(x).map(|(c, v)| c * v).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceVerdict {
    Converges,
    Diverges,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceReport {
    pub verdict: TraceVerdict,
    /// `Σ_{k≤m} λ_k^{−(1−δ)}`.
    pub partial_sum: f64,
    /// Integral bound on the tail `Σ_{k>m}`; infinite when divergent, zero
    /// when no growth law is known.
    pub tail_bound: f64,
    /// The verdict only concerns the truncated operator.
    pub truncated: bool,
}

/// `(1 − e^{−2tλ}) / (2λ)`, stable near `t = 0`.
#[inline]
pub fn q_coefficient(lambda: f64, t: f64) -> f64 {
    math::one_minus_exp_neg(2.0 * t * lambda) / (2.0 * lambda)
}

/// `√2 λ^{1/2} e^{−tλ} (1 − e^{−2tλ})^{−1/2}` for `t > 0`.
#[inline]
pub fn lambda_coefficient(lambda: f64, t: f64) -> f64 {
    SQRT_2 * math::sqrt(lambda) * math::exp(-t * lambda) / math::sqrt(math::one_minus_exp_neg(2.0 * t * lambda))
}

/// `(1 − e^{−λt}) / λ`, the exact convolution weight of a constant forcing
/// over a step of length `t`.
#[inline]
pub fn phi_coefficient(lambda: f64, t: f64) -> f64 {
    math::one_minus_exp_neg(lambda * t) / lambda
}

/// `√(2s) e^{−s} (1 − e^{−2s})^{−1/2} · s^ε`, the profile of
/// `t^{1/2+ε} ‖(−A)^ε Λ_t‖` after the substitution `s = λ_k t`.
fn lambda_profile(s: f64, eps: f64) -> f64 {
    SQRT_2 * math::sqrt(s) * math::exp(-s) / math::sqrt(math::one_minus_exp_neg(2.0 * s)) * math::powf(s, eps)
}

/// `C_ε = sup_{s>0} √2 s^{1/2+ε} e^{−s} (1 − e^{−2s})^{−1/2}`, so that
/// `‖(−A)^ε Λ_t‖ ≤ C_ε t^{−1/2−ε}` for every spectrum.
///
/// Computed by a dense log-grid scan on `[1e−8, 50]` refined by
/// golden-section search. For `ε = 0` the supremum is the limit `s → 0`,
/// so the returned value is `1 − O(1e−8)`.
pub fn c_eps(eps: f64) -> f64 {
    quadrature::maximize_log_grid(|s| lambda_profile(s, eps), 1e-8, 50.0, 4001).1
}

/// `C_0`, the constant of the gradient bound `|DR_tφ| ≤ C_0 t^{−1/2} ‖φ‖_0`.
pub fn c0() -> f64 {
    c_eps(0.0)
}

/// `C_{1,0} = C_0 √π`, the constant of `|D(λ − L)^{−1}φ| ≤ C_{1,0} λ^{−1/2} ‖φ‖_0`
/// (Laplace transform of `C_0 t^{−1/2}`).
pub fn c10() -> f64 {
    c0() * math::sqrt(PI)
}

impl SpectralOperator {
    pub fn new(eigenvalues: Vec<f64>, delta: f64) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidParameter { name: "eigenvalues", reason: "at least one mode required" });
        }
        if eigenvalues.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::InvalidParameter { name: "eigenvalues", reason: "must be finite and strictly positive" });
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter { name: "eigenvalues", reason: "must be non-decreasing" });
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter { name: "delta", reason: "must lie in (0, 1)" });
        }
        Ok(Self { eigenvalues, delta, growth: None })
    }

    /// `λ_k = c·k^α` for `k = 1..=m`, with the growth law attached.
    pub fn from_growth(c: f64, alpha: f64, m: usize, delta: f64) -> Result<Self> {
        if !(c > 0.0 && alpha >= 0.0) {
            return Err(Error::InvalidParameter { name: "growth", reason: "need c > 0 and alpha >= 0" });
        }
        let law = GrowthLaw { c, alpha };
        let eig = (1..=m).map(|k| law.eigenvalue(k)).collect();
        Ok(Self::new(eig, delta)?.with_growth(law))
    }

    pub fn with_growth(mut self, growth: GrowthLaw) -> Self {
        self.growth = Some(growth);
        self
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalues[k]
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn growth(&self) -> Option<GrowthLaw> {
        self.growth
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// `e^{tA} x`.
    pub fn semigroup_apply(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        if !(t >= 0.0) {
            return Err(Error::InvalidTime { value: t, requirement: "non-negative" });
        }
        Ok(self.eigenvalues.iter().zip(x).map(|(l, v)| math::exp(-l * t) * v).collect())
    }

    pub fn semigroup(&self, t: f64) -> Result<DiagonalKernel> {
        if !(t >= 0.0) {
            return Err(Error::InvalidTime { value: t, requirement: "non-negative" });
        }
        Ok(DiagonalKernel {
            coefficients: self.eigenvalues.iter().map(|l| math::exp(-l * t)).collect(),
            role: KernelRole::Semigroup,
        })
    }

    /// `Q_t = −½ A^{−1}(I − e^{2tA})`; `Q_∞ = −½ A^{−1}`.
    pub fn covariance_qt(&self, t: impl Into<Time>) -> Result<DiagonalKernel> {
        let coefficients = match t.into() {
            Time::Infinity => self.eigenvalues.iter().map(|l| 0.5 / l).collect(),
            Time::Finite(t) if t >= 0.0 => self.eigenvalues.iter().map(|&l| q_coefficient(l, t)).collect(),
            Time::Finite(t) => return Err(Error::InvalidTime { value: t, requirement: "non-negative" }),
        };
        Ok(DiagonalKernel { coefficients, role: KernelRole::Covariance })
    }

    /// `Λ_t = Q_t^{−1/2} e^{tA}`, defined for `t > 0`.
    pub fn lambda_t_diag(&self, t: f64) -> Result<DiagonalKernel> {
        if !(t > 0.0) {
            return Err(Error::InvalidTime { value: t, requirement: "strictly positive" });
        }
        Ok(DiagonalKernel {
            coefficients: self.eigenvalues.iter().map(|&l| lambda_coefficient(l, t)).collect(),
            role: KernelRole::LambdaT,
        })
    }

    /// Trace-class test for `(−A)^{−1+δ}`: partial sum over the truncation
    /// plus an integral tail bound from the growth law.
    ///
    /// With `asymptotic = true` a growth law is required and the verdict is
    /// `Converges` iff `α(1 − δ) > 1`. Without it the verdict concerns the
    /// finite truncation only and is flagged `truncated`.
    pub fn trace_check(&self, delta: f64, asymptotic: bool) -> Result<TraceReport> {
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidParameter { name: "delta", reason: "must lie in [0, 1)" });
        }
        let exponent = 1.0 - delta;
        let terms: Vec<f64> = self.eigenvalues.iter().map(|l| math::powf(*l, -exponent)).collect();
        // Sum smallest terms first.
        let partial_sum = terms.iter().rev().sum();
        match (self.growth, asymptotic) {
            (None, true) => Err(Error::MissingGrowthLaw),
            (None, false) => Ok(TraceReport {
                verdict: TraceVerdict::Converges,
                partial_sum,
                tail_bound: 0.0,
                truncated: true,
            }),
            (Some(g), _) => {
                let p = g.alpha * exponent;
                let m = self.dim() as f64;
                let (verdict, tail_bound) = if p > 1.0 {
                    (TraceVerdict::Converges, math::powf(g.c, -exponent) * math::powf(m, 1.0 - p) / (p - 1.0))
                } else {
                    (TraceVerdict::Diverges, f64::INFINITY)
                };
                Ok(TraceReport { verdict, partial_sum, tail_bound, truncated: false })
            }
        }
    }

    /// Invariant standard deviations `(2λ_k)^{−1/2}`.
    pub fn invariant_std(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| math::sqrt(0.5 / l)).collect()
    }

    /// The operator restricted to its first `m` modes.
    pub fn truncate(&self, m: usize) -> Result<Self> {
        let eig = self.eigenvalues.iter().take(m).copied().collect();
        let mut out = Self::new(eig, self.delta)?;
        out.growth = self.growth;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn op(eig: &[f64]) -> SpectralOperator {
        SpectralOperator::new(eig.to_vec(), 0.5).unwrap()
    }

    #[test]
    fn semigroup_examples() {
        assert_eq!(op(&[1.0, 4.0]).semigroup_apply(0.0, &[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        let v = op(&[1.0]).semigroup_apply(2f64.ln(), &[1.0]).unwrap()[0];
        assert!((v - 0.5).abs() < 1e-15);
        assert!(op(&[2.0]).semigroup_apply(50.0, &[1.0]).unwrap()[0] < 1e-40);
        assert!(matches!(op(&[1.0]).semigroup_apply(-1.0, &[1.0]), Err(Error::InvalidTime { .. })));
        assert!(matches!(op(&[1.0]).semigroup_apply(1.0, &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn covariance_examples() {
        assert_eq!(op(&[1.0]).covariance_qt(Time::Infinity).unwrap().coefficients, vec![0.5]);
        assert!(op(&[1.0, 3.0, 9.0]).covariance_qt(0.0).unwrap().coefficients.iter().all(|c| *c == 0.0));
        let q = op(&[1.0]).covariance_qt(2f64.ln()).unwrap().coefficients[0];
        assert!((q - 0.375).abs() < 1e-15);
        assert!(op(&[1.0]).covariance_qt(-0.1).is_err());
    }

    #[test]
    fn lambda_t_examples() {
        // e^{-2t} = 1/2
        let t = 0.5 * 2f64.ln();
        let c = op(&[1.0]).lambda_t_diag(t).unwrap().coefficients[0];
        assert!((c - SQRT_2).abs() < 1e-14);
        assert!(op(&[1.0]).lambda_t_diag(100.0).unwrap().coefficients[0] < 1e-40);
        assert!(op(&[1.0]).lambda_t_diag(0.0).is_err());
        for eps in [0.0, 0.2] {
            let mut sup: f64 = 0.0;
            for i in 0..400 {
                let t = 10f64.powf(-8.0 + 10.0 * i as f64 / 399.0);
                let c = op(&[1.0]).lambda_t_diag(t).unwrap().coefficients[0];
                sup = sup.max(t.powf(0.5 + eps) * c);
            }
            assert!(sup.is_finite() && sup <= c_eps(eps) + 1e-12);
        }
    }

    #[test]
    fn constants() {
        let c = c0();
        assert!(c <= 1.0 && c > 1.0 - 1e-7, "C0 = {c}");
        assert!((c10() - PI.sqrt()).abs() < 1e-6);
        // C_eps grows with eps past the s -> 0 endpoint
        assert!(c_eps(0.2) < 1.0 && c_eps(0.2) > 0.5);
    }

    #[test]
    fn trace_examples() {
        let a = SpectralOperator::from_growth(1.0, 2.0, 50, 0.4).unwrap();
        assert_eq!(a.trace_check(0.4, true).unwrap().verdict, TraceVerdict::Converges);
        let b = SpectralOperator::from_growth(1.0, 1.0, 50, 0.4).unwrap();
        assert_eq!(b.trace_check(0.0, true).unwrap().verdict, TraceVerdict::Diverges);
        let plain = SpectralOperator::new(vec![1.0, 2.0], 0.5).unwrap();
        assert_eq!(plain.trace_check(0.0, true), Err(Error::MissingGrowthLaw));
        assert!(plain.trace_check(0.0, false).unwrap().truncated);
    }

    #[test]
    fn basel_partial_sum() {
        let a = SpectralOperator::from_growth(1.0, 2.0, 1_000_000, 0.5).unwrap();
        let r = a.trace_check(0.0, true).unwrap();
        assert!((r.partial_sum - 1.644934).abs() < 1e-5);
        // partial sum plus the integral tail brackets pi^2/6
        assert!(r.partial_sum < PI * PI / 6.0 && r.partial_sum + r.tail_bound >= PI * PI / 6.0);
    }

    proptest! {
        #[test]
        fn semigroup_property(l in 0.01f64..100.0, s in 0.0f64..3.0, t in 0.0f64..3.0, x in -10.0f64..10.0) {
            let a = op(&[l]);
            let two = a.semigroup_apply(s, &a.semigroup_apply(t, &[x]).unwrap()).unwrap()[0];
            let one = a.semigroup_apply(s + t, &[x]).unwrap()[0];
            prop_assert!((two - one).abs() <= 1e-14 * (1.0 + x.abs()));
        }

        #[test]
        fn q_identity_and_monotone(l in 0.01f64..1e4, t in 0.0f64..10.0, dt in 0.0f64..1.0) {
            let q = q_coefficient(l, t);
            let qinf = 0.5 / l;
            let expected = qinf * (1.0 - (-2.0 * t * l).exp());
            prop_assert!((q - expected).abs() <= 1e-14 * qinf + 1e-15 * q);
            prop_assert!(q_coefficient(l, t + dt) >= q);
        }

        #[test]
        fn lambda_t_bounded_by_one(l in 0.01f64..1e4, lt in -8.0f64..2.0) {
            let t = 10f64.powf(lt);
            prop_assert!(t.sqrt() * lambda_coefficient(l, t) <= 1.0 + 1e-12);
        }
    }
}
