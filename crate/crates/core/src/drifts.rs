//! Example drifts: the Dirichlet function and its infinite-dimensional
//! variants, plus smooth and discontinuous bounded fields used as a test
//! corpus.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{DriftField, Smoothness};
use crate::math;

/// Floating-point states are always rational; a state counts as rational
/// when a continued-fraction convergent `p/q` with `q ≤ max_denominator`
/// reproduces it to `tolerance · max(1, |x|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalDetector {
    pub max_denominator: u64,
    pub tolerance: f64,
}

impl Default for RationalDetector {
    fn default() -> Self {
        Self { max_denominator: 1 << 16, tolerance: 1e-14 }
    }
}

impl RationalDetector {
    /// The reconstructed fraction `(p, q)`, if any.
    pub fn detect(&self, x: f64) -> Option<(i64, u64)> {
        if !x.is_finite() {
            return None;
        }
        let tol = self.tolerance * x.abs().max(1.0);
        let (mut p0, mut q0, mut p1, mut q1) = (0.0f64, 1.0f64, 1.0f64, 0.0f64);
        let mut r = x;
        for _ in 0..64 {
            let a = math::floor(r);
            let (p2, q2) = (a * p1 + p0, a * q1 + q0);
            if q2 > self.max_denominator as f64 {
                return None;
            }
            if (x - p2 / q2).abs() <= tol {
                return Some((p2 as i64, q2 as u64));
            }
            let frac = r - a;
            if frac == 0.0 {
                return None;
            }
            r = 1.0 / frac;
            (p0, q0, p1, q1) = (p1, q1, p2, q2);
        }
        None
    }

    pub fn is_rational(&self, x: f64) -> bool {
        self.detect(x).is_some()
    }

    /// `b_Dir(x)`: 0 on detected rationals, 1 elsewhere.
    pub fn dirichlet(&self, x: f64) -> f64 {
        if self.is_rational(x) {
            0.0
        } else {
            1.0
        }
    }
}

/// `b_Dir(x)` with the default detector.
pub fn b_dir(x: f64) -> f64 {
    RationalDetector::default().dirichlet(x)
}

/// The scalar Dirichlet drift on a one-mode space.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DirichletDrift {
    pub detector: RationalDetector,
}

impl DriftField for DirichletDrift {
    fn dim(&self) -> usize {
        1
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.detector.dirichlet(x[0]);
    }
    fn eval_generic_into(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
    }
    fn sup_norm(&self) -> f64 {
        1.0
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Measurable
    }
}

/// Positive weights for the product Dirichlet drift.
#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Explicit(Vec<f64>),
    /// `α_n = c · n^{−p}`, square summable iff `p > 1/2`.
    PowerLaw { c: f64, p: f64, m: usize },
}

impl Weights {
    fn resolve(&self) -> Result<Vec<f64>> {
        let alphas = match self {
            Weights::Explicit(a) => a.clone(),
            Weights::PowerLaw { c, p, m } => {
                if !(*p > 0.5) {
                    return Err(Error::InvalidWeights);
                }
                (1..=*m).map(|n| c * math::powf(n as f64, -p)).collect()
            }
        };
        if alphas.is_empty() || alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidWeights);
        }
        Ok(alphas)
    }
}

/// `Σ_n α_n b_Dir(x_n) e_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletProduct {
    alphas: Vec<f64>,
    bound: f64,
    pub detector: RationalDetector,
}

impl DirichletProduct {
    pub fn new(weights: &Weights) -> Result<Self> {
        let alphas = weights.resolve()?;
        let bound = math::norm(&alphas);
        Ok(Self { alphas, bound, detector: RationalDetector::default() })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }
}

impl DriftField for DirichletProduct {
    fn dim(&self) -> usize {
        self.alphas.len()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, a), v) in out.iter_mut().zip(&self.alphas).zip(x) {
            *o = a * self.detector.dirichlet(*v);
        }
    }
    fn eval_generic_into(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.alphas);
    }
    fn sup_norm(&self) -> f64 {
        self.bound
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Measurable
    }
}

/// `B(x) = ((λ_1x_1 ∧ 1) ∨ −1 + b_Dir(x_1)) e_1 + B̃(x_2, x_3, …)`.
///
/// Inside `|x_1| ≤ 1/λ_1` the first component of `Ax + B(x)` is exactly
/// `b_Dir(x_1)`. The clamp from below keeps the drift bounded.
pub struct CompositeDrift {
    lambda1: f64,
    tail: Box<dyn DriftField>,
    pub detector: RationalDetector,
}

impl CompositeDrift {
    pub fn new(lambda1: f64, tail: Box<dyn DriftField>) -> Result<Self> {
        if !(lambda1 > 0.0) {
            return Err(Error::InvalidParameter { name: "lambda1", reason: "must be positive" });
        }
        Ok(Self { lambda1, tail, detector: RationalDetector::default() })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    fn first(&self, x1: f64, dirichlet: f64) -> f64 {
        (self.lambda1 * x1).clamp(-1.0, 1.0) + dirichlet
    }
}

impl DriftField for CompositeDrift {
    fn dim(&self) -> usize {
        1 + self.tail.dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.first(x[0], self.detector.dirichlet(x[0]));
        self.tail.eval_into(&x[1..], &mut out[1..]);
    }
    fn eval_generic_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.first(x[0], 1.0);
        self.tail.eval_generic_into(&x[1..], &mut out[1..]);
    }
    fn sup_norm(&self) -> f64 {
        let t = self.tail.sup_norm();
        math::sqrt(4.0 + t * t)
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Measurable
    }
}

/// `B_k(x) = (a/√m) sin(x_k + ½x_{k+1})` with cyclic coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineDrift {
    pub dim: usize,
    pub amplitude: f64,
}

impl DriftField for SineDrift {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let m = self.dim;
        let c = self.amplitude / math::sqrt(m as f64);
        for k in 0..m {
            let coupled = if m > 1 { 0.5 * x[(k + 1) % m] } else { 0.0 };
            out[k] = c * math::sin(x[k] + coupled);
        }
    }
    fn sup_norm(&self) -> f64 {
        self.amplitude.abs()
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }
}

/// `B_k(x) = (a/√m) tanh(2x_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanhDrift {
    pub dim: usize,
    pub amplitude: f64,
}

impl DriftField for TanhDrift {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let c = self.amplitude / math::sqrt(self.dim as f64);
        for (o, v) in out.iter_mut().zip(x) {
            *o = c * math::tanh(2.0 * v);
        }
    }
    fn sup_norm(&self) -> f64 {
        self.amplitude.abs()
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }
}

/// `B_k(x) = α_k sign(x_k)`, discontinuous on the coordinate hyperplanes.
#[derive(Debug, Clone, PartialEq)]
pub struct SignDrift {
    pub alphas: Vec<f64>,
}

impl DriftField for SignDrift {
    fn dim(&self) -> usize {
        self.alphas.len()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, a), v) in out.iter_mut().zip(&self.alphas).zip(x) {
            *o = if *v > 0.0 {
                *a
            } else if *v < 0.0 {
                -*a
            } else {
                0.0
            };
        }
    }
    fn sup_norm(&self) -> f64 {
        math::norm(&self.alphas)
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Measurable
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirichletKind {
    Scalar,
    Product(Weights),
    /// `λ_1` and tail weights `α_2, …` for a sign tail.
    Composite { lambda1: f64, tail: Vec<f64> },
}

pub fn dirichlet_drift(kind: &DirichletKind) -> Result<Box<dyn DriftField>> {
    Ok(match kind {
        DirichletKind::Scalar => Box::new(DirichletDrift::default()),
        DirichletKind::Product(w) => Box::new(DirichletProduct::new(w)?),
        DirichletKind::Composite { lambda1, tail } => {
            if tail.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidWeights);
            }
            Box::new(CompositeDrift::new(*lambda1, Box::new(SignDrift { alphas: tail.clone() }))?)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rational_detection() {
        let d = RationalDetector::default();
        assert_eq!(d.detect(0.5), Some((1, 2)));
        assert_eq!(d.detect(-0.75), Some((-3, 4)));
        assert_eq!(d.detect(3.0), Some((3, 1)));
        assert_eq!(d.detect(1.0 / 3.0), Some((1, 3)));
        assert_eq!(d.detect(12345.0 / 65536.0), Some((12345, 65536)));
        assert!(d.detect(2f64.sqrt()).is_none());
        assert!(d.detect(core::f64::consts::PI).is_none());
        assert_eq!(b_dir(0.5), 0.0);
        assert_eq!(b_dir(2f64.sqrt()), 1.0);
        // generic floats are rarely detected
        let mut s = crate::rng::NormalStream::new(1, 0, 0);
        let hits = (0..100_000).filter(|_| d.is_rational(s.normal())).count();
        assert!(hits < 20, "{hits}");
    }

    #[test]
    fn product_bound_and_weights() {
        let b = DirichletProduct::new(&Weights::PowerLaw { c: 1.0, p: 1.0, m: 5 }).unwrap();
        let x = [0.5, 2f64.sqrt(), 0.25, 3f64.sqrt(), 0.1];
        let v = b.eval(&x);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 0.5);
        assert!(math::norm(&v) <= b.sup_norm());
        assert!(DirichletProduct::new(&Weights::PowerLaw { c: 1.0, p: 0.5, m: 5 }).is_err());
        assert!(DirichletProduct::new(&Weights::Explicit(vec![1.0, -1.0])).is_err());
    }

    #[test]
    fn composite_cancellation() {
        let b = dirichlet_drift(&DirichletKind::Composite { lambda1: 1.0, tail: vec![0.3, 0.2] }).unwrap();
        let x = [0.3, 1.0, -1.0];
        let v = b.eval(&x);
        // −λ_1 x_1 + B_1(x) = b_Dir(0.3) = 0
        assert!((-0.3 + v[0] - b_dir(0.3)).abs() < 1e-15);
        assert_eq!(&v[1..], &[0.3, -0.2]);
        let y = [0.3 + 1e-3 * 2f64.sqrt(), 0.0, 0.0];
        assert!((-y[0] + b.eval(&y)[0] - 1.0).abs() < 1e-15);
        let mut g = [0.0; 3];
        b.eval_generic_into(&x, &mut g);
        assert!((g[0] - 1.3).abs() < 1e-15);
    }
}
