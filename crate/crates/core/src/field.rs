//! Scalar test functions `φ: H → ℝ` and drifts `B: H → H` on the truncated
//! space.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Measurable,
    Lipschitz,
    Smooth,
}

pub trait ScalarField: Sync {
    fn eval(&self, x: &[f64]) -> f64;

    /// `‖φ‖_0`, or `f64::INFINITY` when no finite bound is declared.
    fn sup_norm(&self) -> f64;

    fn smoothness(&self) -> Smoothness;

    /// Analytic gradient, when known.
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

pub trait DriftField: Sync {
    fn dim(&self) -> usize;

    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    /// `‖B‖_0`.
    fn sup_norm(&self) -> f64;

    fn smoothness(&self) -> Smoothness;

    /// A representative of the drift's equivalence class that is blind to
    /// Lebesgue-null sets (for example the Dirichlet function seen as the
    /// constant 1). Defaults to the pointwise rule.
    fn eval_generic_into(&self, x: &[f64], out: &mut [f64]) {
        self.eval_into(x, out)
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        eval_checked(self, x, &mut out);
        out
    }

    /// `B^{(i)}(x) = ⟨B(x), e_i⟩`.
    fn component(&self, x: &[f64], i: usize) -> f64 {
        self.eval(x)[i]
    }
}

/// Evaluate `B(x)`, asserting `|B(x)| ≤ ‖B‖_0` in debug builds.
#[inline]
pub fn eval_checked<D: DriftField + ?Sized>(b: &D, x: &[f64], out: &mut [f64]) {
    b.eval_into(x, out);
    debug_assert!(
        math::norm(out) <= b.sup_norm() * (1.0 + 1e-9) + 1e-12,
        "drift exceeds its declared bound: |B(x)| = {} > {}",
        math::norm(out),
        b.sup_norm()
    );
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
    fn sup_norm(&self) -> f64 {
        (**self).sup_norm()
    }
    fn smoothness(&self) -> Smoothness {
        (**self).smoothness()
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).gradient(x)
    }
}

impl<T: ScalarField + ?Sized> ScalarField for Box<T> {
    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
    fn sup_norm(&self) -> f64 {
        (**self).sup_norm()
    }
    fn smoothness(&self) -> Smoothness {
        (**self).smoothness()
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).gradient(x)
    }
}

impl<T: DriftField + ?Sized> DriftField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).eval_into(x, out)
    }
    fn sup_norm(&self) -> f64 {
        (**self).sup_norm()
    }
    fn smoothness(&self) -> Smoothness {
        (**self).smoothness()
    }
    fn eval_generic_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).eval_generic_into(x, out)
    }
}

impl<T: DriftField + ?Sized> DriftField for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).eval_into(x, out)
    }
    fn sup_norm(&self) -> f64 {
        (**self).sup_norm()
    }
    fn smoothness(&self) -> Smoothness {
        (**self).smoothness()
    }
    fn eval_generic_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).eval_generic_into(x, out)
    }
}

/// A scalar field given by a closure.
pub struct FnField<F, G = fn(&[f64]) -> Vec<f64>> {
    f: F,
    grad: Option<G>,
    bound: f64,
    smoothness: Smoothness,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnField<F> {
    pub fn new(f: F, bound: f64, smoothness: Smoothness) -> Self {
        Self { f, grad: None, bound, smoothness }
    }
}

impl<F, G> FnField<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn with_gradient(f: F, grad: G, bound: f64, smoothness: Smoothness) -> Self {
        Self { f, grad: Some(grad), bound, smoothness }
    }
}

impl<F, G> ScalarField for FnField<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn sup_norm(&self) -> f64 {
        self.bound
    }
    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField(pub f64);

impl ScalarField for ConstantField {
    fn eval(&self, _x: &[f64]) -> f64 {
        self.0
    }
    fn sup_norm(&self) -> f64 {
        self.0.abs()
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; x.len()])
    }
}

/// `x ↦ ⟨x, e_k⟩`; unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateField(pub usize);

impl ScalarField for CoordinateField {
    fn eval(&self, x: &[f64]) -> f64 {
        x[self.0]
    }
    fn sup_norm(&self) -> f64 {
        f64::INFINITY
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut g = vec![0.0; x.len()];
        g[self.0] = 1.0;
        Some(g)
    }
}

/// The scalar field `B^{(i)} = ⟨B, e_i⟩`.
pub struct ComponentField<'a, D: ?Sized> {
    pub drift: &'a D,
    pub index: usize,
}

impl<D: DriftField + ?Sized> ScalarField for ComponentField<'_, D> {
    fn eval(&self, x: &[f64]) -> f64 {
        let mut out = vec![0.0; self.drift.dim()];
        self.drift.eval_into(x, &mut out);
        out[self.index]
    }
    fn sup_norm(&self) -> f64 {
        self.drift.sup_norm()
    }
    fn smoothness(&self) -> Smoothness {
        self.drift.smoothness()
    }
}

/// A drift given by a closure writing into the output buffer.
pub struct FnDrift<F> {
    f: F,
    dim: usize,
    bound: f64,
    smoothness: Smoothness,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> FnDrift<F> {
    pub fn new(dim: usize, bound: f64, smoothness: Smoothness, f: F) -> Self {
        Self { f, dim, bound, smoothness }
    }
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> DriftField for FnDrift<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
    fn sup_norm(&self) -> f64 {
        self.bound
    }
    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantDrift(pub Vec<f64>);

impl DriftField for ConstantDrift {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn eval_into(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }
    fn sup_norm(&self) -> f64 {
        math::norm(&self.0)
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroDrift(pub usize);

impl DriftField for ZeroDrift {
    fn dim(&self) -> usize {
        self.0
    }
    fn eval_into(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn sup_norm(&self) -> f64 {
        0.0
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }
}

/// A drift scaled by a constant factor.
pub struct ScaledDrift<D> {
    pub inner: D,
    pub factor: f64,
}

impl<D: DriftField> DriftField for ScaledDrift<D> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.eval_into(x, out);
        out.iter_mut().for_each(|v| *v *= self.factor);
    }
    fn eval_generic_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.eval_generic_into(x, out);
        out.iter_mut().for_each(|v| *v *= self.factor);
    }
    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm() * self.factor.abs()
    }
    fn smoothness(&self) -> Smoothness {
        self.inner.smoothness()
    }
}
