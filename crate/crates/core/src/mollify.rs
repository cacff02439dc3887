//! Smooth approximations of measurable drifts.
//!
//! [`MollifiedDrift`] realizes `B_n(x) = ∫ B(e^{A/n}x + y) N(0, Q_{1/n})(dy)`
//! by self-normalized importance sampling against a fixed reference cloud,
//! so `B_n` is a deterministic smooth function of `x`, exact on constants and
//! a convex combination of drift values (hence `‖B_n‖_0 ≤ ‖B‖_0`).
//! [`TabulatedDrift`] caches any drift on a spline grid for cheap path
//! evaluation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{DriftField, Smoothness};
use crate::grid::{Axis, TensorGrid, TensorSpline};
use crate::math;
use crate::rng::{domain, NormalStream};
use crate::spectrum::{q_coefficient, SpectralOperator};
use crate::stats::Estimate;

pub struct MollifiedDrift<D> {
    inner: D,
    dim: usize,
    /// `e^{−λ_k/n}`.
    decay: Vec<f64>,
    /// `1 / (2 q_k(1/n))`.
    precision: Vec<f64>,
    /// Reference samples, `[i * dim + k]`.
    cloud: Vec<f64>,
    /// `B(y_i)`, same layout.
    values: Vec<f64>,
    /// `log` reference density (up to a constant).
    log_ref: Vec<f64>,
    bound: f64,
    level: usize,
}

impl<D: DriftField> MollifiedDrift<D> {
    /// `n ≥ 1` is the mollification level; `samples` the size of the
    /// reference cloud.
    pub fn new(op: &SpectralOperator, inner: D, n: usize, samples: usize, seed: u64) -> Result<Self> {
        let dim = op.dim();
        if inner.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: inner.dim() });
        }
        if n == 0 || samples == 0 {
            return Err(Error::InvalidParameter { name: "n", reason: "level and sample count must be at least 1" });
        }
        let h = 1.0 / n as f64;
        let decay: Vec<f64> = op.eigenvalues().iter().map(|l| math::exp(-l * h)).collect();
        let q: Vec<f64> = op.eigenvalues().iter().map(|&l| q_coefficient(l, h)).collect();
        let std = op.invariant_std();
        // Reference spread covers means up to three invariant deviations.
        let spread: Vec<f64> =
            (0..dim).map(|k| math::sqrt(q[k] + (decay[k] * 3.0 * std[k]) * (decay[k] * 3.0 * std[k]))).collect();
        let mut cloud = Vec::with_capacity(samples * dim);
        let mut values = vec![0.0; samples * dim];
        let mut log_ref = Vec::with_capacity(samples);
        for i in 0..samples {
            let mut s = NormalStream::new(seed, domain::MOLLIFIER, i as u64);
            let mut lr = 0.0;
            for k in 0..dim {
                let z = s.normal();
                cloud.push(spread[k] * z);
                lr -= 0.5 * z * z;
            }
            log_ref.push(lr);
            inner.eval_into(&cloud[i * dim..(i + 1) * dim], &mut values[i * dim..(i + 1) * dim]);
        }
        let precision = q.iter().map(|v| 0.5 / v).collect();
        let bound = inner.sup_norm();
        Ok(Self { inner, dim, decay, precision, cloud, values, log_ref, bound, level: n })
    }

    pub fn inner(&self) -> &D {
        &self.inner
    }

    pub fn level(&self) -> usize {
        self.level
    }

    fn weights(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let n = self.log_ref.len();
        let mut lw = Vec::with_capacity(n);
        let mut max = f64::NEG_INFINITY;
        for i in 0..n {
            let y = &self.cloud[i * d..(i + 1) * d];
            let mut acc = -self.log_ref[i];
            for k in 0..d {
                let r = y[k] - self.decay[k] * x[k];
                acc -= r * r * self.precision[k];
            }
            max = max.max(acc);
            lw.push(acc);
        }
        lw.iter().map(|v| math::exp(v - max)).collect()
    }

    /// Each component with its delta-method standard error.
    pub fn eval_with_error(&self, x: &[f64]) -> Vec<Estimate> {
        let w = self.weights(x);
        let d = self.dim;
        let n = w.len();
        let mut col = vec![0.0; n];
        (0..d)
            .map(|k| {
                for i in 0..n {
                    col[i] = self.values[i * d + k];
                }
                Estimate::from_weighted(&col, &w)
            })
            .collect()
    }

    /// Effective sample size of the importance weights at `x`.
    pub fn effective_samples(&self, x: &[f64]) -> f64 {
        let w = self.weights(x);
        let s: f64 = w.iter().sum();
        let s2: f64 = w.iter().map(|v| v * v).sum();
        s * s / s2
    }
}

impl<D: DriftField> DriftField for MollifiedDrift<D> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let w = self.weights(x);
        let d = self.dim;
        let total: f64 = w.iter().sum();
        let reference = &self.values[..d];
        out.fill(0.0);
        for (i, wi) in w.iter().enumerate() {
            for k in 0..d {
                out[k] += wi * (self.values[i * d + k] - reference[k]);
            }
        }
        for k in 0..d {
            out[k] = reference[k] + out[k] / total;
        }
        let norm = math::norm(out);
        // Rounding can push a convex combination a hair past the bound.
        if norm > self.bound {
            out.iter_mut().for_each(|v| *v *= self.bound / norm);
        }
    }
    fn sup_norm(&self) -> f64 {
        self.bound
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }
}

/// A drift interpolated componentwise on a tensor spline grid and
/// projected back onto the ball of its declared bound.
#[derive(Debug, Clone)]
pub struct TabulatedDrift {
    components: Vec<TensorSpline>,
    bound: f64,
    smoothness: Smoothness,
}

impl TabulatedDrift {
    pub fn new<D: DriftField + ?Sized>(drift: &D, grid: TensorGrid) -> Result<Self> {
        let d = drift.dim();
        if grid.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: grid.dim() });
        }
        let n = grid.len();
        let mut table = vec![vec![0.0; n]; d];
        let mut p = vec![0.0; d];
        let mut out = vec![0.0; d];
        for i in 0..n {
            grid.point(i, &mut p);
            drift.eval_into(&p, &mut out);
            for k in 0..d {
                table[k][i] = out[k];
            }
        }
        let components = table
            .iter()
            .map(|vals| TensorSpline::fit(grid.clone(), vals))
            .collect::<Result<Vec<_>>>()?;
        let smoothness = match drift.smoothness() {
            Smoothness::Smooth => Smoothness::Smooth,
            _ => Smoothness::Lipschitz,
        };
        Ok(Self { components, bound: drift.sup_norm(), smoothness })
    }

    /// Tabulate on `[−width·σ_k, width·σ_k]` per mode with `nodes` points,
    /// `σ_k` the invariant standard deviation.
    pub fn on_invariant_box<D: DriftField + ?Sized>(
        op: &SpectralOperator,
        drift: &D,
        nodes: usize,
        width: f64,
    ) -> Result<Self> {
        let axes = op
            .invariant_std()
            .iter()
            .map(|s| Axis::new(-width * s, width * s, nodes))
            .collect::<Result<Vec<_>>>()?;
        Self::new(drift, TensorGrid::new(axes))
    }
}

impl DriftField for TabulatedDrift {
    fn dim(&self) -> usize {
        self.components.len()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, s) in out.iter_mut().zip(&self.components) {
            *o = s.eval(x);
        }
        let norm = math::norm(out);
        if norm > self.bound {
            out.iter_mut().for_each(|v| *v *= self.bound / norm);
        }
    }
    fn sup_norm(&self) -> f64 {
        self.bound
    }
    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drifts::{DirichletKind, SineDrift};
    use crate::field::ConstantDrift;

    #[test]
    fn constants_are_exact() {
        let op = SpectralOperator::new(vec![1.0, 4.0], 0.5).unwrap();
        let b = MollifiedDrift::new(&op, ConstantDrift(vec![0.3, -0.7]), 3, 500, 1).unwrap();
        assert_eq!(b.eval(&[0.4, -2.0]), vec![0.3, -0.7]);
    }

    #[test]
    fn sine_matches_characteristic_function() {
        let op = SpectralOperator::new(vec![1.0], 0.5).unwrap();
        for n in [1usize, 4] {
            let b = MollifiedDrift::new(&op, SineDrift { dim: 1, amplitude: 1.0 }, n, 20_000, 7).unwrap();
            let h = 1.0 / n as f64;
            for x in [-1.0, 0.2, 0.9] {
                let want = (-q_coefficient(1.0, h) / 2.0).exp() * ((-h).exp() * x).sin();
                let e = b.eval_with_error(&[x])[0];
                assert!(e.agrees_with(want, 4.0, 0.0), "n={n} x={x} {e:?} {want}");
            }
        }
    }

    #[test]
    fn bound_is_preserved() {
        let op = SpectralOperator::new(vec![1.0, 4.0, 9.0], 0.5).unwrap();
        let raw = crate::drifts::dirichlet_drift(&DirichletKind::Composite { lambda1: 1.0, tail: vec![0.5, 0.5] })
            .unwrap();
        let b = MollifiedDrift::new(&op, raw, 2, 2000, 3).unwrap();
        let mut s = NormalStream::new(5, 0, 0);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..3).map(|_| 2.0 * s.normal()).collect();
            assert!(math::norm(&b.eval(&x)) <= b.sup_norm());
        }
        let t = TabulatedDrift::on_invariant_box(&op, &b, 9, 4.0).unwrap();
        let x = [0.1, -0.2, 0.05];
        let (u, v) = (b.eval(&x), t.eval(&x));
        assert!(math::distance(&u, &v) < 0.1, "{u:?} {v:?}");
    }
}
