//! Tensor-product cubic B-spline interpolation on a box.
//!
//! Each axis carries `n` equispaced nodes; interpolation uses natural end
//! conditions and states outside the box are clamped to its boundary.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        if nodes < 4 || !(hi > lo) {
            return Err(Error::InvalidParameter { name: "axis", reason: "need at least 4 nodes on a nonempty interval" });
        }
        Ok(Self { lo, hi, nodes })
    }

    pub fn pitch(&self) -> f64 {
        (self.hi - self.lo) / (self.nodes - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + self.pitch() * i as f64
    }

    /// Cell index and offset in `[0, 1]`, after clamping.
    fn locate(&self, x: f64) -> (usize, f64, bool) {
        let h = self.pitch();
        let inside = x >= self.lo && x <= self.hi;
        let s = ((x - self.lo) / h).clamp(0.0, (self.nodes - 1) as f64);
        let cell = (math::floor(s) as usize).min(self.nodes - 2);
        (cell, s - cell as f64, inside)
    }
}

/// Box of node coordinates: multi-index `(i_0, …, i_{m−1})` maps to flat
/// index `Σ i_k · stride_k` with the first axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    axes: Vec<Axis>,
}

impl TensorGrid {
    pub fn new(axes: Vec<Axis>) -> Self {
        Self { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.nodes).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut r = flat;
        for (k, a) in self.axes.iter().enumerate() {
            out[k] = a.node(r % a.nodes);
            r /= a.nodes;
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut p = vec![0.0; self.dim()];
        (0..self.len())
            .map(|i| {
                self.point(i, &mut p);
                p.clone()
            })
            .collect()
    }
}

/// Solve the natural-end interpolation system for one line of `n` values;
/// writes `n + 2` coefficients including both ghosts.
fn fit_line(f: &[f64], out: &mut [f64], scratch: &mut [f64]) {
    let n = f.len();
    let c = &mut out[1..n + 1];
    c[0] = f[0];
    c[n - 1] = f[n - 1];
    // Interior: c_{i−1} + 4c_i + c_{i+1} = 6 f_i, i = 1..n−2 (Thomas).
    let m = n - 2;
    if m > 0 {
        let cp = &mut scratch[..m];
        let mut d = vec![0.0; m];
        for i in 0..m {
            let mut rhs = 6.0 * f[i + 1];
            if i == 0 {
                rhs -= c[0];
            }
            if i == m - 1 {
                rhs -= c[n - 1];
            }
            if i == 0 {
                cp[0] = 1.0 / 4.0;
                d[0] = rhs / 4.0;
            } else {
                let den = 4.0 - cp[i - 1];
                cp[i] = 1.0 / den;
                d[i] = (rhs - d[i - 1]) / den;
            }
        }
        for i in (0..m).rev() {
            let next = if i + 1 < m { c[i + 2] } else { 0.0 };
            c[i + 1] = if i + 1 < m { d[i] - cp[i] * next } else { d[i] };
        }
    }
    out[0] = 2.0 * out[1] - out[2];
    out[n + 1] = 2.0 * out[n] - out[n - 1];
}

#[inline]
fn basis(u: f64) -> [f64; 4] {
    let u2 = u * u;
    let u3 = u2 * u;
    [
        (1.0 - u) * (1.0 - u) * (1.0 - u) / 6.0,
        (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
        (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0,
        u3 / 6.0,
    ]
}

#[inline]
fn basis_derivative(u: f64) -> [f64; 4] {
    let u2 = u * u;
    [
        -(1.0 - u) * (1.0 - u) / 2.0,
        (9.0 * u2 - 12.0 * u) / 6.0,
        (-9.0 * u2 + 6.0 * u + 3.0) / 6.0,
        u2 / 2.0,
    ]
}

/// A fitted tensor spline.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSpline {
    grid: TensorGrid,
    /// Extended coefficients, `(n_k + 2)` per axis, first axis fastest.
    coeffs: Vec<f64>,
    strides: Vec<usize>,
}

impl TensorSpline {
    /// Interpolate node values laid out as in [`TensorGrid::point`].
    pub fn fit(grid: TensorGrid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        let d = grid.dim();
        let ext: Vec<usize> = grid.axes.iter().map(|a| a.nodes + 2).collect();
        let mut strides = vec![1usize; d];
        for k in 1..d {
            strides[k] = strides[k - 1] * ext[k - 1];
        }
        let total: usize = ext.iter().product();
        // Embed values at interior offsets, then fit along each axis in turn;
        // lines along later axes run over the already extended earlier axes.
        let mut coeffs = vec![0.0; total];
        let mut idx = vec![0usize; d];
        for v in values {
            let mut off = 0;
            for k in 0..d {
                off += (idx[k] + 1) * strides[k];
            }
            coeffs[off] = *v;
            for (k, a) in grid.axes.iter().enumerate() {
                idx[k] += 1;
                if idx[k] < a.nodes {
                    break;
                }
                idx[k] = 0;
            }
        }
        let max_n = grid.axes.iter().map(|a| a.nodes).max().unwrap_or(0);
        let mut line = vec![0.0; max_n];
        let mut out = vec![0.0; max_n + 2];
        let mut scratch = vec![0.0; max_n];
        for axis in 0..d {
            let n = grid.axes[axis].nodes;
            // Iterate over all lines: other axes range over extended indices
            // for earlier axes and interior indices for later ones.
            let ranges: Vec<(usize, usize)> = (0..d)
                .map(|k| if k < axis { (0, ext[k]) } else if k == axis { (0, 1) } else { (1, ext[k] - 1) })
                .collect();
            let mut cur: Vec<usize> = ranges.iter().map(|r| r.0).collect();
            loop {
                let base: usize = (0..d).map(|k| if k == axis { 0 } else { cur[k] * strides[k] }).sum();
                for i in 0..n {
                    line[i] = coeffs[base + (i + 1) * strides[axis]];
                }
                fit_line(&line[..n], &mut out[..n + 2], &mut scratch);
                for i in 0..n + 2 {
                    coeffs[base + i * strides[axis]] = out[i];
                }
                let mut k = 0;
                loop {
                    if k == d {
                        break;
                    }
                    cur[k] += 1;
                    if cur[k] < ranges[k].1 {
                        break;
                    }
                    cur[k] = ranges[k].0;
                    k += 1;
                }
                if k == d {
                    break;
                }
            }
        }
        Ok(Self { grid, coeffs, strides })
    }

    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = self.grid.dim();
        let mut base = 0usize;
        let mut w = [[0.0f64; 4]; 8];
        let mut heap;
        let weights: &mut [[f64; 4]] = if d <= 8 {
            &mut w[..d]
        } else {
            heap = vec![[0.0; 4]; d];
            &mut heap[..]
        };
        for k in 0..d {
            let (cell, u, _) = self.grid.axes[k].locate(x[k]);
            // Extended index of coefficient c_{cell−1} is `cell`.
            base += cell * self.strides[k];
            weights[k] = basis(u);
        }
        self.contract(base, weights)
    }

    /// Value and gradient; the gradient is zero along clamped axes.
    pub fn eval_with_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.grid.dim();
        let mut base = 0usize;
        let mut w = vec![[0.0f64; 4]; d];
        let mut dw = vec![[0.0f64; 4]; d];
        let mut inside = vec![true; d];
        for k in 0..d {
            let (cell, u, ins) = self.grid.axes[k].locate(x[k]);
            base += cell * self.strides[k];
            w[k] = basis(u);
            dw[k] = basis_derivative(u);
            inside[k] = ins;
        }
        for k in 0..d {
            if !inside[k] {
                grad[k] = 0.0;
                continue;
            }
            let saved = w[k];
            w[k] = dw[k];
            grad[k] = self.contract(base, &w) / self.grid.axes[k].pitch();
            w[k] = saved;
        }
        self.contract(base, &w)
    }

    /// Extended coefficient counts `n_k + 2` per axis.
    pub fn extended_dims(&self) -> Vec<usize> {
        self.grid.axes.iter().map(|a| a.nodes + 2).collect()
    }

    /// Coefficients, first axis fastest.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// First extended coefficient index touched by `y` on axis `k`, and the
    /// four basis weights (after clamping).
    pub fn axis_weights(&self, k: usize, y: f64) -> (usize, [f64; 4]) {
        let (cell, u, _) = self.grid.axes[k].locate(y);
        (cell, basis(u))
    }

    fn contract(&self, base: usize, weights: &[[f64; 4]]) -> f64 {
        let c = &self.coeffs;
        // Axis 0 has unit stride and runs innermost.
        let line = |o: usize, w: &[f64; 4]| w[0] * c[o] + w[1] * c[o + 1] + w[2] * c[o + 2] + w[3] * c[o + 3];
        match weights.len() {
            1 => line(base, &weights[0]),
            2 => {
                let s1 = self.strides[1];
                (0..4).map(|b| weights[1][b] * line(base + b * s1, &weights[0])).sum()
            }
            3 => {
                let (s1, s2) = (self.strides[1], self.strides[2]);
                let mut acc = 0.0;
                for a in 0..4 {
                    let oa = base + a * s2;
                    let mut inner = 0.0;
                    for b in 0..4 {
                        inner += weights[1][b] * line(oa + b * s1, &weights[0]);
                    }
                    acc += weights[2][a] * inner;
                }
                acc
            }
            d => {
                let count = 1usize << (2 * (d - 1));
                let mut acc = 0.0;
                for flat in 0..count {
                    let mut off = base;
                    let mut w = 1.0;
                    let mut r = flat;
                    for k in 1..d {
                        let i = r & 3;
                        r >>= 2;
                        off += i * self.strides[k];
                        w *= weights[k][i];
                    }
                    acc += w * line(off, &weights[0]);
                }
                acc
            }
        }
    }
}

/// Contract the fastest axis (length `lead`) of `data` with `v`.
pub fn contract_leading(data: &[f64], lead: usize, v: &[f64]) -> Vec<f64> {
    data.chunks_exact(lead).map(|c| c.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Apply the row-major `rows × lead` matrix along the fastest axis of
/// `data`, moving that axis to the slowest position. Applying one product per
/// axis restores the original axis order.
pub fn product_leading_rotate(data: &[f64], lead: usize, matrix: &[f64], rows: usize) -> Vec<f64> {
    let rest = data.len() / lead;
    let mut out = vec![0.0; rows * rest];
    for (r, chunk) in data.chunks_exact(lead).enumerate() {
        for a in 0..rows {
            let row = &matrix[a * lead..(a + 1) * lead];
            out[a * rest + r] = row.iter().zip(chunk).map(|(x, y)| x * y).sum();
        }
    }
    out
}
