//! Summary statistics with deterministic reductions.

use alloc::vec::Vec;

use crate::math;

/// Pairwise (tree) summation; the reduction order depends only on the length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Unbiased sample variance.
pub fn variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    pairwise_sum(&sq) / (n - 1) as f64
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0 }
    }

    /// Sample mean and its standard error.
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let value = mean(values);
        let std_error = if n > 1 { math::sqrt(variance(values) / n as f64) } else { 0.0 };
        Self { value, std_error }
    }

    /// Weighted mean with a delta-method standard error; weights need not be
    /// normalized.
    pub fn from_weighted(values: &[f64], weights: &[f64]) -> Self {
        let wsum = pairwise_sum(weights);
        let wv: Vec<f64> = values.iter().zip(weights).map(|(v, w)| v * w).collect();
        let value = pairwise_sum(&wv) / wsum;
        let dev: Vec<f64> = values
            .iter()
            .zip(weights)
            .map(|(v, w)| w * w * (v - value) * (v - value))
            .collect();
        let std_error = math::sqrt(pairwise_sum(&dev)) / wsum;
        Self { value, std_error }
    }

    /// Whether `target` lies within `k` standard errors plus `slack`.
    pub fn agrees_with(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error + slack
    }
}

/// Two-sided one-sample Kolmogorov–Smirnov statistic against a CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Asymptotic critical value of the KS statistic at significance 1%.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / math::sqrt(n as f64)
}

/// Least-squares slope of `ln y` against `ln x`. Returns `(slope, intercept)`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| math::ln(*v)).collect();
    let ly: Vec<f64> = y.iter().map(|v| math::ln(*v)).collect();
    linear_fit(&lx, &ly)
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Observed convergence order for errors measured at step sizes `dt`:
/// the slope of `ln err` against `ln dt`.
pub fn convergence_order(dt: &[f64], err: &[f64]) -> f64 {
    log_log_fit(dt, err).0
}
