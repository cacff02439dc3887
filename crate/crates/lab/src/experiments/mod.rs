//! One runner per experiment kind. Each returns a [`Bundle`] of checks,
//! tables and plot series; [`run_to_dir`] writes it out.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use spdelab_core::drifts::{dirichlet_drift, DirichletKind, SignDrift, SineDrift, TanhDrift, Weights};
use spdelab_core::field::ZeroDrift;
use spdelab_core::kolmogorov::{lambda0, SolverOptions};
use spdelab_core::mollify::{MollifiedDrift, TabulatedDrift};
use spdelab_core::semigroup::QuadratureSpec;
use spdelab_core::stats::Estimate;
use spdelab_core::{DriftField, SpectralOperator};

use crate::config::{DriftKind, DriftSpec, ExperimentConfig, ExperimentKind};
use crate::report::{Bundle, Point, Series, Table};
use crate::{serialize_config, At, LabError};

mod girsanov;
mod kernels;
mod kolmogorov;
mod ou;
mod uniqueness;
mod zvonkin;

/// Half-width, in invariant standard deviations, of drift tables.
const TABLE_WIDTH: f64 = 5.0;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Bundle, LabError> {
    let mut bundle = match cfg.kind {
        ExperimentKind::OuValidate => ou::run(cfg)?,
        ExperimentKind::Kolmogorov => kolmogorov::run(cfg)?,
        ExperimentKind::Girsanov => girsanov::run(cfg)?,
        ExperimentKind::Zvonkin => zvonkin::run(cfg)?,
        ExperimentKind::UniquenessByNoise => uniqueness::run_noisy(cfg)?,
        ExperimentKind::DeterministicNonuniqueness => uniqueness::run_deterministic(cfg)?,
        ExperimentKind::KernelNorms => kernels::run(cfg)?,
    };
    bundle.experiment = cfg.kind.name().to_string();
    bundle.seed = cfg.seed;
    bundle.config = serialize_config(cfg);
    Ok(bundle)
}

/// Run and write the bundle to `dir` (or the configured output directory).
pub fn run_to_dir(cfg: &ExperimentConfig, dir: Option<&Path>) -> Result<(Bundle, Vec<PathBuf>), LabError> {
    let bundle = run_experiment(cfg)?;
    let files = bundle.write(dir.unwrap_or(&cfg.output_dir))?;
    Ok((bundle, files))
}

pub(crate) fn build_operator(cfg: &ExperimentConfig) -> Result<SpectralOperator, LabError> {
    match &cfg.spectrum.file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
            Ok(crate::formats::parse_spectrum(&text)?)
        }
        None => SpectralOperator::from_growth(cfg.spectrum.c, cfg.spectrum.alpha, cfg.spectrum.m, cfg.spectrum.delta)
            .at("spectrum", "from_growth"),
    }
}

/// The configured drift, mollified and tabulated as requested.
pub(crate) fn build_drift(
    spec: &DriftSpec,
    op: &SpectralOperator,
    seed: u64,
) -> Result<Box<dyn DriftField>, LabError> {
    let m = op.dim();
    let amp = spec.amplitude;
    let weights = |n: usize| -> Vec<f64> {
        if spec.weights.is_empty() {
            vec![amp / (n as f64).sqrt(); n]
        } else {
            spec.weights.clone()
        }
    };
    let base: Box<dyn DriftField> = match spec.kind {
        DriftKind::Zero => Box::new(ZeroDrift(m)),
        DriftKind::Sine => Box::new(SineDrift { dim: m, amplitude: amp }),
        DriftKind::Tanh => Box::new(TanhDrift { dim: m, amplitude: amp }),
        DriftKind::Sign => Box::new(SignDrift { alphas: weights(m) }),
        DriftKind::DirichletProduct => {
            dirichlet_drift(&DirichletKind::Product(Weights::Explicit(weights(m)))).at("drifts", "dirichlet_drift")?
        }
        DriftKind::Composite => {
            dirichlet_drift(&DirichletKind::Composite { lambda1: spec.lambda1, tail: spec.weights.clone() })
                .at("drifts", "dirichlet_drift")?
        }
    };
    if base.dim() != m {
        return Err(LabError::Setup(format!("drift `{}` has {} components, operator has {m} modes", spec.kind.name(), base.dim())));
    }
    let mollified: Box<dyn DriftField> = if spec.mollify > 0 {
        Box::new(MollifiedDrift::new(op, base, spec.mollify, spec.mollify_samples, seed).at("mollify", "new")?)
    } else {
        base
    };
    if spec.tabulate_nodes > 0 {
        let t = TabulatedDrift::on_invariant_box(op, &mollified, spec.tabulate_nodes, TABLE_WIDTH)
            .at("mollify", "on_invariant_box")?;
        Ok(Box::new(t))
    } else {
        Ok(mollified)
    }
}

pub(crate) fn drift_label(spec: &DriftSpec) -> String {
    if spec.mollify > 0 {
        format!("mollified_{}", spec.kind.name())
    } else {
        spec.kind.name().to_string()
    }
}

/// `λ = factor · λ₀(‖B‖)`, or `factor` for a vanishing drift.
pub(crate) fn lambda_for(cfg: &ExperimentConfig, bound: f64) -> f64 {
    let l0 = lambda0(bound);
    cfg.run.lambda_factor * if l0 > 0.0 { l0 } else { 1.0 }
}

pub(crate) fn solver_options(cfg: &ExperimentConfig, m: usize) -> SolverOptions {
    let mut opts = SolverOptions::for_dim(m);
    if cfg.quadrature.gh_points > 0 {
        opts.quad = QuadratureSpec::hermite(cfg.quadrature.gh_points, opts.quad.time_nodes);
    }
    opts
}

/// Step counts `steps · 2^i`, `i = 0..=halvings`.
pub(crate) fn ladder(cfg: &ExperimentConfig) -> Vec<usize> {
    (0..=cfg.grid.halvings).map(|i| cfg.grid.steps << i).collect()
}

/// Independent stream seed for a named sub-task.
pub(crate) fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(tag)
}

/// Order-preserving parallel map over `0..n`.
pub(crate) fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

pub(crate) fn try_par_map<T: Send>(
    n: usize,
    f: impl Fn(usize) -> Result<T, LabError> + Sync + Send,
) -> Result<Vec<T>, LabError> {
    (0..n).into_par_iter().map(f).collect()
}

pub(crate) fn series(name: &str, points: impl IntoIterator<Item = (f64, Estimate)>) -> Series {
    Series {
        name: name.to_string(),
        points: points.into_iter().map(|(x, e)| Point { x, y: e.value, y_err: e.std_error }).collect(),
    }
}

pub(crate) fn trajectory_table(name: &str, path: &spdelab_core::paths::Trajectory) -> Table {
    let mut header = vec!["t".to_string()];
    header.extend(crate::formats::mode_header("mode_", path.dim()));
    let grid = path.grid();
    let rows = (0..=grid.steps())
        .map(|j| {
            let mut row = vec![grid.time(j)];
            row.extend_from_slice(path.state(j));
            row
        })
        .collect();
    Table { name: name.to_string(), header, rows }
}
