use spdelab_core::drifts::{SineDrift, TanhDrift};
use spdelab_core::field::FnField;
use spdelab_core::girsanov::{girsanov_weight, weighted_estimate, Direction, GirsanovWeight};
use spdelab_core::paths::{simulate_mild, simulate_ou_with, NoisePanel, TimeGrid, Trajectory};
use spdelab_core::stats::Estimate;
use spdelab_core::{DriftField, ScalarField, Smoothness, SpectralOperator};

use super::{build_drift, drift_label, ladder, series, sub_seed, try_par_map};
use crate::config::ExperimentConfig;
use crate::report::{Bundle, Check, Table};
use crate::{At, LabError};

const WEIGHT_ROWS: usize = 2000;

fn ou_weights(
    op: &SpectralOperator,
    b: &dyn DriftField,
    x: &[f64],
    grid: TimeGrid,
    n: usize,
    seed: u64,
) -> Result<Vec<(Trajectory, GirsanovWeight)>, LabError> {
    try_par_map(n, |i| {
        let panel = NoisePanel::generate(op, grid, seed, i as u64);
        let path = simulate_ou_with(op, x, &panel).at("paths", "simulate_ou_with")?;
        let w = girsanov_weight(&path, b, &panel, Direction::AddDrift).at("girsanov", "girsanov_weight")?;
        Ok((path, w))
    })
}

/// Unit mean of the exponential martingale along a Δt ladder, and the
/// change of measure checked in both directions against direct simulation.
pub(super) fn run(cfg: &ExperimentConfig) -> Result<Bundle, LabError> {
    let op = super::build_operator(cfg)?;
    let m = op.dim();
    let x = cfg.start(m);
    let configured = build_drift(&cfg.drift, &op, sub_seed(cfg.seed, 1))?;
    let amp = configured.sup_norm();
    let sine = SineDrift { dim: m, amplitude: amp };
    let tanh = TanhDrift { dim: m, amplitude: amp };
    let label = drift_label(&cfg.drift);
    let corpus: [(&str, &dyn DriftField); 3] = [("sine", &sine), ("tanh", &tanh), (&label, configured.as_ref())];
    let f = FnField::new(|y: &[f64]| (y[0] + 0.5).tanh(), 1.0, Smoothness::Smooth);
    let n = cfg.run.paths;
    let rungs = ladder(cfg);
    let mut bundle = Bundle::default();

    for (d, (name, b)) in corpus.iter().enumerate() {
        for (r, &steps) in rungs.iter().enumerate() {
            let grid = TimeGrid::new(cfg.grid.horizon, steps).at("paths", "TimeGrid::new")?;
            let seed = sub_seed(cfg.seed, 100 + 10 * d as u64 + r as u64);
            let pw = ou_weights(&op, *b, &x, grid, n, seed)?;
            let m_vals: Vec<f64> = pw.iter().map(|(_, w)| w.weight()).collect();
            let e = Estimate::from_samples(&m_vals);
            bundle.checks.push(
                Check::at_most(format!("martingale_mean_{name}_{steps}"), (e.value - 1.0).abs(), 3.0 * e.std_error, e.std_error)
                    .with_note(format!("E[M] = {:.6}", e.value)),
            );
            if r != 0 {
                continue;
            }
            if d == 0 {
                let decades: Vec<usize> = (2..).map(|p| 10usize.pow(p)).take_while(|k| *k <= n).collect();
                bundle.series.push(series(
                    "EM_vs_N",
                    decades.iter().map(|&k| (k as f64, Estimate::from_samples(&m_vals[..k]))),
                ));
                let rows = pw
                    .iter()
                    .take(WEIGHT_ROWS)
                    .enumerate()
                    .map(|(i, (_, w))| vec![i as f64, w.log_weight, w.integral_term, w.quadratic_term])
                    .collect();
                bundle.tables.push(Table {
                    name: "weights".into(),
                    header: ["path_id", "log_weight", "integral_term", "quadratic_term"].map(String::from).to_vec(),
                    rows,
                });
            }
            dual(&op, *b, name, &x, grid, &f, &pw, sub_seed(cfg.seed, 200 + d as u64), &mut bundle)?;
        }
    }
    Ok(bundle)
}

/// Weighted OU paths against drifted paths, and weighted drifted paths
/// (drift removed) against OU paths.
#[allow(clippy::too_many_arguments)]
fn dual(
    op: &SpectralOperator,
    b: &dyn DriftField,
    name: &str,
    x: &[f64],
    grid: TimeGrid,
    f: &dyn ScalarField,
    ou: &[(Trajectory, GirsanovWeight)],
    seed: u64,
    bundle: &mut Bundle,
) -> Result<(), LabError> {
    let n = ou.len();
    let drifted = try_par_map(n, |i| {
        let panel = NoisePanel::generate(op, grid, seed, i as u64);
        let path = simulate_mild(op, b, x, &panel).at("paths", "simulate_mild")?;
        let w = girsanov_weight(&path, b, &panel, Direction::RemoveDrift).at("girsanov", "girsanov_weight")?;
        Ok((f.eval(path.terminal()), w.log_weight))
    })?;
    let ou_vals: Vec<f64> = ou.iter().map(|(p, _)| f.eval(p.terminal())).collect();
    let ou_lw: Vec<f64> = ou.iter().map(|(_, w)| w.log_weight).collect();
    let (dr_vals, dr_lw): (Vec<f64>, Vec<f64>) = drifted.into_iter().unzip();

    let forward = weighted_estimate(&ou_vals, &ou_lw).at("girsanov", "weighted_estimate")?;
    let direct = Estimate::from_samples(&dr_vals);
    let se = forward.estimate.std_error.hypot(direct.std_error);
    let mut c = Check::at_most(format!("change_of_measure_{name}"), (forward.estimate.value - direct.value).abs(), 3.0 * se, se)
        .with_note(format!("weighted OU {:.6} vs drifted {:.6}", forward.estimate.value, direct.value));
    c.passed &= !forward.degenerate;
    bundle.checks.push(c);

    let reverse = weighted_estimate(&dr_vals, &dr_lw).at("girsanov", "weighted_estimate")?;
    let plain = Estimate::from_samples(&ou_vals);
    let se = reverse.estimate.std_error.hypot(plain.std_error);
    let mut c = Check::at_most(format!("reverse_change_of_measure_{name}"), (reverse.estimate.value - plain.value).abs(), 3.0 * se, se)
        .with_note(format!("weighted drifted {:.6} vs OU {:.6}", reverse.estimate.value, plain.value));
    c.passed &= !reverse.degenerate;
    bundle.checks.push(c);
    Ok(())
}
