use spdelab_core::paths::{ou_terminal, simulate_ou, TimeGrid};
use spdelab_core::spectrum::q_coefficient;
use spdelab_core::stats::{mean, variance, Estimate};

use super::{build_operator, par_map, series, trajectory_table};
use crate::config::ExperimentConfig;
use crate::formats::mode_header;
use crate::report::{Bundle, Check, Table};
use crate::{At, LabError};

/// Rows of `samples.csv` kept from the full ensemble.
const SAMPLE_ROWS: usize = 2000;

/// Exact OU transition: per-mode mean and variance against closed forms.
pub(super) fn run(cfg: &ExperimentConfig) -> Result<Bundle, LabError> {
    let op = build_operator(cfg)?;
    let m = op.dim();
    let x = cfg.start(m);
    let horizon = cfg.grid.horizon;
    let one_step = TimeGrid::new(horizon, 1).at("paths", "TimeGrid::new")?;
    let n = cfg.run.paths;
    let draws: Vec<Vec<f64>> = par_map(n, |i| ou_terminal(&op, &x, one_step, cfg.seed, i as u64))
        .into_iter()
        .collect::<Result<_, _>>()
        .at("paths", "ou_terminal")?;

    let mut bundle = Bundle::default();
    let mut var_points = Vec::new();
    for k in 0..m {
        let col: Vec<f64> = draws.iter().map(|d| d[k]).collect();
        let l = op.eigenvalue(k);
        let want_var = q_coefficient(l, horizon);
        let want_mean = (-l * horizon).exp() * x[k];
        let var = variance(&col);
        let se_var = var * (2.0 / (n as f64 - 1.0)).sqrt();
        let se_mean = (var / n as f64).sqrt();
        bundle.checks.push(
            Check::at_most(format!("variance_mode_{}", k + 1), (var - want_var).abs(), 3.0 * se_var, se_var)
                .with_note(format!("empirical {var:.6e}, closed form {want_var:.6e}")),
        );
        bundle.checks.push(Check::at_most(
            format!("mean_mode_{}", k + 1),
            (mean(&col) - want_mean).abs(),
            3.0 * se_mean,
            se_mean,
        ));
        var_points.push(((k + 1) as f64, Estimate { value: var, std_error: se_var }));
    }
    bundle.series.push(series("variance_by_mode", var_points));
    bundle.series.push(series(
        "variance_closed_form",
        (0..m).map(|k| ((k + 1) as f64, Estimate::exact(q_coefficient(op.eigenvalue(k), horizon)))),
    ));
    bundle.tables.push(Table {
        name: "samples".into(),
        header: mode_header("mode_", m),
        rows: draws.into_iter().take(SAMPLE_ROWS).collect(),
    });
    let grid = TimeGrid::new(horizon, cfg.grid.steps).at("paths", "TimeGrid::new")?;
    let path = simulate_ou(&op, &x, grid, cfg.seed).at("paths", "simulate_ou")?;
    bundle.tables.push(trajectory_table("trajectories", &path));
    Ok(bundle)
}
