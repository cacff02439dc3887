use spdelab_core::drifts::{b_dir, RationalDetector};
use spdelab_core::paths::{
    co_simulate_with, dirichlet_solutions, integral_residual, mild_residuals, NoisePanel, Representative, TimeGrid,
    Variant,
};
use spdelab_core::stats::{convergence_order, Estimate};

use super::{build_drift, ladder, series, sub_seed, trajectory_table, try_par_map};
use crate::config::ExperimentConfig;
use crate::report::{sci, Bundle, Check, Table};
use crate::{At, LabError};

/// Forward and branch-seeking schemes on shared noise: their distance under
/// refinement, and the mild residual of every attempted constant branch.
pub(super) fn run_noisy(cfg: &ExperimentConfig) -> Result<Bundle, LabError> {
    let op = super::build_operator(cfg)?;
    let m = op.dim();
    let x = cfg.start(m);
    let b = build_drift(&cfg.drift, &op, sub_seed(cfg.seed, 1))?;
    let rungs = ladder(cfg);
    let finest = *rungs.last().unwrap_or(&cfg.grid.steps);
    let fine = TimeGrid::new(cfg.grid.horizon, finest).at("paths", "TimeGrid::new")?;
    let seed = sub_seed(cfg.seed, 8);
    let mut bundle = Bundle::default();
    let mut points = Vec::new();

    for &steps in &rungs {
        let runs = try_par_map(cfg.run.paths, |p| {
            let panel = NoisePanel::generate(&op, fine, seed, p as u64).coarsen(finest / steps).at("paths", "coarsen")?;
            let c = co_simulate_with(&op, &b, &x, &panel, Variant::Forward, Variant::BranchSeeking)
                .at("paths", "co_simulate_with")?;
            let fwd = mild_residuals(&op, &b, &c.first, &panel, Representative::Generic).at("paths", "mild_residuals")?;
            let fwd = fwd.into_iter().fold(0.0, f64::max);
            let attempt = c.attempts.iter().map(|a| a.residual).fold(f64::INFINITY, f64::min);
            let accepted = c.attempts.iter().filter(|a| a.accepted).count();
            Ok((c.sup_distance, fwd, attempt, c.attempts.len(), accepted, c.first))
        })?;
        let dist: Vec<f64> = runs.iter().map(|r| r.0).collect();
        points.push((cfg.grid.horizon / steps as f64, Estimate::from_samples(&dist)));
        let forward = runs.iter().map(|r| r.1).fold(0.0, f64::max);
        let attempts: usize = runs.iter().map(|r| r.3).sum();
        let accepted: usize = runs.iter().map(|r| r.4).sum();
        let weakest = runs.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
        let mut c = Check::at_least(format!("branch_rejection_{steps}"), if attempts > 0 { weakest } else { 0.0 }, 10.0 * forward, 0.0)
            .with_note(format!("{attempts} attempts, {accepted} accepted; forward residual {forward:.3e}"));
        c.passed &= attempts > 0;
        bundle.checks.push(c);
        if steps == finest {
            bundle.tables.push(trajectory_table("trajectories", &runs[0].5));
        }
    }
    let dts: Vec<f64> = points.iter().map(|p| p.0).collect();
    let means: Vec<f64> = points.iter().map(|p| p.1.value).collect();
    bundle.checks.push(
        Check::at_least("sup_distance_order", convergence_order(&dts, &means), 0.4, 0.0)
            .with_note(format!("mean sup distance per rung {}", sci(&means))),
    );
    bundle.series.push(series("sup_distance_vs_dt", points));
    Ok(bundle)
}

/// Exact solutions of `X' = b_Dir(X)` from a rational start, plus the
/// same phenomenon reproduced by the noiseless schemes.
pub(super) fn run_deterministic(cfg: &ExperimentConfig) -> Result<Bundle, LabError> {
    let x = cfg.start(1)[0];
    let horizon = cfg.grid.horizon;
    let detector = RationalDetector::default();
    if !detector.is_rational(x) {
        return Err(LabError::Setup(format!("start {x} is not a detected rational")));
    }
    // branch at the start and where the forward solution passes x + T/4, x + T/2
    let branch_times: Vec<f64> = [0.0, 0.25, 0.5]
        .iter()
        .map(|f| f * horizon)
        .filter(|t| detector.is_rational(x + t))
        .collect();
    let sols = dirichlet_solutions(x, horizon, &branch_times, &detector).at("paths", "dirichlet_solutions")?;
    let mut bundle = Bundle::default();
    bundle.checks.push(Check::at_least("solution_count", sols.len() as f64, 2.0, 0.0));
    for (k, s) in sols.iter().enumerate() {
        let r = integral_residual(s, b_dir, 256);
        bundle.checks.push(Check::at_most(format!("integral_residual_{}", k + 1), r, 1e-9, 0.0));
    }
    for (k, tb) in branch_times.iter().enumerate() {
        let d = sols[0].sup_distance(&sols[k + 1]);
        bundle.checks.push(
            Check::at_least(format!("branch_distance_{}", k + 1), d, 0.9 * (horizon - tb), 0.0)
                .with_note(format!("branch at t = {tb}")),
        );
    }
    let n = cfg.grid.steps;
    let mut header = vec!["t".to_string()];
    header.extend((1..=sols.len()).map(|k| format!("solution_{k}")));
    let rows = (0..=n)
        .map(|j| {
            let t = horizon * j as f64 / n as f64;
            let mut row = vec![t];
            row.extend(sols.iter().map(|s| s.eval(t)));
            row
        })
        .collect();
    bundle.tables.push(Table { name: "solutions".into(), header, rows });

    // noiseless schemes with the composite drift, one mode
    let op = super::build_operator(cfg)?;
    let b = build_drift(&cfg.drift, &op, sub_seed(cfg.seed, 1))?;
    let grid = TimeGrid::new(horizon, n).at("paths", "TimeGrid::new")?;
    let panel = NoisePanel::zero(&op, grid);
    let c = co_simulate_with(&op, &b, &cfg.start(op.dim()), &panel, Variant::Forward, Variant::BranchSeeking)
        .at("paths", "co_simulate_with")?;
    bundle.checks.push(Check::at_least("scheme_branch_distance", c.sup_distance, 0.9 * horizon, 0.0));
    for (name, path, rep) in [("forward", &c.first, Representative::Generic), ("branch", &c.second, Representative::Pointwise)] {
        let r = mild_residuals(&op, &b, path, &panel, rep).at("paths", "mild_residuals")?;
        bundle.checks.push(Check::at_most(format!("scheme_residual_{name}"), r.into_iter().fold(0.0, f64::max), 1e-9, 0.0));
    }
    bundle.series.push(series(
        "branch_distance_vs_time",
        branch_times.iter().enumerate().map(|(k, tb)| (*tb, Estimate::exact(sols[0].sup_distance(&sols[k + 1])))),
    ));
    Ok(bundle)
}
