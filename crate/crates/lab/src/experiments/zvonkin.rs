use spdelab_core::field::ZeroDrift;
use spdelab_core::kolmogorov::solve_vector;
use spdelab_core::paths::{simulate_mild, simulate_ou_with, NoisePanel, TimeGrid};
use spdelab_core::stats::{convergence_order, Estimate};
use spdelab_core::zvonkin::modified_mild_residual;
use spdelab_core::DriftField;

use super::{build_drift, lambda_for, ladder, series, solver_options, sub_seed, try_par_map};
use crate::config::ExperimentConfig;
use crate::report::{sci, Bundle, Check, Table};
use crate::{At, LabError};

/// Residual of the transformed mild equation along drifted paths under Δt
/// refinement, and its collapse for a vanishing drift.
pub(super) fn run(cfg: &ExperimentConfig) -> Result<Bundle, LabError> {
    let op = super::build_operator(cfg)?;
    let m = op.dim();
    let x = cfg.start(m);
    let b = build_drift(&cfg.drift, &op, sub_seed(cfg.seed, 1))?;
    let lambda = lambda_for(cfg, b.sup_norm());
    let opts = solver_options(cfg, m);
    let sol = solve_vector(&op, &b, lambda, &opts).at("kolmogorov", "solve_vector")?;
    let rungs = ladder(cfg);
    let finest = *rungs.last().unwrap_or(&cfg.grid.steps);
    let fine = TimeGrid::new(cfg.grid.horizon, finest).at("paths", "TimeGrid::new")?;
    let seed = sub_seed(cfg.seed, 7);
    let mut bundle = Bundle::default();

    // per rung, per path: sup residual of every component
    let mut table = None;
    let mut by_rung = Vec::new();
    for &steps in &rungs {
        let sups = try_par_map(cfg.run.paths, |p| {
            let panel = NoisePanel::generate(&op, fine, seed, p as u64).coarsen(finest / steps).at("paths", "coarsen")?;
            let path = simulate_mild(&op, &b, &x, &panel).at("paths", "simulate_mild")?;
            (0..m)
                .map(|i| {
                    modified_mild_residual(&op, &sol, &path, &panel, lambda, i)
                        .at("zvonkin", "modified_mild_residual")
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
        if steps == finest {
            let r = &sups[0][0];
            table = Some(Table {
                name: "residuals".into(),
                header: vec!["t".into(), "residual".into()],
                rows: r.times.iter().zip(&r.residuals).map(|(t, v)| vec![*t, *v]).collect(),
            });
        }
        by_rung.push(sups);
    }
    let dts: Vec<f64> = rungs.iter().map(|n| cfg.grid.horizon / *n as f64).collect();
    for i in 0..m {
        let ests: Vec<Estimate> = by_rung
            .iter()
            .map(|sups| Estimate::from_samples(&sups.iter().map(|s| s[i].sup_residual).collect::<Vec<_>>()))
            .collect();
        let means: Vec<f64> = ests.iter().map(|e| e.value).collect();
        let order = convergence_order(&dts, &means);
        bundle.checks.push(
            Check::at_least(format!("residual_order_{}", i + 1), order, 0.4, 0.0)
                .with_note(format!("mean sup residual per rung {}", sci(&means))),
        );
        bundle.series.push(series(&format!("residual_vs_dt_{}", i + 1), dts.iter().copied().zip(ests)));
    }
    bundle.tables.extend(table);

    // B ≡ 0: the transformed equation is the OU equation itself
    let zero = solve_vector(&op, &ZeroDrift(m), lambda, &opts).at("kolmogorov", "solve_vector")?;
    let panel = NoisePanel::generate(&op, fine, seed, 0);
    let ou = simulate_ou_with(&op, &x, &panel).at("paths", "simulate_ou_with")?;
    let mut worst = 0.0f64;
    for i in 0..m {
        let r = modified_mild_residual(&op, &zero, &ou, &panel, lambda, i).at("zvonkin", "modified_mild_residual")?;
        worst = worst.max(r.sup_residual);
    }
    bundle.checks.push(Check::at_most("zero_drift_collapse", worst, 1e-12, 0.0));
    Ok(bundle)
}
