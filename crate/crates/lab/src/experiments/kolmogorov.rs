use spdelab_core::drifts::{SineDrift, TanhDrift};
use spdelab_core::field::{FnDrift, FnField, ZeroDrift};
use spdelab_core::gaussian::GaussianMeasure;
use spdelab_core::kolmogorov::{
    apply_t_lambda, regularity_functional, solve_scalar, solve_vector, KolmogorovSolution, RegularityDiagnostics,
    SolverOptions,
};
use spdelab_core::paths::{simulate_mild, simulate_ou_with, NoisePanel, TimeGrid};
use spdelab_core::rng::{domain, NormalStream};
use spdelab_core::semigroup::QuadratureSpec;
use spdelab_core::stats::Estimate;
use spdelab_core::{DriftField, ScalarField, Smoothness, SpectralOperator};

use super::{build_drift, lambda_for, series, solver_options, sub_seed, try_par_map};
use crate::config::ExperimentConfig;
use crate::formats::mode_header;
use crate::oracle::ode_oracle;
use crate::report::{sci, Bundle, Check, Table};
use crate::{At, LabError};

/// Source term with `‖f‖₀ ≤ 1`, mixing every mode.
fn source() -> FnField<impl Fn(&[f64]) -> f64 + Sync> {
    FnField::new(
        move |y: &[f64]| {
            let s: f64 = y.iter().enumerate().map(|(k, v)| v / (k + 1) as f64).sum();
            0.8 * (s - 0.5).cos() + 0.2 * y[0].sin()
        },
        1.0,
        Smoothness::Smooth,
    )
}

fn probes(op: &SpectralOperator, n: usize, seed: u64) -> Vec<Vec<f64>> {
    GaussianMeasure::invariant(op).sample(n, seed)
}

/// `max_{x, i} |Du^i(x)|`.
fn sup_gradient(sol: &KolmogorovSolution, points: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for x in points {
        for i in 0..sol.components() {
            let g = sol.gradient(i, x);
            best = best.max(g.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
    }
    best
}

pub(super) fn run(cfg: &ExperimentConfig) -> Result<Bundle, LabError> {
    let op = super::build_operator(cfg)?;
    let m = op.dim();
    let b = build_drift(&cfg.drift, &op, sub_seed(cfg.seed, 1))?;
    let bound = b.sup_norm();
    let lambda = lambda_for(cfg, bound);
    let opts = solver_options(cfg, m);
    let pts = probes(&op, cfg.run.probes, sub_seed(cfg.seed, 2));
    let mut bundle = Bundle::default();

    if cfg.diagnostics.enabled {
        regularity(cfg, &op, b.as_ref(), lambda, &opts, &mut bundle)?;
        return Ok(bundle);
    }

    contraction(cfg, &op, b.as_ref(), lambda, &pts, &mut bundle)?;

    // scalar solve: sweep ratios and the 2‖f‖₀ bound
    let f = source();
    let sol = solve_scalar(&op, &b, &f, lambda, &opts).at("kolmogorov", "solve_scalar")?;
    let worst_ratio = sol.provenance().contraction_ratios().into_iter().fold(0.0, f64::max);
    bundle.checks.push(Check::at_most("neumann_sweep_ratio", worst_ratio, 0.55, 0.0));
    let mut worst = f64::NEG_INFINITY;
    let mut rows = Vec::with_capacity(pts.len());
    for x in &pts {
        let (u, _) = sol.estimates(0, x);
        worst = worst.max(u.value.abs() - 5.0 * u.std_error);
        let g = sol.gradient(0, x);
        let hs = sol.hessian(0, x).map(|h| h.hs_norm()).unwrap_or(f64::NAN);
        let mut row = x.clone();
        row.extend([u.value, g.iter().map(|v| v * v).sum::<f64>().sqrt(), hs]);
        rows.push(row);
    }
    bundle.checks.push(Check::at_most("solution_bound", worst, 2.0 * f.sup_norm(), 0.0));
    let mut header = mode_header("x_", m);
    header.extend(["u", "|Du|", "hs_norm_D2u"].map(String::from));
    bundle.tables.push(Table { name: "probe_report".into(), header, rows });

    ode_check(&op, &mut bundle)?;
    gradient_decay(cfg, &op, b.as_ref(), lambda, &opts, &pts, &mut bundle)?;
    Ok(bundle)
}

/// `|T_λφ| ≤ ½` for `|φ| ≤ 1` at random probes, Monte Carlo in the Gaussian.
fn contraction(
    cfg: &ExperimentConfig,
    op: &SpectralOperator,
    b: &dyn DriftField,
    lambda: f64,
    pts: &[Vec<f64>],
    bundle: &mut Bundle,
) -> Result<(), LabError> {
    let quad = QuadratureSpec::monte_carlo(cfg.quadrature.mc_samples, cfg.quadrature.time_nodes, sub_seed(cfg.seed, 3));
    let wave = FnField::new(|y: &[f64]| (3.0 * y[0] - y.get(1).copied().unwrap_or(0.0)).cos(), 1.0, Smoothness::Smooth);
    let step = FnField::new(|y: &[f64]| (30.0 * y[0]).tanh(), 1.0, Smoothness::Smooth);
    let corpus: [&dyn ScalarField; 2] = [&wave, &step];
    let ests: Vec<Vec<Estimate>> = try_par_map(pts.len(), |i| {
        corpus
            .iter()
            .map(|phi| apply_t_lambda(op, b, lambda, *phi, &pts[i], &quad).at("kolmogorov", "apply_t_lambda"))
            .collect()
    })?;
    let (mut worst, mut se) = (f64::NEG_INFINITY, 0.0);
    for e in ests.iter().flatten() {
        let v = e.value.abs() - 5.0 * e.std_error;
        if v > worst {
            worst = v;
            se = e.std_error;
        }
    }
    bundle.checks.push(
        Check::at_most("t_lambda_contraction", worst, 0.5, se)
            .with_note("max over probes and test functions of |T_λφ| − 5 standard errors"),
    );
    Ok(())
}

/// One-mode smooth case against a finite-difference ODE solve on `[−3, 3]`.
fn ode_check(op: &SpectralOperator, bundle: &mut Bundle) -> Result<(), LabError> {
    let op1 = SpectralOperator::new(vec![1.0], op.delta()).at("spectrum", "new")?;
    let b = FnDrift::new(1, 0.5, Smoothness::Smooth, |x: &[f64], out: &mut [f64]| out[0] = 0.5 * x[0].sin());
    let f = FnField::new(|x: &[f64]| x[0].cos(), 1.0, Smoothness::Smooth);
    let lambda = std::f64::consts::PI;
    let sol = solve_scalar(&op1, &b, &f, lambda, &SolverOptions::for_dim(1)).at("kolmogorov", "solve_scalar")?;
    let oracle = ode_oracle(|x| 0.5 * x.sin(), f64::cos, 1.0, lambda, -8.0, 8.0, 16001);
    let worst = oracle
        .iter()
        .step_by(25)
        .filter(|(x, _)| x.abs() <= 3.0)
        .map(|(x, u)| (sol.value(&[*x]) - u).abs())
        .fold(0.0, f64::max);
    bundle.checks.push(Check::at_most("ode_oracle", worst, 1e-3, 0.0).with_note("sup difference on [-3, 3]"));
    Ok(())
}

/// Gradient ratio between `λ` and `4λ`, and the constant `c₃` in
/// `|Du_λ| ≤ c₃ ‖B‖₀ λ^{−1/2}` fitted per drift and probe set.
fn gradient_decay(
    cfg: &ExperimentConfig,
    op: &SpectralOperator,
    b: &dyn DriftField,
    lambda: f64,
    opts: &SolverOptions,
    pts: &[Vec<f64>],
    bundle: &mut Bundle,
) -> Result<(), LabError> {
    let m = op.dim();
    let bound = b.sup_norm();
    let sine = SineDrift { dim: m, amplitude: bound };
    let tanh = TanhDrift { dim: m, amplitude: bound };
    let corpus: [(&str, &dyn DriftField); 3] = [("configured", b), ("sine", &sine), ("tanh", &tanh)];
    let other = probes(op, pts.len(), sub_seed(cfg.seed, 4));
    let factors = [1.0, 2.0, 4.0];
    let mut fits = Vec::new();
    for (name, drift) in corpus {
        let mut per_set = [0.0f64; 2];
        let mut sups = Vec::new();
        for k in factors {
            let sol = solve_vector(op, drift, k * lambda, opts).at("kolmogorov", "solve_vector")?;
            let g = [sup_gradient(&sol, pts), sup_gradient(&sol, &other)];
            for (c, gs) in per_set.iter_mut().zip(g) {
                *c = c.max(gs * (k * lambda).sqrt() / bound);
            }
            sups.push(((k * lambda), Estimate::exact(g[0])));
        }
        if name == "configured" {
            let ratio = sups[2].1.value / sups[0].1.value;
            bundle.checks.push(Check::at_most("gradient_decay_ratio", ratio, 0.55, 0.0).with_note("sup |Du| at 4λ over λ"));
            bundle.series.push(series("sup_gradient_vs_lambda", sups));
        }
        fits.extend(per_set);
    }
    let mean = fits.iter().sum::<f64>() / fits.len() as f64;
    let spread = fits.iter().map(|c| (c / mean - 1.0).abs()).fold(0.0, f64::max);
    bundle.checks.push(
        Check::at_most("c3_stability", spread, 0.2, 0.0)
            .with_note(format!("fitted c3 over drifts × probe sets: {}", sci(&fits))),
    );
    Ok(())
}

/// `S_T` at `n` states `rX_s + (1 − r)Y_s` along paired drifted/OU paths,
/// recomputed with twice the states and twice the Gaussian nodes.
fn regularity(
    cfg: &ExperimentConfig,
    op: &SpectralOperator,
    b: &dyn DriftField,
    lambda: f64,
    opts: &SolverOptions,
    bundle: &mut Bundle,
) -> Result<(), LabError> {
    let m = op.dim();
    let d = &cfg.diagnostics;
    let diag = RegularityDiagnostics::new(op.delta(), d.q, d.theta, d.level, cfg.grid.horizon)
        .at("kolmogorov", "RegularityDiagnostics::new")?;
    let grid = TimeGrid::new(cfg.grid.horizon, cfg.grid.steps).at("paths", "TimeGrid::new")?;
    let x0 = cfg.start(m);
    let states = |n: usize| -> Result<Vec<Vec<f64>>, LabError> {
        let per_path = 8;
        let paths = n.div_ceil(per_path);
        let mut out = Vec::with_capacity(n);
        for p in 0..paths {
            let panel = NoisePanel::generate(op, grid, sub_seed(cfg.seed, 5), p as u64);
            let x = simulate_mild(op, b, &x0, &panel).at("paths", "simulate_mild")?;
            let y = simulate_ou_with(op, &x0, &panel).at("paths", "simulate_ou_with")?;
            let mut s = NormalStream::new(sub_seed(cfg.seed, 6), domain::PROBES, p as u64);
            for _ in 0..per_path.min(n - out.len()) {
                let j = ((s.uniform() * grid.steps() as f64) as usize).min(grid.steps());
                let r = s.uniform();
                out.push(x.state(j).iter().zip(y.state(j)).map(|(a, c)| r * a + (1.0 - r) * c).collect());
            }
        }
        Ok(out)
    };
    let n = cfg.run.probes;
    let (few, many) = (states(n)?, states(2 * n)?);
    let sol = solve_vector(op, b, lambda, opts).at("kolmogorov", "solve_vector")?;
    let s1 = regularity_functional(op, &sol, &few, &diag).at("kolmogorov", "regularity_functional")?;
    let s2 = regularity_functional(op, &sol, &many, &diag).at("kolmogorov", "regularity_functional")?;
    let mut finer = *opts;
    let gh = match opts.quad.gaussian {
        spdelab_core::semigroup::GaussianRule::Hermite(p) => p,
        spdelab_core::semigroup::GaussianRule::MonteCarlo => 8,
    };
    finer.quad = QuadratureSpec::hermite(2 * gh, opts.quad.time_nodes);
    let sol2 = solve_vector(op, b, lambda, &finer).at("kolmogorov", "solve_vector")?;
    let s3 = regularity_functional(op, &sol2, &few, &diag).at("kolmogorov", "regularity_functional")?;

    // relative standard error of the sample mean over the smaller state set
    let rel_se = Estimate::from_samples(&s1.integrand).std_error * diag.horizon / s1.s_value;
    let finite = s1.s_value.is_finite() && s1.s_value >= 0.0;
    let mut c = Check::at_most("regularity_finite", s1.s_value, f64::MAX, 0.0)
        .with_note(format!("S_T with q = {}, gamma = {}, {} states", d.q, d.gamma(), n));
    c.passed = finite;
    bundle.checks.push(c);
    bundle.checks.push(
        Check::at_most("regularity_points_doubling", (s2.s_value / s1.s_value - 1.0).abs(), 0.1, rel_se)
            .with_note(format!("S_T {:.6e} -> {:.6e}", s1.s_value, s2.s_value)),
    );
    bundle.checks.push(
        Check::at_most("regularity_nodes_doubling", (s3.s_value / s1.s_value - 1.0).abs(), 0.1, 0.0)
            .with_note(format!("Gauss-Hermite {gh} -> {}: S_T {:.6e} -> {:.6e}", 2 * gh, s1.s_value, s3.s_value)),
    );
    bundle.series.push(series(
        "regularity_partial_sums",
        s1.partial_sums.iter().enumerate().map(|(k, v)| ((k + 1) as f64, Estimate::exact(*v))),
    ));
    let zero = solve_vector(op, &ZeroDrift(m), lambda, opts).at("kolmogorov", "solve_vector")?;
    let z = regularity_functional(op, &zero, &few, &diag).at("kolmogorov", "regularity_functional")?;
    bundle.checks.push(Check::at_most("regularity_zero_drift", z.s_value, 0.0, 0.0));
    let mut header = mode_header("x_", m);
    header.push("integrand".into());
    let rows = few
        .iter()
        .zip(&s1.integrand)
        .map(|(x, v)| {
            let mut r = x.clone();
            r.push(*v);
            r
        })
        .collect();
    bundle.tables.push(Table { name: "regularity_states".into(), header, rows });
    Ok(())
}
