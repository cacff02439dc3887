use spdelab_core::gaussian::{integrability_scan, kernel_lp_norm, Integrability};
use spdelab_core::stats::Estimate;
use spdelab_core::SpectralOperator;

use super::series;
use crate::config::ExperimentConfig;
use crate::report::{Bundle, Check};
use crate::{At, LabError};

const SCAN_CASES: [(usize, f64); 6] = [(1, 1.5), (2, 2.0), (3, 4.0), (4, 1.5), (5, 2.0), (8, 1.2)];

/// Closed-form kernel norms on the configured spectrum's first mode and
/// integrability verdicts against the small-time slope `−d(½ − 1/(2p′))`.
pub(super) fn run(cfg: &ExperimentConfig) -> Result<Bundle, LabError> {
    let op = super::build_operator(cfg)?.truncate(1).at("spectrum", "truncate")?;
    let l = op.eigenvalue(0);
    let mut bundle = Bundle::default();

    let worst = [1e-4, 0.1, 1.0, 5.0]
        .iter()
        .map(|t| kernel_lp_norm(&op, *t, 1.0).map(|v| (v - 1.0).abs()))
        .collect::<Result<Vec<_>, _>>()
        .at("gaussian", "kernel_lp_norm")?
        .into_iter()
        .fold(0.0, f64::max);
    bundle.checks.push(Check::at_most("kernel_norm_p1", worst, 0.0, 0.0));

    // e^{−2λt} = ½: ‖k_t‖_{L²(μ)} = (1 − a²)^{−1/4} with a = ½
    let t_half = std::f64::consts::LN_2 / (2.0 * l);
    let v = kernel_lp_norm(&op, t_half, 2.0).at("gaussian", "kernel_lp_norm")?;
    let want = (4.0f64 / 3.0).powf(0.25);
    bundle.checks.push(
        Check::at_most("kernel_norm_p2", (v - want).abs(), 1e-12, 0.0).with_note(format!("{v:.15} vs {want:.15}")),
    );

    for (d, p) in SCAN_CASES {
        let eig: Vec<f64> = (1..=d).map(|k| (k * k) as f64).collect();
        let op_d = SpectralOperator::new(eig, op.delta()).at("spectrum", "new")?;
        let r = integrability_scan(&op_d, p, 1.0).at("gaussian", "integrability_scan")?;
        let slope = -(d as f64) * (0.5 - 0.5 / p);
        let expected = if slope > -1.0 { Integrability::Finite } else { Integrability::Divergent };
        let mut c = Check::at_most(format!("scan_d{d}_p{p}"), (r.slope - slope).abs(), 1e-2, 0.0)
            .with_note(format!("verdict {:?}, expected {expected:?}, slope {:.5}", r.verdict, r.slope));
        c.passed &= r.verdict == expected;
        bundle.checks.push(c);
    }

    let times: Vec<f64> = (0..24).map(|i| 10f64.powf(-6.0 + 0.25 * i as f64)).collect();
    let norms = times
        .iter()
        .map(|t| kernel_lp_norm(&op, *t, 2.0).map(|v| (*t, Estimate::exact(v))))
        .collect::<Result<Vec<_>, _>>()
        .at("gaussian", "kernel_lp_norm")?;
    bundle.series.push(series("kernel_norm_p2_vs_t", norms));
    Ok(bundle)
}
