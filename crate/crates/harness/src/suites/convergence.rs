//! Grid-refinement studies: the curvature-identity oracle equivalences at
//! spectral rate, the travelling-wave temporal order, and the identity
//! residual stack under refinement.

use anyhow::Result;

use minsurf_core::geometry::{
    variation_residuals, AnalyticImmersion, Foliation31, FrameHistory, GeometrySnapshot,
    SnapshotStencil,
};
use minsurf_core::spectral::TorusGrid;

use crate::config::RunConfig;
use crate::gen::{profile, traveling_wave_state};
use crate::report::{Check, SuiteOutcome, Table};

/// Curvature two-route residuals on an analytic immersion over doubling
/// grids; `dt ∝ 1/N` so the frame-dependent stencil terms refine together
/// with the spatial truncation.
fn curvature_study(
    imm: &AnalyticImmersion,
    ns: &[usize],
    dt0: f64,
    n0: usize,
) -> Result<Vec<(f64, f64, f64, f64)>> {
    let mut rows = Vec::new();
    for &n in ns {
        let dt = dt0 * n0 as f64 / n as f64;
        let grid = TorusGrid::new(imm.spatial_dim, n, dt * 5.0, 5);
        let hist = imm.history(grid, 0.0, dt, 5);
        let frames = FrameHistory::from_reference(&hist).map_err(anyhow::Error::msg)?;
        let snaps: Vec<GeometrySnapshot> = (0..5)
            .map(|s| GeometrySnapshot::compute(&hist, &frames, s))
            .collect::<Result<Vec<_>, _>>()
            .map_err(anyhow::Error::msg)?;
        let fols: Vec<Foliation31> = snaps
            .iter()
            .map(Foliation31::from_snapshot)
            .collect::<Result<Vec<_>, _>>()
            .map_err(anyhow::Error::msg)?;
        let stencil = SnapshotStencil::new(snaps, 2, hist.dt()).map_err(anyhow::Error::msg)?;
        let (_, _, gauss) = stencil.center().curvature_two_ways();
        let (_, _, ricci, _) = stencil.normal_curvature_two_ways();
        let (_, codazzi) = stencil.codazzi_residual();
        let vr = variation_residuals(&stencil, &fols).map_err(anyhow::Error::msg)?;
        let vtot = vr.dt_gbar + vr.dt_h + vr.dt_gammabar + vr.gauss_3p1 + vr.codazzi_3p1;
        rows.push((gauss, ricci, codazzi, vtot));
    }
    Ok(rows)
}

pub fn run(cfg: &RunConfig) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("convergence", &cfg.hash(), cfg.seed);

    // ---- curvature oracle equivalence, d = 2, codim 2, N = 16 → 32 → 64 ----
    let imm = AnalyticImmersion::random(2, 2, 0.12, 2, 3, cfg.seed);
    let ns = [16usize, 32, 64];
    let rows = curvature_study(&imm, &ns, 0.02, 16)?;
    out.tables.push(Table {
        name: "curvature_residuals".into(),
        columns: vec![
            "n".into(),
            "gauss".into(),
            "ricci".into(),
            "codazzi".into(),
            "variation".into(),
        ],
        rows: rows
            .iter()
            .zip(&ns)
            .map(|(r, &n)| vec![n as f64, r.0, r.1, r.2, r.3])
            .collect(),
    });
    let floor = 1e-10;
    for (label, pick) in [
        ("gauss", 0usize),
        ("ricci", 1),
        ("codazzi", 2),
    ] {
        let series: Vec<f64> = rows
            .iter()
            .map(|r| [r.0, r.1, r.2, r.3][pick])
            .collect();
        let mut worst_ratio = f64::INFINITY;
        for w in series.windows(2) {
            if w[1] > floor {
                worst_ratio = worst_ratio.min(w[0] / w[1]);
            }
        }
        if worst_ratio.is_infinite() {
            // every refined level is already at the floor
            out.checks.push(Check::le(
                "convergence",
                &format!("{label}_floor"),
                *series.last().unwrap(),
                floor,
                format!("series {series:?}"),
            ));
        } else {
            out.checks.push(Check::ge(
                "convergence",
                &format!("{label}_ratio_per_doubling"),
                worst_ratio,
                10.0,
                format!("series {series:?}"),
            ));
        }
    }

    // ---- travelling-wave temporal order, d = 1, N = 64 ----
    let grid = TorusGrid::spatial(1, 64);
    let state = traveling_wave_state(&grid, 0.1);
    let period = 2.0 * std::f64::consts::PI;
    let exact = state.f.clone();
    let mut errs = Vec::new();
    let steps_list = [128usize, 256, 512];
    for &steps in &steps_list {
        let dt = period / steps as f64;
        let run = state.run(dt, steps, steps, 0.9).map_err(anyhow::Error::msg)?;
        errs.push(run.f.last().unwrap().sub(&exact).max_abs());
    }
    out.tables.push(Table {
        name: "traveling_wave_errors".into(),
        columns: vec!["steps".into(), "linf_error".into()],
        rows: steps_list.iter().zip(&errs).map(|(&s, &e)| vec![s as f64, e]).collect(),
    });
    let order1 = (errs[0] / errs[1]).log2();
    let order2 = (errs[1] / errs[2]).log2();
    let fitted = 0.5 * (order1 + order2);
    out.checks.push(Check::near(
        "convergence",
        "traveling_wave_temporal_order",
        fitted,
        4.0,
        0.3,
        format!("orders {order1:.3}, {order2:.3}"),
    ));

    // spatial error floor: the profile is band-limited, so the sole spatial
    // error is roundoff — measure the equation residual of the initial data
    let rhs = minsurf_core::evolution::scalar_rhs(&state.f, &state.df).map_err(anyhow::Error::msg)?;
    let fxx = state.f.derivative(0).derivative(0);
    let spatial_floor = rhs.sub(&fxx).max_abs();
    out.checks.push(Check::le(
        "convergence",
        "traveling_wave_spatial_floor",
        spatial_floor,
        1e-11,
        "null wave reduces to the linear equation".into(),
    ));
    let _ = profile(0.0, 0.1);

    Ok(out)
}
