//! Gauge-flow suite: evolve generic product-gauge data, run the
//! gauge-fixing flow, measure balanced residuals before and after, the
//! derived-equation residuals on the gauged output, and the
//! frequency-projected divergence checks.

use anyhow::{bail, Result};

use minsurf_core::evolution::ParametricState;
use minsurf_core::gauge::{
    balanced_residuals, derived_gauge_equation_residuals, run_gauge_flow, transformed_history,
    wedge_divergence_check, Background, FlowConfig, GaugeHistory,
};
use minsurf_core::geometry::{FrameHistory, SnapshotStencil};
use minsurf_core::spectral::TorusGrid;

use crate::config::{DataSpec, RunConfig};
use crate::gen::generate_data;
use crate::report::{Check, SuiteOutcome, Table};

pub struct GaugeRunSummary {
    pub before: minsurf_core::gauge::BalancedResiduals,
    pub after: minsurf_core::gauge::BalancedResiduals,
    pub derived: minsurf_core::gauge::DerivedEquationResiduals,
    pub wedge_projected: f64,
    pub wedge_scale: f64,
    pub psi0_identity: f64,
    pub u0_identity: f64,
}

/// One full before/after measurement at the given resolution.
pub fn measure(cfg: &RunConfig, n: usize, flow_steps: usize) -> Result<GaugeRunSummary> {
    let grid = TorusGrid::spatial(cfg.dim, n);
    let mut c = cfg.clone();
    c.n = n;
    if !matches!(c.data, DataSpec::Perturbation { .. }) {
        c.data = DataSpec::Perturbation { seed: cfg.seed, amplitude: 1e-3, kmax: 2 };
    }
    let (data, _dsize) = generate_data(&c)?;

    // generic product-gauge development: ∂₀Y|₀ = n̄
    let state = ParametricState {
        grid: grid.clone(),
        codim: cfg.codim,
        disp: data.ybar_disp.clone(),
        dy0: data.nbar.clone(),
    };
    let bg_dt = cfg.dt;
    let t_bg = cfg.flow_time + 4.0 * bg_dt;
    let bg_steps = (t_bg / bg_dt).ceil() as usize;
    let hist = state.run(bg_dt, bg_steps, 1, 0.9).map_err(anyhow::Error::msg)?;
    let frames = FrameHistory::from_reference(&hist).map_err(anyhow::Error::msg)?;

    let flow_dt = cfg.flow_time / flow_steps as f64;
    let t_probe = cfg.flow_time - (2.0 * bg_dt).max(2.5 * flow_dt);
    let nearest = |times: &[f64], t: f64| -> usize {
        times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().partial_cmp(&(b.1 - t).abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap()
    };
    let before_idx = nearest(&hist.times, t_probe).clamp(2, hist.len() - 3);
    let gh_before =
        GaugeHistory::build_window(&hist, &frames, before_idx.saturating_sub(2), 5)
            .map_err(anyhow::Error::msg)?;
    let wb = before_idx - before_idx.saturating_sub(2);
    let before = balanced_residuals(
        &gh_before.snaps[wb],
        &gh_before.fols[wb],
        &gh_before.fnat_tilde[wb],
        &gh_before.fperp_tilde[wb],
    );

    // the flow
    let bg = Background::from_history(&hist, &frames).map_err(anyhow::Error::msg)?;
    let fc = FlowConfig {
        t_flow: cfg.flow_time,
        steps: flow_steps,
        elliptic_tol: 1e-11,
        corrector_passes: 1,
    };
    let out = run_gauge_flow(&bg, &fc).map_err(anyhow::Error::msg)?;

    // initial conditions are exact by construction; measure them anyway
    let s0 = &out.states[0];
    let psi0_identity =
        s0.phi.iter().map(|f| f.max_abs()).fold(0.0f64, f64::max);
    let u0_identity = s0
        .v
        .iter()
        .flatten()
        .map(|f| f.max_abs())
        .fold(0.0f64, f64::max)
        .max(s0.m_mat.iter().flatten().map(|v| v.abs()).fold(0.0f64, f64::max));

    let (thist, tframes) = transformed_history(&bg, &out, 1).map_err(anyhow::Error::msg)?;
    if thist.len() < 5 {
        bail!("flow too short to probe interior slices");
    }
    let after_idx = nearest(&thist.times, t_probe).clamp(2, thist.len() - 3);
    let gh_after = GaugeHistory::build_window(&thist, &tframes, after_idx - 2, 5)
        .map_err(anyhow::Error::msg)?;
    let after = balanced_residuals(
        &gh_after.snaps[2],
        &gh_after.fols[2],
        &gh_after.fnat_tilde[2],
        &gh_after.fperp_tilde[2],
    );
    let derived =
        derived_gauge_equation_residuals(&gh_after, 2, 1e-11).map_err(anyhow::Error::msg)?;

    // wedge divergence check on the gauged output
    let snaps = gh_after.snaps;
    let dt = thist.dt();
    let stencil = SnapshotStencil::new(snaps, 2, dt).map_err(anyhow::Error::msg)?;
    let wc = wedge_divergence_check(&stencil, 2, 2).map_err(anyhow::Error::msg)?;

    Ok(GaugeRunSummary {
        before,
        after,
        derived,
        wedge_projected: wc.projected_codazzi,
        wedge_scale: wc.codazzi_scale,
        psi0_identity,
        u0_identity,
    })
}

pub fn run(cfg: &RunConfig) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("gauge_flow", &cfg.hash(), cfg.seed);
    let summary = measure(cfg, cfg.n, cfg.flow_steps)?;

    out.tables.push(Table {
        name: "balanced_before_after".into(),
        columns: vec![
            "which".into(),
            "lapse".into(),
            "shift".into(),
            "frame".into(),
            "lapse_mean".into(),
            "shift_mean".into(),
            "frame_mean".into(),
        ],
        rows: vec![
            vec![
                0.0,
                summary.before.lapse,
                summary.before.shift,
                summary.before.frame,
                summary.before.lapse_mean,
                summary.before.shift_mean,
                summary.before.frame_mean,
            ],
            vec![
                1.0,
                summary.after.lapse,
                summary.after.shift,
                summary.after.frame,
                summary.after.lapse_mean,
                summary.after.shift_mean,
                summary.after.frame_mean,
            ],
        ],
    });

    out.checks.push(Check::le(
        "gauge_flow",
        "psi_initial_identity",
        summary.psi0_identity,
        0.0,
        "Ψ|₀ = Id exactly".into(),
    ));
    out.checks.push(Check::le(
        "gauge_flow",
        "u_initial_identity",
        summary.u0_identity,
        0.0,
        "U|₀ = 𝕀 exactly".into(),
    ));
    for (name, b, a) in [
        ("lapse", summary.before.lapse, summary.after.lapse),
        ("shift", summary.before.shift, summary.after.shift),
        ("frame", summary.before.frame, summary.after.frame),
    ] {
        out.checks.push(Check::ge(
            "gauge_flow",
            &format!("{name}_reduction_factor"),
            b / a.max(1e-300),
            10.0,
            format!("{b:.3e} → {a:.3e}"),
        ));
    }
    out.checks.push(Check::le(
        "gauge_flow",
        "wedge_projected_codazzi",
        summary.wedge_projected,
        8.0 * summary.wedge_scale.max(1e-13),
        format!("scale {:.3e}", summary.wedge_scale),
    ));
    out.checks.push(Check::le(
        "gauge_flow",
        "derived_equations_total",
        summary.derived.total(),
        10.0 * (summary.after.lapse + summary.after.shift + summary.after.frame) + 1e-4,
        format!("{:?}", summary.derived),
    ));

    Ok(out)
}
