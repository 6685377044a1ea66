use std::sync::Arc;

use crate::geometry::{FrameHistory, GeometrySnapshot, SnapshotStencil};
use crate::spectral::{SpectralField, TorusGrid};

use super::*;

/// Band-limited periodic profile for travelling-wave tests.
fn profile(u: f64) -> f64 {
    0.08 * u.cos() + 0.04 * (2.0 * u).sin() + 0.02 * (3.0 * u + 0.4).cos()
}

fn profile_d1(u: f64) -> f64 {
    -0.08 * u.sin() + 0.08 * (2.0 * u).cos() - 0.06 * (3.0 * u + 0.4).sin()
}

fn traveling_wave_state(grid: &Arc<TorusGrid>) -> ScalarState {
    let f = SpectralField::from_fn(grid.clone(), |x| profile(x[0]));
    let df = SpectralField::from_fn(grid.clone(), |x| -profile_d1(x[0]));
    ScalarState::new(f, df)
}

#[test]
fn scalar_rhs_constant_and_null_wave() {
    let grid = TorusGrid::spatial(1, 64);
    let c = SpectralField::constant(grid.clone(), 0.7);
    let z = SpectralField::zeros(grid.clone());
    let rhs = scalar_rhs(&c, &z).unwrap();
    assert!(rhs.max_abs() < 1e-14, "constant state must be static");

    // null traveling wave: equation reduces to the linear wave equation,
    // so ∂₀²f = ∂₁²f exactly
    let state = traveling_wave_state(&grid);
    let rhs = scalar_rhs(&state.f, &state.df).unwrap();
    let fxx = state.f.derivative(0).derivative(0);
    assert!(
        rhs.sub(&fxx).max_abs() < 1e-12,
        "null wave does not reduce to the linear equation: {:e}",
        rhs.sub(&fxx).max_abs()
    );
}

#[test]
fn scalar_traveling_wave_temporal_order_four() {
    let grid = TorusGrid::spatial(1, 64);
    let state = traveling_wave_state(&grid);
    let period = 2.0 * std::f64::consts::PI;
    let exact = state.f.clone();
    let mut errs = Vec::new();
    for &steps in &[128usize, 256, 512] {
        let dt = period / steps as f64;
        let run = state.run(dt, steps, steps, 0.9).unwrap();
        let err = run.f.last().unwrap().sub(&exact).max_abs();
        errs.push(err);
    }
    let o1 = (errs[0] / errs[1]).log2();
    let o2 = (errs[1] / errs[2]).log2();
    assert!(
        (o1 - 4.0).abs() < 0.3 && (o2 - 4.0).abs() < 0.3,
        "fitted temporal orders {o1:.2}, {o2:.2} (errors {errs:?})"
    );
}

#[test]
fn scalar_small_amplitude_deviation_is_cubic() {
    // deviation from the linear wave solution scales like ε³ (the
    // nonlinearity is cubic); fit the slope over a decade
    let grid = TorusGrid::spatial(1, 32);
    let steps = 64usize;
    let t_end = 1.0;
    let dt = t_end / steps as f64;
    let mut devs = Vec::new();
    let eps_list = [1e-2, 3e-3, 1e-3];
    for &eps in &eps_list {
        let f = SpectralField::from_fn(grid.clone(), |x| eps * x[0].cos());
        let df = SpectralField::zeros(grid.clone());
        let run = ScalarState::new(f, df).run(dt, steps, steps, 0.9).unwrap();
        // linear solution ε cos(x) cos(t)
        let lin = SpectralField::from_fn(grid.clone(), move |x| eps * x[0].cos() * t_end.cos());
        devs.push(run.f.last().unwrap().sub(&lin).max_abs());
    }
    let slope = (devs[0] / devs[2]).ln() / (eps_list[0] / eps_list[2]).ln();
    assert!(
        (slope - 3.0).abs() < 0.4,
        "nonlinear deviation slope {slope:.2} (deviations {devs:?})"
    );
}

#[test]
fn parametric_flat_fixed_point() {
    let grid = TorusGrid::spatial(2, 16);
    let state = ParametricState::flat(grid.clone(), 1);
    let rhs = parametric_rhs(&state).unwrap();
    for f in &rhs {
        assert!(f.max_abs() < 1e-14);
    }
    let dt = 0.05;
    let mut s = state;
    for _ in 0..20 {
        s = s.step(dt, 0.9).unwrap();
    }
    for a in 0..s.ambient_dim() {
        assert!(s.disp[a].max_abs() < 1e-13, "flat drifted in component {a}");
    }
}

#[test]
fn lifted_traveling_wave_solves_parametric_system() {
    // each component of the lift satisfies the null-gradient-reduced wave
    // equation, so the rhs must equal the flat wave rhs componentwise
    let grid = TorusGrid::spatial(1, 64);
    let state = traveling_wave_state(&grid);
    let (pstate, frame) = lift_graph(&state);
    let rhs = parametric_rhs(&pstate).unwrap();
    for a in 0..pstate.ambient_dim() {
        let expect = pstate.disp[a].derivative(0).derivative(0);
        assert!(
            rhs[a].sub(&expect).max_abs() < 1e-11,
            "component {a}: {:e}",
            rhs[a].sub(&expect).max_abs()
        );
    }
    // frame is the normalized stated normal
    let na = pstate.ambient_dim();
    let mut nn = SpectralField::zeros(grid.clone());
    for a in 0..na {
        let eta = if a == 0 { -1.0 } else { 1.0 };
        nn = nn.add(&frame.e[0][a].mul(&frame.e[0][a]).scale(eta));
    }
    assert!(nn.map(|v| v - 1.0).max_abs() < 1e-12, "unit spacelike normal");
}

#[test]
fn lifted_traveling_wave_minimality_trace_small() {
    let grid = TorusGrid::spatial(1, 64);
    let state = traveling_wave_state(&grid);
    let (pstate, _) = lift_graph(&state);
    let hist = pstate.run(0.01, 8, 2, 0.9).unwrap();
    let frames = FrameHistory::from_reference(&hist).unwrap();
    let snap = GeometrySnapshot::compute(&hist, &frames, 2).unwrap();
    let trace = snap.minimality_trace();
    assert!(trace[0].max_abs() < 1e-9, "trace {:e}", trace[0].max_abs());
}

#[test]
fn time_reversal_within_step_order() {
    let grid = TorusGrid::spatial(1, 32);
    let state = traveling_wave_state(&grid);
    for &dt in &[0.02, 0.01] {
        let fwd = state.step(dt, 0.9).unwrap();
        let back = fwd.step(-dt, 0.9).unwrap();
        let err = back.f.sub(&state.f).max_abs() + back.df.sub(&state.df).max_abs();
        assert!(
            err < 10.0 * dt.powi(4),
            "round trip error {err:e} at dt={dt}"
        );
    }
}

#[test]
fn initial_data_flat_pair() {
    let grid = TorusGrid::spatial(2, 16);
    let data = InitialData::flat(grid.clone(), 1);
    let (state, report) = initial_data_from_pair(&data, 1e-10).unwrap();
    assert!(report.lapse_deviation < 1e-12);
    assert!(report.shift_size < 1e-12);
    // ∂₀Y = n̄₀ = (1; 0; 0)
    assert!(state.dy0[0].map(|v| v - 1.0).max_abs() < 1e-12);
    for a in 1..state.ambient_dim() {
        assert!(state.dy0[a].max_abs() < 1e-12);
    }
}

#[test]
fn initial_data_rejects_bad_normal() {
    let grid = TorusGrid::spatial(1, 16);
    let mut data = InitialData::flat(grid.clone(), 1);
    // m(n̄,n̄) = −1 + 0.1
    data.nbar[0] = SpectralField::constant(grid.clone(), (0.9f64).sqrt());
    match initial_data_from_pair(&data, 1e-10) {
        Err(crate::error::CoreError::DataConstraint(_)) => {}
        other => panic!("expected constraint rejection, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn initial_data_scaling_in_amplitude() {
    let grid = TorusGrid::spatial(2, 16);
    let mut sizes = Vec::new();
    for &eps in &[1e-2, 1e-3, 1e-4] {
        let mut data = InitialData::flat(grid.clone(), 1);
        let na = data.ambient_dim();
        for a in 1..na {
            data.ybar_disp[a] = SpectralField::from_fn(grid.clone(), move |x| {
                eps * ((x[0] + a as f64).cos() + 0.7 * (x[1] - 0.3 * a as f64).sin())
            });
        }
        data.nbar[2] = SpectralField::from_fn(grid.clone(), move |x| eps * (x[0] + x[1]).cos());
        data.enforce_constraints().unwrap();
        let (res_n, res_u) = data.constraint_residuals();
        assert!(res_n < 1e-12 && res_u < 1e-12, "projection enforces constraints");
        let (_, report) = initial_data_from_pair(&data, 1e-10).unwrap();
        sizes.push((report.lapse_deviation + report.shift_size) / eps);
    }
    let spread = sizes.iter().cloned().fold(0.0f64, f64::max)
        / sizes.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 3.0, "‖N−1‖+‖β‖ not linear in ε: {sizes:?}");
}

fn evolved_stencil_codim(n: usize, dt: f64, eps: f64, seed: u64, codim: usize) -> SnapshotStencil {
    let grid = TorusGrid::spatial(2, n);
    let mut data = InitialData::flat(grid.clone(), codim);
    let na = data.ambient_dim();
    for a in 1..na {
        let s = seed + a as u64;
        data.ybar_disp[a] = SpectralField::from_fn(grid.clone(), move |x| {
            eps * ((x[0] * 1.0 + s as f64).cos() + 0.6 * (x[1] + 0.2 * s as f64).sin())
        });
    }
    data.enforce_constraints().unwrap();
    let (state, _) = initial_data_from_pair(&data, 1e-9).unwrap();
    let hist = state.run(dt, 4, 1, 0.9).unwrap();
    let frames = FrameHistory::from_reference(&hist).unwrap();
    let snaps: Vec<_> = (0..5)
        .map(|s| GeometrySnapshot::compute(&hist, &frames, s).unwrap())
        .collect();
    SnapshotStencil::new(snaps, 2, hist.dt()).unwrap()
}

fn evolved_stencil(n: usize, dt: f64, eps: f64, seed: u64) -> SnapshotStencil {
    evolved_stencil_codim(n, dt, eps, seed, 1)
}

#[test]
fn k_wave_residual_flat_zero() {
    let grid = TorusGrid::new(2, 8, 0.05, 4);
    let hist = crate::geometry::ImmersionHistory::flat(grid, 1);
    let frames = FrameHistory::from_reference(&hist).unwrap();
    let snaps: Vec<_> = (0..5)
        .map(|s| GeometrySnapshot::compute(&hist, &frames, s).unwrap())
        .collect();
    let stencil = SnapshotStencil::new(snaps, 2, hist.dt()).unwrap();
    let (_, worst) = k_wave_residual(&stencil).unwrap();
    assert!(worst < 1e-12, "flat k-wave residual {worst:e}");
}

#[test]
fn k_wave_residual_decays_under_refinement() {
    let r_coarse = {
        let stencil = evolved_stencil(12, 0.02, 1e-3, 3);
        k_wave_residual(&stencil).unwrap().1
    };
    let r_fine = {
        let stencil = evolved_stencil(24, 0.01, 1e-3, 3);
        k_wave_residual(&stencil).unwrap().1
    };
    assert!(
        r_fine < r_coarse / 4.0,
        "k-wave residual did not decay: {r_coarse:e} → {r_fine:e}"
    );
}

#[test]
fn k_wave_residual_traceful_negative_control() {
    // non-minimal immersions (random analytic, not evolved) violate the
    // trace-free assumption: residual scales with the trace
    use crate::geometry::AnalyticImmersion;
    let mut resids = Vec::new();
    let mut traces = Vec::new();
    for &eps in &[2e-3, 2e-4] {
        let imm = AnalyticImmersion::random(2, 1, eps, 1, 2, 61);
        let grid = TorusGrid::new(2, 12, 0.05, 5);
        let hist = imm.history(grid, 0.0, 0.01, 5);
        let frames = FrameHistory::from_reference(&hist).unwrap();
        let snaps: Vec<_> = (0..5)
            .map(|s| GeometrySnapshot::compute(&hist, &frames, s).unwrap())
            .collect();
        let stencil = SnapshotStencil::new(snaps, 2, hist.dt()).unwrap();
        traces.push(stencil.center().minimality_trace()[0].max_abs());
        resids.push(k_wave_residual(&stencil).unwrap().1);
    }
    let ratio = resids[0] / resids[1];
    let trace_ratio = traces[0] / traces[1];
    assert!(
        ratio > 0.3 * trace_ratio && ratio < 3.0 * trace_ratio,
        "residual response {ratio:.2} vs trace response {trace_ratio:.2}"
    );
}

#[test]
fn scalar_parametric_describe_same_surface() {
    // evolve f and its lift; reconstruct f̃(t,x) = Y^last(t, σ⁻¹(x)) and
    // compare (d = 1 keeps the σ-inversion cheap)
    let grid = TorusGrid::spatial(1, 32);
    let state = traveling_wave_state(&grid);
    let dt = 0.01;
    let steps = 20usize;
    let srun = state.run(dt, steps, steps, 0.9).unwrap();
    let (pstate, _) = lift_graph(&state);
    let hist = pstate.run(dt, steps, steps, 0.9).unwrap();
    let last = hist.slice(hist.len() - 1);

    // invert σ(x) = x + disp¹(x) by Newton per grid point
    let sigma_disp = &last.disp[1];
    let graph_comp = &last.disp[2];
    let f_scalar = srun.f.last().unwrap();
    let mut worst = 0.0f64;
    let mut p = vec![0.0; 1];
    for flat in 0..grid.len() {
        grid.point(flat, &mut p);
        let target = p[0];
        let mut x = target;
        for _ in 0..30 {
            let val = x + sigma_disp.eval_at(&[x]) - target;
            // dσ/dx = 1 + d(disp)/dx
            let der = 1.0 + sigma_disp.derivative(0).eval_at(&[x]);
            x -= val / der;
        }
        let f_tilde = graph_comp.eval_at(&[x]);
        worst = worst.max((f_tilde - f_scalar.values()[flat]).abs());
    }
    assert!(worst < 1e-6, "scalar/parametric sup difference {worst:e}");
}
