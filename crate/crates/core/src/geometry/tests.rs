
use crate::spectral::{SpectralField, TorusGrid};

use super::*;

fn flat_setup(dim: usize, n: usize, codim: usize) -> (ImmersionHistory, FrameHistory) {
    let grid = TorusGrid::new(dim, n, 0.1, 8);
    let hist = ImmersionHistory::flat(grid, codim);
    let frames = FrameHistory::from_reference(&hist).unwrap();
    (hist, frames)
}

fn analytic_setup(
    imm: &AnalyticImmersion,
    n: usize,
    dt: f64,
    slices: usize,
) -> (ImmersionHistory, FrameHistory) {
    let grid = TorusGrid::new(imm.spatial_dim, n, dt * slices as f64, slices);
    let hist = imm.history(grid, 0.0, dt, slices);
    let frames = FrameHistory::from_reference(&hist).unwrap();
    (hist, frames)
}

/// 4th-order central finite differences of the analytic immersion — the
/// independent oracle for every derivative entering `g`, `Γ`, `k`.
fn fd_dy(imm: &AnalyticImmersion, a: usize, alpha: usize, t: f64, x: &[f64], h: f64) -> f64 {
    let eval = |t: f64, x: &[f64]| imm.eval_y(a, t, x);
    let mut xp = x.to_vec();
    let mut sample = |s: f64| -> f64 {
        if alpha == 0 {
            eval(t + s, x)
        } else {
            xp.copy_from_slice(x);
            xp[alpha - 1] += s;
            eval(t, &xp)
        }
    };
    (-sample(2.0 * h) + 8.0 * sample(h) - 8.0 * sample(-h) + sample(-2.0 * h)) / (12.0 * h)
}

#[test]
fn flat_immersion_metric_is_minkowski() {
    let (hist, frames) = flat_setup(2, 16, 1);
    let snap = GeometrySnapshot::compute(&hist, &frames, 4).unwrap();
    for al in 0..snap.dd {
        for be in 0..snap.dd {
            let expect = if al != be {
                0.0
            } else if al == 0 {
                -1.0
            } else {
                1.0
            };
            let err = snap.g[al][be].map(|v| v - expect).max_abs();
            assert!(err < 1e-13, "g[{al}][{be}] off flat by {err:e}");
        }
    }
    // k = 0, ω = 0, Γ = 0
    for abar in 0..snap.codim {
        for al in 0..snap.dd {
            for be in 0..snap.dd {
                assert!(snap.k[abar][al][be].max_abs() < 1e-13);
            }
        }
    }
    for al in 0..snap.dd {
        for i in 0..snap.codim {
            for j in 0..snap.codim {
                assert!(snap.omega[al][i][j].max_abs() < 1e-13);
            }
        }
    }
}

#[test]
fn static_graph_metric_and_k() {
    // Y = (t, x, f(x)) with f(x) = 0.3 cos x + 0.1 sin 2x
    let modes = vec![
        Mode { amp: 0.3, omega: 0.0, k: [1, 0, 0], phase: 0.0 },
        Mode { amp: 0.1, omega: 0.0, k: [2, 0, 0], phase: -std::f64::consts::FRAC_PI_2 },
    ];
    let imm = AnalyticImmersion::static_graph(1, modes);
    let (hist, frames) = analytic_setup(&imm, 64, 0.01, 5);
    let snap = GeometrySnapshot::compute(&hist, &frames, 2).unwrap();

    let grid = snap.grid.clone();
    let fp = SpectralField::from_fn(grid.clone(), |x| {
        -0.3 * x[0].sin() + 0.2 * (2.0 * x[0]).cos()
    });
    let fpp = SpectralField::from_fn(grid.clone(), |x| {
        -0.3 * x[0].cos() - 0.4 * (2.0 * x[0]).sin()
    });

    // g = diag(−1, 1 + f′²)
    assert!(snap.g[0][0].map(|v| v + 1.0).max_abs() < 1e-12);
    assert!(snap.g[0][1].max_abs() < 1e-12);
    let gxx = fp.map(|v| 1.0 + v * v);
    assert!(snap.g[1][1].sub(&gxx).max_abs() < 1e-11);

    // k in the unit-normalized graph frame: k_xx = f″/√(1+f′²), k_0· = 0.
    // The reference frame construction is not normalized, so normalize here.
    let norm = snap.gram[0][0].map(f64::sqrt);
    let k_unit = snap.k[0][1][1].mul(&norm);
    let expect = fpp.zip(&fp, |pp, p| pp / (1.0 + p * p).sqrt());
    assert!(k_unit.sub(&expect).max_abs() < 1e-10, "k_xx hand formula");
    assert!(snap.k[0][0][0].max_abs() < 1e-11);
    assert!(snap.k[0][0][1].max_abs() < 1e-11);

    // minimality trace in the unit frame: f″/(1+f′²)^{3/2}
    let trace = snap.minimality_trace()[0].mul(&norm);
    let expect = fpp.zip(&fp, |pp, p| pp / (1.0 + p * p).powf(1.5));
    assert!(trace.sub(&expect).max_abs() < 1e-10, "trace hand formula");

    // product metric is flat: both curvature routes vanish
    let (_, _, resid) = snap.curvature_two_ways();
    assert!(resid < 1e-10);
    let r = snap.riemann_from_gamma();
    assert!(r[0][1][0][1].max_abs() < 1e-10, "R_0101 = 0 for the static graph");
}

#[test]
fn metric_matches_fd_oracle_on_random_immersion() {
    let imm = AnalyticImmersion::random(2, 1, 0.05, 2, 3, 7);
    let (hist, frames) = analytic_setup(&imm, 16, 0.02, 5);
    let snap = GeometrySnapshot::compute(&hist, &frames, 2).unwrap();
    let t = hist.times[2];
    let na = imm.ambient_dim();
    let target = hist.target;

    let h = 1e-3;
    let grid = snap.grid.clone();
    let mut worst = 0.0f64;
    let mut p = vec![0.0; grid.dim];
    for flat in (0..grid.len()).step_by(7) {
        grid.point(flat, &mut p);
        for al in 0..snap.dd {
            for be in 0..snap.dd {
                let mut u = vec![0.0; na];
                let mut v = vec![0.0; na];
                for a in 0..na {
                    u[a] = fd_dy(&imm, a, al, t, &p, h);
                    v[a] = fd_dy(&imm, a, be, t, &p, h);
                }
                let oracle = target.inner(&u, &v);
                let got = snap.g[al][be].values()[flat];
                worst = worst.max((got - oracle).abs());
            }
        }
    }
    // 4th-order FD oracle at step h: error O(h⁴) ~ 1e-12·scale
    assert!(worst < 1e-9, "metric vs FD oracle: {worst:e}");
}

#[test]
fn christoffel_projection_agrees_with_metric_route() {
    let imm = AnalyticImmersion::random(2, 2, 0.03, 2, 3, 11);
    let (hist, frames) = analytic_setup(&imm, 24, 0.01, 5);
    let snap = GeometrySnapshot::compute(&hist, &frames, 2).unwrap();
    let resid = snap.christoffel_projection_residual();
    assert!(resid < 1e-9, "two Christoffel routes differ by {resid:e}");
}

#[test]
fn projection_reconstruction_is_identity() {
    let imm = AnalyticImmersion::random(2, 2, 0.05, 2, 3, 13);
    let (hist, frames) = analytic_setup(&imm, 16, 0.02, 5);
    let snap = GeometrySnapshot::compute(&hist, &frames, 2).unwrap();
    assert!(snap.projection_reconstruction_residual(5) < 1e-12);
}

#[test]
fn symmetries_of_g_k_riemann() {
    let imm = AnalyticImmersion::random(2, 2, 0.05, 2, 3, 17);
    let (hist, frames) = analytic_setup(&imm, 16, 0.02, 5);
    let snap = GeometrySnapshot::compute(&hist, &frames, 2).unwrap();
    for al in 0..snap.dd {
        for be in 0..snap.dd {
            assert!(snap.g[al][be].sub(&snap.g[be][al]).max_abs() < 1e-12);
            for abar in 0..snap.codim {
                assert!(snap.k[abar][al][be].sub(&snap.k[abar][be][al]).max_abs() < 1e-12);
            }
        }
    }
    let r = snap.riemann_from_gamma();
    let scale = {
        let mut m = 0.0f64;
        for a in 0..snap.dd {
            for b in 0..snap.dd {
                for c in 0..snap.dd {
                    for e in 0..snap.dd {
                        m = m.max(r[a][b][c][e].max_abs());
                    }
                }
            }
        }
        m.max(1e-10)
    };
    for a in 0..snap.dd {
        for b in 0..snap.dd {
            for c in 0..snap.dd {
                for e in 0..snap.dd {
                    // antisymmetry in the first and last pairs, pair symmetry
                    let anti1 = r[a][b][c][e].add(&r[b][a][c][e]).max_abs();
                    let anti2 = r[a][b][c][e].add(&r[a][b][e][c]).max_abs();
                    let pair = r[a][b][c][e].sub(&r[c][e][a][b]).max_abs();
                    assert!(anti1 / scale < 1e-9, "first-pair antisymmetry");
                    assert!(anti2 / scale < 5e-7, "last-pair antisymmetry {:e}", anti2 / scale);
                    assert!(pair / scale < 5e-7, "pair exchange {:e}", pair / scale);
                }
            }
        }
    }
}

#[test]
fn curvature_two_ways_converges_spectrally() {
    let imm = AnalyticImmersion::random(2, 1, 0.04, 2, 3, 19);
    let mut resids = Vec::new();
    for &n in &[8usize, 16] {
        let (hist, frames) = analytic_setup(&imm, n, 0.02, 5);
        let snap = GeometrySnapshot::compute(&hist, &frames, 2).unwrap();
        let (_, _, resid) = snap.curvature_two_ways();
        resids.push(resid);
    }
    assert!(
        resids[1] < resids[0] / 10.0 || resids[1] < 1e-10,
        "Gauss residual did not drop: {resids:?}"
    );
}

#[test]
fn normal_curvature_codim_one_trivial() {
    let imm = AnalyticImmersion::random(1, 1, 0.05, 2, 2, 23);
    let grid = TorusGrid::new(1, 32, 0.05, 5);
    let hist = imm.history(grid, 0.0, 0.01, 6);
    let frames = FrameHistory::from_reference(&hist).unwrap();
    let snaps: Vec<_> = (0..5)
        .map(|s| GeometrySnapshot::compute(&hist, &frames, s).unwrap())
        .collect();
    let stencil = SnapshotStencil::new(snaps, 2, hist.dt()).unwrap();
    let (w, k, resid, trivial) = stencil.normal_curvature_two_ways();
    assert!(trivial);
    assert!(resid < 1e-10);
    assert!(w[0][0][0][1].max_abs() < 1e-10);
    assert!(k[0][0][0][1].max_abs() < 1e-10);
}

fn stencil_for(
    imm: &AnalyticImmersion,
    n: usize,
    dt: f64,
) -> (ImmersionHistory, SnapshotStencil) {
    let grid = TorusGrid::new(imm.spatial_dim, n, dt * 5.0, 5);
    let hist = imm.history(grid, 0.0, dt, 5);
    let frames = FrameHistory::from_reference(&hist).unwrap();
    let snaps: Vec<_> = (0..5)
        .map(|s| GeometrySnapshot::compute(&hist, &frames, s).unwrap())
        .collect();
    let dt = hist.dt();
    (hist, SnapshotStencil::new(snaps, 2, dt).unwrap())
}

#[test]
fn normal_curvature_two_ways_converges() {
    let imm = AnalyticImmersion::random(2, 2, 0.03, 1, 2, 29);
    let mut resids = Vec::new();
    for &(n, dt) in &[(8usize, 0.02), (16, 0.01)] {
        let (_h, stencil) = stencil_for(&imm, n, dt);
        let (_, _, resid, trivial) = stencil.normal_curvature_two_ways();
        assert!(!trivial);
        resids.push(resid);
    }
    assert!(
        resids[1] < resids[0] / 8.0 || resids[1] < 1e-10,
        "Ricci residual did not drop: {resids:?}"
    );
}

#[test]
fn codazzi_residual_flat_and_converging() {
    let (hist, frames) = flat_setup(2, 8, 1);
    let snaps: Vec<_> = (0..5)
        .map(|s| GeometrySnapshot::compute(&hist, &frames, s).unwrap())
        .collect();
    let stencil = SnapshotStencil::new(snaps, 2, hist.dt()).unwrap();
    let (_, worst) = stencil.codazzi_residual();
    assert!(worst < 1e-12, "flat Codazzi {worst:e}");

    let imm = AnalyticImmersion::random(2, 1, 0.03, 1, 2, 31);
    let mut resids = Vec::new();
    for &(n, dt) in &[(8usize, 0.02), (16, 0.01)] {
        let (_h, stencil) = stencil_for(&imm, n, dt);
        let (_, worst) = stencil.codazzi_residual();
        resids.push(worst);
    }
    assert!(
        resids[1] < resids[0] / 8.0 || resids[1] < 1e-10,
        "Codazzi residual did not drop: {resids:?}"
    );
}

#[test]
fn codazzi_negative_control_scales_linearly() {
    let imm = AnalyticImmersion::random(2, 1, 0.02, 1, 2, 37);
    let mut worsts = Vec::new();
    for &eps in &[1e-3, 1e-4] {
        let (hist, stencil_base) = stencil_for(&imm, 8, 0.01);
        let mut snaps = stencil_base.snaps;
        // corrupt k on the center slice
        let grid = hist.grid.clone();
        let noise = SpectralField::from_fn(grid.clone(), |x| {
            x[0].cos() + (2.0 * x[1]).sin()
        })
        .scale(eps);
        snaps[2].k[0][1][1] = snaps[2].k[0][1][1].add(&noise);
        let stencil = SnapshotStencil::new(snaps, 2, hist.dt()).unwrap();
        let (_, worst) = stencil.codazzi_residual();
        worsts.push(worst);
    }
    let ratio = worsts[0] / worsts[1];
    assert!(
        (ratio - 10.0).abs() < 2.0,
        "corruption response not linear: {worsts:?} ratio {ratio}"
    );
}

#[test]
fn foliation_flat_and_blocks() {
    let (hist, frames) = flat_setup(2, 16, 1);
    let snap = GeometrySnapshot::compute(&hist, &frames, 4).unwrap();
    let fol = Foliation31::from_snapshot(&snap).unwrap();
    assert!(fol.lapse.map(|v| v - 1.0).max_abs() < 1e-13);
    for i in 0..fol.d {
        assert!(fol.shift[i].max_abs() < 1e-13);
        for j in 0..fol.d {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!(fol.gbar[i][j].map(|v| v - expect).max_abs() < 1e-13);
            assert!(fol.h[i][j].max_abs() < 1e-13);
        }
    }
}

#[test]
fn foliation_reconstruction_and_inverse_blocks() {
    let imm = AnalyticImmersion::random(2, 1, 0.05, 2, 3, 41);
    let (hist, frames) = analytic_setup(&imm, 16, 0.02, 5);
    let snap = GeometrySnapshot::compute(&hist, &frames, 2).unwrap();
    let fol = Foliation31::from_snapshot(&snap).unwrap();
    assert!(fol.reconstruction_residual(&snap) < 1e-12);
    assert!(fol.inverse_block_residual(&snap) < 1e-11);
    assert!(fol.normal_residual(&snap) < 1e-11);
    assert!(fol.christoffel_table_residual(&snap) < 1e-10);
}

#[test]
fn variation_residuals_flat_and_converging() {
    // flat: identically zero
    let (hist, frames) = flat_setup(2, 8, 1);
    let snaps: Vec<_> = (0..5)
        .map(|s| GeometrySnapshot::compute(&hist, &frames, s).unwrap())
        .collect();
    let fols: Vec<_> = snaps.iter().map(|s| Foliation31::from_snapshot(s).unwrap()).collect();
    let stencil = SnapshotStencil::new(snaps, 2, hist.dt()).unwrap();
    let res = variation_residuals(&stencil, &fols).unwrap();
    assert!(res.dt_gbar < 1e-12 && res.dt_h < 1e-12 && res.dt_gammabar < 1e-12);
    assert!(res.gauss_3p1 < 1e-12 && res.codazzi_3p1 < 1e-12);

    // analytic immersion: residuals drop under combined refinement
    let imm = AnalyticImmersion::random(2, 1, 0.03, 1, 2, 43);
    let mut tot = Vec::new();
    for &(n, dt) in &[(8usize, 0.02), (16, 0.01)] {
        let grid = TorusGrid::new(2, n, dt * 5.0, 5);
        let hist = imm.history(grid, 0.0, dt, 5);
        let frames = FrameHistory::from_reference(&hist).unwrap();
        let snaps: Vec<_> = (0..5)
            .map(|s| GeometrySnapshot::compute(&hist, &frames, s).unwrap())
            .collect();
        let fols: Vec<_> =
            snaps.iter().map(|s| Foliation31::from_snapshot(s).unwrap()).collect();
        let stencil = SnapshotStencil::new(snaps, 2, hist.dt()).unwrap();
        let r = variation_residuals(&stencil, &fols).unwrap();
        tot.push(r.dt_gbar + r.dt_h + r.dt_gammabar + r.gauss_3p1 + r.codazzi_3p1);
    }
    assert!(tot[1] < tot[0] / 8.0 || tot[1] < 1e-10, "variation residuals: {tot:?}");
}

#[test]
fn frame_reference_flat_is_delta_and_scales_linearly() {
    let (hist, frames) = flat_setup(2, 8, 2);
    let f = &frames.slices[0];
    let d = 2;
    for abar in 0..2 {
        for a in 0..hist.target.ambient_dim {
            let expect = if a == d + 1 + abar { 1.0 } else { 0.0 };
            assert!(f.e[abar][a].map(|v| v - expect).max_abs() < 1e-13);
        }
    }

    // ‖e − δ‖ = O(ε)
    let mut sizes = Vec::new();
    for (i, &eps) in [1e-2, 1e-3, 1e-4].iter().enumerate() {
        let imm = AnalyticImmersion::random(2, 2, eps, 1, 2, 47 + i as u64);
        let grid = TorusGrid::new(2, 8, 0.05, 5);
        let hist = imm.history(grid, 0.0, 0.01, 5);
        let frames = FrameHistory::from_reference(&hist).unwrap();
        let mut worst = 0.0f64;
        for abar in 0..2 {
            for a in 0..hist.target.ambient_dim {
                let expect = if a == 2 + 1 + abar { 1.0 } else { 0.0 };
                worst = worst.max(frames.slices[0].e[abar][a].map(|v| v - expect).max_abs());
            }
        }
        sizes.push(worst / eps);
    }
    // constant C = ‖e−δ‖/ε stays O(1) over two decades
    let spread = sizes.iter().cloned().fold(0.0f64, f64::max)
        / sizes.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 5.0, "frame deviation not linear in ε: {sizes:?}");
}

#[test]
fn frame_transport_consistency() {
    let imm = AnalyticImmersion::random(2, 2, 0.02, 1, 2, 53);
    let mut resids = Vec::new();
    for &(n, dt) in &[(8usize, 0.02), (16, 0.01)] {
        let (hist, frames) = analytic_setup(&imm, n, dt, 5);
        let snap = GeometrySnapshot::compute(&hist, &frames, 2).unwrap();
        resids.push(snap.frame_transport_residual());
        let _ = &hist;
    }
    assert!(
        resids[1] < resids[0] / 8.0 || resids[1] < 1e-10,
        "frame transport: {resids:?}"
    );
}

#[test]
fn minimality_flat_is_zero() {
    let (hist, frames) = flat_setup(1, 16, 1);
    let snap = GeometrySnapshot::compute(&hist, &frames, 4).unwrap();
    assert!(snap.minimality_trace()[0].max_abs() < 1e-13);
    assert!(snap.k00_resolved_residual() < 1e-13);
}

#[test]
fn degenerate_surface_detected() {
    // ∂₀Y spacelike (margin violated): the metric is not Lorentzian
    let grid = TorusGrid::new(1, 16, 0.05, 5);
    let mut hist = ImmersionHistory::new(grid.clone(), 1, 1);
    for s in 0..5 {
        let t = 0.01 * s as f64;
        let disp = vec![
            SpectralField::zeros(grid.clone()),
            SpectralField::zeros(grid.clone()),
            SpectralField::zeros(grid.clone()),
        ];
        // ∂₀Y = (0.1, 0, 1): m(∂₀Y,∂₀Y) = +0.99 > 0
        let dy0 = vec![
            SpectralField::constant(grid.clone(), 0.1),
            SpectralField::zeros(grid.clone()),
            SpectralField::constant(grid.clone(), 1.0),
        ];
        hist.push_slice(t, Immersion { disp, dy0 });
    }
    let frames = FrameHistory::constant_reference(&hist);
    match GeometrySnapshot::compute(&hist, &frames, 2) {
        Err(crate::error::CoreError::DegenerateSurface { .. }) => {}
        other => panic!("expected degenerate-surface error, got {:?}", other.map(|_| ())),
    }
}
