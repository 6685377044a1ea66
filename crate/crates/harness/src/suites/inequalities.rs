//! Measured-constant suite: the model functional inequalities, the
//! half-heat solver estimates, the perturbative elliptic solver with its
//! frozen smallness constant, and the norm toolbox calibrations.

use anyhow::Result;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use minsurf_core::norms::{
    besov_norm, data_size, functional_inequality_ratios, sobolev_norm, InequalityRanges,
    SmallConstants,
};
use minsurf_core::solvers::{
    solve_elliptic_perturbative, EllipticKind, HalfHeatSolver, SliceMetric,
    ELLIPTIC_SMALLNESS_C0,
};
use minsurf_core::spectral::{SpectralField, TorusGrid};

use crate::config::{DataSpec, RunConfig};
use crate::gen::generate_data;
use crate::report::{Check, SuiteOutcome, Table};

fn random_field(grid: &std::sync::Arc<TorusGrid>, kmax: i64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim;
    let params: Vec<([i64; 3], f64, f64)> = (0..8)
        .map(|_| {
            let mut k = [0i64; 3];
            for item in k.iter_mut().take(dim) {
                *item = rng.random_range(-kmax..=kmax);
            }
            (k, rng.random_range(-1.0..1.0f64), rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    SpectralField::from_fn(grid.clone(), move |x| {
        params
            .iter()
            .map(|(k, amp, ph)| {
                let mut arg = *ph;
                for ax in 0..dim {
                    arg += k[ax] as f64 * x[ax];
                }
                amp * arg.cos()
            })
            .sum()
    })
}

pub fn run(cfg: &RunConfig) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new("inequalities", &cfg.hash(), cfg.seed);

    // ---- product inequalities: finite max ratio, stable under reseeding ----
    let grid = TorusGrid::spatial(2, 32);
    let ranges = InequalityRanges { s: cfg.sobolev_s.max(2.8), delta: 0.05, p: 2.0, z: 0.5 };
    let a = functional_inequality_ratios(&grid, ranges, 200, cfg.seed).map_err(anyhow::Error::msg)?;
    let b = functional_inequality_ratios(&grid, ranges, 200, cfg.seed + 1000)
        .map_err(anyhow::Error::msg)?;
    out.tables.push(Table {
        name: "product_inequality_ratios".into(),
        columns: vec!["which".into(), "r1_max".into(), "r2_max".into(), "r3_max".into()],
        rows: vec![
            vec![0.0, a.max_ratio[0], a.max_ratio[1], a.max_ratio[2]],
            vec![1.0, b.max_ratio[0], b.max_ratio[1], b.max_ratio[2]],
        ],
    });
    for i in 0..3 {
        let rel = (a.max_ratio[i] - b.max_ratio[i]).abs() / a.max_ratio[i].max(1e-300);
        out.checks.push(Check::le(
            "inequalities",
            &format!("product_ratio_{}_reseed_stability", i + 1),
            rel,
            0.2,
            format!("{:.4} vs {:.4}", a.max_ratio[i], b.max_ratio[i]),
        ));
    }

    // ---- half-heat: exact single-mode decay ----
    let hh_grid = TorusGrid::new(2, 16, 1.0, 32);
    let d0 = SpectralField::from_fn(hh_grid.clone(), |x| (3.0 * x[0] + 4.0 * x[1]).cos());
    let zero: Vec<SpectralField> =
        (0..=32).map(|_| SpectralField::zeros(hh_grid.clone())).collect();
    let solver = HalfHeatSolver::new(hh_grid.clone());
    let sol = solver.solve(&d0, &zero).map_err(anyhow::Error::msg)?;
    let mut worst: f64 = 0.0;
    for (s, t) in sol.times.iter().enumerate() {
        worst = worst.max(sol.slices[s].sub(&d0.scale((-5.0 * t).exp())).max_abs());
    }
    out.checks.push(Check::le("inequalities", "halfheat_single_mode_decay", worst, 1e-12, String::new()));

    // ---- half-heat: measured parabolic constants over random inputs ----
    let mut constants = Vec::new();
    for batch in 0..2u64 {
        let mut worst_c: f64 = 0.0;
        for sample in 0..50u64 {
            let seed = cfg.seed + batch * 50 + sample;
            let d0 = random_field(&hh_grid, 5, 3000 + seed);
            let fbase = random_field(&hh_grid, 5, 4000 + seed);
            let forcing: Vec<SpectralField> =
                (0..=32).map(|s| fbase.scale(((s as f64) * 0.2).cos())).collect();
            let sol = solver.solve(&d0, &forcing).map_err(anyhow::Error::msg)?;
            let mut sup = 0.0f64;
            for (s, f) in sol.slices.iter().enumerate() {
                let mut norm2 = 0.0;
                for ax in 0..hh_grid.dim {
                    norm2 += f.derivative(ax).l2_norm().powi(2);
                }
                let dtf = forcing[s].sub(&f.abs_d());
                norm2 += dtf.l2_norm().powi(2);
                sup = sup.max(norm2.sqrt());
            }
            let h1 = d0.japanese(1.0).l2_norm();
            let finf = forcing.iter().map(|f| f.l2_norm()).fold(0.0f64, f64::max);
            worst_c = worst_c.max(sup / (h1 + finf).max(1e-300));
        }
        constants.push(worst_c);
    }
    let rel = (constants[0] - constants[1]).abs() / constants[0].max(1e-300);
    out.checks.push(Check::le(
        "inequalities",
        "halfheat_constant_stability",
        rel,
        0.2,
        format!("batches {:.4}, {:.4}", constants[0], constants[1]),
    ));
    out.checks.push(Check::le(
        "inequalities",
        "halfheat_constant_finite",
        constants[0],
        100.0,
        String::new(),
    ));

    // ---- perturbative elliptic: manufactured recovery at the frozen c₀ ----
    let egrid = TorusGrid::spatial(2, 32);
    let dev = ELLIPTIC_SMALLNESS_C0 * 0.9;
    let g = vec![
        vec![
            SpectralField::from_fn(egrid.clone(), move |x| 1.0 + dev * (x[0] + x[1]).cos() / 2.0),
            SpectralField::from_fn(egrid.clone(), move |x| dev * (x[0] - x[1]).sin() / 4.0),
        ],
        vec![
            SpectralField::from_fn(egrid.clone(), move |x| dev * (x[0] - x[1]).sin() / 4.0),
            SpectralField::from_fn(egrid.clone(), move |x| 1.0 - dev * (2.0 * x[1]).cos() / 2.0),
        ],
    ];
    let metric = SliceMetric::from_components(g).map_err(anyhow::Error::msg)?;
    let fstar = SpectralField::from_fn(egrid.clone(), |x| {
        x[0].cos() * (2.0 * x[1]).sin() + 0.3 * (x[0] + x[1]).sin()
    })
    .mean_free();
    let mut worst_rec: f64 = 0.0;
    for kind in [EllipticKind::LaplaceBeltrami, EllipticKind::PrincipalPart] {
        let rhs = metric.apply(kind, &fstar);
        let f = solve_elliptic_perturbative(&metric, &rhs, kind, 1e-12, 400)
            .map_err(anyhow::Error::msg)?;
        worst_rec = worst_rec.max(f.sub(&fstar).max_abs());
    }
    out.checks.push(Check::le(
        "inequalities",
        "elliptic_manufactured_recovery",
        worst_rec,
        1e-10,
        format!("‖ḡ−δ‖ = {dev:.3}"),
    ));

    // ---- divergence detection at 2c₀ (frozen counterexample) ----
    let a2 = 2.0 * ELLIPTIC_SMALLNESS_C0;
    let g = vec![
        vec![
            SpectralField::constant(egrid.clone(), 1.0 - a2),
            SpectralField::zeros(egrid.clone()),
        ],
        vec![
            SpectralField::zeros(egrid.clone()),
            SpectralField::constant(egrid.clone(), 1.0 - a2),
        ],
    ];
    let metric2 = SliceMetric::from_components(g).map_err(anyhow::Error::msg)?;
    let rhs = SpectralField::from_fn(egrid.clone(), |x| (3.0 * x[0]).cos() * x[1].sin());
    let detected = matches!(
        solve_elliptic_perturbative(&metric2, &rhs, EllipticKind::PrincipalPart, 1e-12, 100),
        Err(minsurf_core::CoreError::SmallnessViolated { .. })
    );
    out.checks.push(Check::ge(
        "inequalities",
        "elliptic_divergence_detected_at_2c0",
        detected as u8 as f64,
        1.0,
        String::new(),
    ));

    // ---- norm toolbox: 𝒟 linear in amplitude ----
    let constants_s = SmallConstants::new(cfg.sobolev_s).map_err(anyhow::Error::msg)?;
    let mut dsizes = Vec::new();
    let amps = [1e-2, 1e-3];
    for &amp in &amps {
        let mut c = cfg.clone();
        c.n = 16;
        c.dim = 2;
        c.codim = 1;
        c.data = DataSpec::Perturbation { seed: cfg.seed, amplitude: amp, kmax: 2 };
        let (data, _) = generate_data(&c)?;
        dsizes.push(data_size(&data, &constants_s));
    }
    let slope = (dsizes[0] / dsizes[1]).ln() / (amps[0] / amps[1]).ln();
    out.checks.push(Check::near(
        "inequalities",
        "data_size_slope",
        slope,
        1.0,
        0.05,
        format!("{dsizes:?}"),
    ));

    // ---- Besov/Sobolev square-function equivalence, stable across N ----
    let s_exp = 1.3;
    let mut consts = Vec::new();
    for &n in &[32usize, 64] {
        let g = TorusGrid::spatial(1, n);
        let mut worst_c: f64 = 0.0;
        for seed in 0..40u64 {
            let f = random_field(&g, 10, 700 + seed);
            let h2 = sobolev_norm(&f, s_exp, 2.0).powi(2);
            let sq: f64 = (0..=g.jmax())
                .map(|j| {
                    (2.0f64).powf(2.0 * s_exp * j as f64)
                        * f.lp_project(j).unwrap().l2_norm().powi(2)
                })
                .sum();
            worst_c = worst_c.max(h2 / sq);
        }
        consts.push(worst_c);
    }
    let rel = (consts[0] - consts[1]).abs() / consts[0];
    out.checks.push(Check::le(
        "inequalities",
        "square_function_constant_stability",
        rel,
        0.2,
        format!("{consts:?}"),
    ));
    let _ = besov_norm(
        &random_field(&TorusGrid::spatial(1, 16), 4, 1),
        0.5,
        2.0,
        2.0,
    );

    Ok(out)
}
