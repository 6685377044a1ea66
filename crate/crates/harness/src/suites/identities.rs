//! Exact Fourier-side identities: partition of unity, the localized
//! inverse-divergence identity, trilinear-projector symmetry, extension
//! operator behaviour at the initial slice, block resummation, Parseval,
//! multiplier commutation and the measured Mikhlin constant.

use anyhow::Result;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use minsurf_core::spectral::{
    extend_time_derivative, extend_to_time_grid, hl_decompose, lhh_project, MultiplierBank,
    SpectralField, TorusGrid,
};

use crate::config::RunConfig;
use crate::report::{Check, SuiteOutcome};

fn random_band_limited(
    grid: &std::sync::Arc<TorusGrid>,
    kmax: i64,
    seed: u64,
) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim;
    let params: Vec<([i64; 3], f64, f64)> = (0..10)
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
    let mut out = SuiteOutcome::new("identities", &cfg.hash(), cfg.seed);
    let grid = TorusGrid::spatial(cfg.dim, cfg.n);
    let kmax = (cfg.n / 3) as i64;
    let tol = 1e-12;

    // partition of unity over the whole lattice
    let defect = MultiplierBank::partition_of_unity_defect(&grid);
    out.checks.push(Check::le("identities", "partition_of_unity", defect, tol, String::new()));

    let f = random_band_limited(&grid, kmax, cfg.seed);
    let scale = f.max_abs().max(1.0);

    // block resummation
    let blocks = f.lp_blocks();
    let refs: Vec<(f64, &SpectralField)> = blocks.iter().map(|b| (1.0, b)).collect();
    let resum = SpectralField::linear_combination(&refs).sub(&f).max_abs() / scale;
    out.checks.push(Check::le("identities", "lp_blocks_resum", resum, tol, String::new()));

    // Parseval
    let l2 = f.l2_norm();
    let coef: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    out.checks.push(Check::le(
        "identities",
        "parseval",
        (l2 - coef).abs() / l2.max(1e-300),
        tol,
        String::new(),
    ));

    // divergence identity per dyadic block
    let mut worst_div: f64 = 0.0;
    for j in 1..=grid.jmax() {
        let pj = f.lp_project(j).map_err(anyhow::Error::msg)?;
        let mut acc = SpectralField::zeros(grid.clone());
        for ax in 0..grid.dim {
            acc = acc.add(&pj.riesz_t(ax, j).map_err(anyhow::Error::msg)?.derivative(ax));
        }
        worst_div = worst_div.max(acc.sub(&pj).max_abs() / scale);
    }
    out.checks.push(Check::le("identities", "riesz_divergence", worst_div, tol, String::new()));

    // trilinear projector argument symmetry
    let h = random_band_limited(&grid, kmax, cfg.seed + 1);
    let f1 = random_band_limited(&grid, kmax, cfg.seed + 2);
    let f2 = random_band_limited(&grid, kmax, cfg.seed + 3);
    let a = lhh_project(&h, &f1, &f2);
    let b = lhh_project(&h, &f2, &f1);
    out.checks.push(Check::le(
        "identities",
        "lhh_argument_symmetry",
        a.sub(&b).max_abs() / a.max_abs().max(1.0),
        tol,
        String::new(),
    ));

    // extension operator: slice value and flat time derivatives at 0
    let tgrid = TorusGrid::new(cfg.dim, cfg.n, 1.0, 16);
    let ext = extend_to_time_grid(&f, &tgrid);
    let at0 = ext.slices[0].sub(&f).max_abs() / scale;
    out.checks.push(Check::le("identities", "extension_matches_slice", at0, tol, String::new()));
    let mut worst_dt: f64 = 0.0;
    for order in 1..=2 {
        let dk = extend_time_derivative(&f, &tgrid, order);
        worst_dt = worst_dt.max(dk.slices[0].max_abs() / scale);
    }
    out.checks.push(Check::le(
        "identities",
        "extension_flat_time_derivatives",
        worst_dt,
        tol,
        String::new(),
    ));

    // high-low split partitions the projected product
    let g2 = random_band_limited(&grid, kmax, cfg.seed + 4);
    let mut worst_hl: f64 = 0.0;
    for j in 0..=grid.jmax() {
        let (hl, lh, hh) = hl_decompose(&f, &g2, j).map_err(anyhow::Error::msg)?;
        let pj = f.mul(&g2).dealias().lp_project(j).map_err(anyhow::Error::msg)?;
        worst_hl = worst_hl.max(hl.add(&lh).add(&hh).sub(&pj).max_abs() / pj.max_abs().max(1.0));
    }
    out.checks.push(Check::le("identities", "hl_partition", worst_hl, tol, String::new()));

    // multiplier commutation
    let c1 = f.abs_d().lp_project(2).map_err(anyhow::Error::msg)?;
    let c2 = f.lp_project(2).map_err(anyhow::Error::msg)?.abs_d();
    out.checks.push(Check::le(
        "identities",
        "multipliers_commute",
        c1.sub(&c2).max_abs() / scale,
        tol,
        String::new(),
    ));

    // measured Mikhlin constant (reported; bounded by the profile choice)
    let mut mik: f64 = 0.0;
    for j in 0..=grid.jmax() {
        for ax in 0..grid.dim {
            mik = mik.max(MultiplierBank::riesz_mikhlin_constant(&grid, ax, j));
        }
    }
    out.checks.push(Check::le("identities", "mikhlin_constant", mik, 4.0 + 1e-12, String::new()));

    Ok(out)
}
