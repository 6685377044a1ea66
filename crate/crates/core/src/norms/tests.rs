
use crate::evolution::InitialData;
use crate::geometry::FrameHistory;
use crate::spectral::{SpectralField, TimeSeries, TorusGrid};

use super::*;

#[test]
fn mixed_norm_time_constant() {
    // time-constant f → T^{1/p} ‖f‖_{W^{s,q}}
    let tgrid = TorusGrid::new(1, 32, 2.0, 64);
    let f = SpectralField::from_fn(tgrid.clone(), |x| x[0].cos() + 0.3);
    let times: Vec<f64> = (0..=64).map(|s| s as f64 * tgrid.dt()).collect();
    let series = TimeSeries::new(times, vec![f.clone(); 65]);
    for &(p, s, q) in &[(2.0, 1.3, 2.0), (4.0, -0.5, 4.0), (1.0, 0.0, f64::INFINITY)] {
        let got = mixed_norm(&series, MixedExponents { p, s, q });
        let expect = 2.0f64.powf(1.0 / p) * sobolev_norm(&f, s, q);
        assert!(
            (got - expect).abs() < 1e-12 * expect,
            "(p,s,q)=({p},{s},{q}): {got} vs {expect}"
        );
    }
}

#[test]
fn sobolev_single_mode_symbol() {
    // ‖cos⟨x,ξ₀⟩‖_{H^s} = (1+|ξ₀|²)^{s/2} ‖cos‖_{L²}, ‖cos‖_{L²} = 1/√2
    let grid = TorusGrid::spatial(2, 32);
    let f = SpectralField::from_fn(grid.clone(), |x| (3.0 * x[0] + 4.0 * x[1]).cos());
    for &s in &[0.7, 2.0, -1.1] {
        let got = sobolev_norm(&f, s, 2.0);
        let expect = (1.0f64 + 25.0).powf(s / 2.0) / (2.0f64).sqrt();
        assert!((got - expect).abs() < 1e-12, "s={s}: {got} vs {expect}");
    }
}

#[test]
fn mixed_norm_matches_refined_quadrature() {
    // trapezoid against a 8× denser time lattice; smooth positive field so
    // the L^q integrand is smooth
    let make = |steps: usize| -> TimeSeries {
        let tg = TorusGrid::new(1, 32, 1.0, steps);
        let times: Vec<f64> = (0..=steps).map(|s| s as f64 * tg.dt()).collect();
        let slices: Vec<SpectralField> = times
            .iter()
            .map(|&t| {
                SpectralField::from_fn(tg.clone(), move |x| {
                    2.0 + (x[0] + 0.3 * t).cos() * (1.0 + 0.2 * (0.7 * t).sin())
                })
            })
            .collect();
        TimeSeries::new(times, slices)
    };
    let coarse = make(512);
    let dense = make(4096);
    for &(p, s, q) in &[(2.0, 0.8, 2.0), (3.5, 0.0, 14.0 / 3.0)] {
        let a = mixed_norm(&coarse, MixedExponents { p, s, q });
        let b = mixed_norm(&dense, MixedExponents { p, s, q });
        assert!(
            (a - b).abs() / b < 1e-6,
            "(p,s,q)=({p},{s},{q}): {a} vs dense {b}, rel {:e}",
            (a - b).abs() / b
        );
    }
}

#[test]
fn besov_plateau_single_mode() {
    // plateau mode |ξ₀| = 2^j: only χ_j ≠ 0 → 2^{sj} ‖mode‖_{L^p}
    let grid = TorusGrid::spatial(1, 64);
    let f = SpectralField::from_fn(grid.clone(), |x| (8.0 * x[0]).cos());
    for &(s, p, r) in &[(0.9, 2.0, 2.0), (-0.4, 4.0, 1.0), (1.5, f64::INFINITY, f64::INFINITY)] {
        let got = besov_norm(&f, s, p, r);
        let expect = (2.0f64).powf(3.0 * s) * f.lq_norm(p);
        assert!((got - expect).abs() < 1e-12 * expect.max(1.0), "B^{s}_{p},{r}: {got} vs {expect}");
    }
    // zero field
    assert_eq!(besov_norm(&SpectralField::zeros(grid.clone()), 1.0, 2.0, 2.0), 0.0);
}

#[test]
fn besov_22_equivalent_to_sobolev() {
    // B^s_{2,2} ~ H^s: the measured equivalence constant over random fields
    // is bounded and stable
    use crate::spectral::tests::random_band_limited;
    let mut ratios = Vec::new();
    let grid = TorusGrid::spatial(2, 32);
    for seed in 0..100u64 {
        let f = random_band_limited(&grid, 10, 300 + seed);
        let b = besov_norm(&f, 1.1, 2.0, 2.0);
        let h = sobolev_norm(&f, 1.1, 2.0);
        ratios.push(b / h);
    }
    let max = ratios.iter().cloned().fold(0.0f64, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max < 3.0 && min > 0.3, "equivalence constants in [{min:.3}, {max:.3}]");
}

#[test]
fn norm_homogeneity_and_monotonicity() {
    use crate::spectral::tests::random_band_limited;
    let grid = TorusGrid::spatial(2, 16);
    let f = random_band_limited(&grid, 5, 17);
    // homogeneity exact
    let a = sobolev_norm(&f.scale(-3.5), 1.2, 4.0);
    let b = 3.5 * sobolev_norm(&f, 1.2, 4.0);
    assert!((a - b).abs() < 1e-12 * b);
    // monotonicity in s (⟨D⟩ symbols ≥ 1 ordering)
    let lo = sobolev_norm(&f, 0.5, 2.0);
    let hi = sobolev_norm(&f, 1.5, 2.0);
    assert!(lo <= hi * (1.0 + 1e-14));
    let bl = besov_norm(&f.scale(2.0), 0.7, 2.0, 1.0);
    let br = 2.0 * besov_norm(&f, 0.7, 2.0, 1.0);
    assert!((bl - br).abs() < 1e-12 * br);
}

#[test]
fn square_function_constant_stable_across_grids() {
    use crate::spectral::tests::random_band_limited;
    let s = 1.3;
    let mut consts = Vec::new();
    for &n in &[32usize, 64] {
        let grid = TorusGrid::spatial(1, n);
        let mut worst: f64 = 0.0;
        for seed in 0..40u64 {
            let f = random_band_limited(&grid, 10, 500 + seed);
            let h2 = sobolev_norm(&f, s, 2.0).powi(2);
            let sq: f64 = (0..=grid.jmax())
                .map(|j| {
                    let w = (2.0f64).powf(2.0 * s * j as f64);
                    w * f.lp_project(j).unwrap().l2_norm().powi(2)
                })
                .sum();
            worst = worst.max(h2 / sq);
        }
        consts.push(worst);
    }
    let rel = (consts[0] - consts[1]).abs() / consts[0];
    assert!(rel < 0.2, "square-function constants {consts:?} differ by {rel:.2}");
}

#[test]
fn data_size_zero_iff_flat_and_linear() {
    let grid = TorusGrid::spatial(2, 16);
    let c = SmallConstants::new(3.0).unwrap();
    let flat = InitialData::flat(grid.clone(), 1);
    assert_eq!(data_size(&flat, &c), 0.0);

    let mut sizes = Vec::new();
    for &eps in &[1e-2, 1e-3, 1e-4] {
        let mut data = InitialData::flat(grid.clone(), 1);
        data.ybar_disp[3] =
            SpectralField::from_fn(grid.clone(), move |x| eps * (x[0] + 2.0 * x[1]).cos());
        sizes.push(data_size(&data, &c) / eps);
    }
    let spread = sizes.iter().cloned().fold(0.0f64, f64::max)
        / sizes.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 1.0 + 1e-9, "𝒟 is exactly linear here: {sizes:?}");
}

#[test]
fn bootstrap_flat_run_all_zero() {
    let grid = TorusGrid::new(2, 8, 0.05, 5);
    let hist = crate::geometry::ImmersionHistory::flat(grid, 1);
    let frames = FrameHistory::from_reference(&hist).unwrap();
    let c = SmallConstants::new(3.0).unwrap();
    let report = bootstrap_quantities(&RunArtifacts { hist: &hist, frames: &frames }, &c).unwrap();
    assert!(report.q_k.unwrap() < 1e-10, "Q_k = {:?}", report.q_k);
    assert!(report.q_g.unwrap() < 1e-10, "Q_g = {:?}", report.q_g);
    assert!(report.q_perp.unwrap() < 1e-10, "Q_⊥ = {:?}", report.q_perp);
    for e in &report.entries {
        assert!(e.value.is_some());
    }
}

#[test]
fn bootstrap_traveling_wave_finite_and_refinement_stable() {
    use crate::evolution::{lift_graph, ScalarState};
    let c = SmallConstants::new(3.0).unwrap();
    let mut qks = Vec::new();
    for &(n, steps) in &[(24usize, 8usize), (48, 16)] {
        let grid = TorusGrid::spatial(1, n);
        let f = SpectralField::from_fn(grid.clone(), |x| 0.05 * x[0].cos());
        let df = SpectralField::from_fn(grid.clone(), |x| 0.05 * x[0].sin());
        let (pstate, _) = lift_graph(&ScalarState::new(f, df));
        let hist = pstate.run(0.08 / steps as f64, steps, steps / 8, 0.9).unwrap();
        let frames = FrameHistory::from_reference(&hist).unwrap();
        let report =
            bootstrap_quantities(&RunArtifacts { hist: &hist, frames: &frames }, &c).unwrap();
        let qk = report.q_k.unwrap();
        assert!(qk.is_finite() && qk > 0.0);
        qks.push(qk);
    }
    let rel = (qks[0] - qks[1]).abs() / qks[1];
    assert!(rel < 0.15, "Q_k not refinement-stable: {qks:?} ({rel:.3})");
}

#[test]
fn bootstrap_marks_unavailable_on_short_history() {
    let grid = TorusGrid::new(2, 8, 0.02, 2);
    let hist = crate::geometry::ImmersionHistory::flat(grid, 1);
    let frames = FrameHistory::from_reference(&hist).unwrap();
    let c = SmallConstants::new(3.0).unwrap();
    let report = bootstrap_quantities(&RunArtifacts { hist: &hist, frames: &frames }, &c).unwrap();
    // derivative entries need 5 slices; only 3 stored
    assert!(report.q_k.is_none());
    assert!(report.entries.iter().any(|e| e.value.is_none()));
    assert!(report
        .entries
        .iter()
        .filter(|e| e.label == "g - m0")
        .all(|e| e.value.is_some()));
}

#[test]
fn inequality_ratios_measured_and_stable() {
    let grid = TorusGrid::spatial(2, 32);
    let ranges = InequalityRanges { s: 2.8, delta: 0.05, p: 2.0, z: 0.5 };
    let a = functional_inequality_ratios(&grid, ranges, 200, 11).unwrap();
    let b = functional_inequality_ratios(&grid, ranges, 200, 77).unwrap();
    for i in 0..3 {
        assert!(a.max_ratio[i].is_finite() && a.max_ratio[i] > 0.0);
        let rel = (a.max_ratio[i] - b.max_ratio[i]).abs() / a.max_ratio[i];
        assert!(rel < 0.2, "ratio {i} unstable under reseeding: {rel:.3}");
    }
}

#[test]
fn inequality_constant_f1_exact_cases() {
    // f₁ ≡ 1: ratio = ‖f₂‖/(‖1‖·‖f₂‖) = 1/‖1‖_{H^{s−1−δ}} = 1 exactly
    let grid = TorusGrid::spatial(1, 16);
    let one = SpectralField::constant(grid.clone(), 1.0);
    let f2 = SpectralField::from_fn(grid.clone(), |x| (2.0 * x[0]).cos());
    let s = 2.8;
    let p = 2.0;
    let num = sobolev_norm(&one.mul_dealiased(&f2), s - 2.0, p);
    let den = sobolev_norm(&one, s - 1.0 - 0.05, 2.0) * sobolev_norm(&f2, s - 2.0, p);
    assert!((num / den - 1.0).abs() < 1e-12);
    // f₂ = 0 → convention: ratio 0
    let z = SpectralField::zeros(grid.clone());
    let den = sobolev_norm(&one, s - 1.0, 2.0) * sobolev_norm(&z, s - 2.0, p);
    assert_eq!(den, 0.0);
}

#[test]
fn inequality_range_validation() {
    let grid = TorusGrid::spatial(1, 16);
    let bad = InequalityRanges { s: 2.2, delta: 0.0, p: 2.0, z: 0.0 };
    assert!(functional_inequality_ratios(&grid, bad, 2, 1).is_err());
    let bad = InequalityRanges { s: 3.0, delta: 0.4, p: 2.0, z: 0.0 };
    assert!(functional_inequality_ratios(&grid, bad, 2, 1).is_err());
    let bad = InequalityRanges { s: 3.0, delta: 0.05, p: 1.5, z: 0.0 };
    assert!(functional_inequality_ratios(&grid, bad, 2, 1).is_err());
}
