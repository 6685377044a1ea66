//! Product frequency decompositions: the high-low split of `P_j(f·g)`, the
//! low-high-high trilinear projector `ℙ♮`, and the slice extension operator
//! `𝔼` with its dyadic time cutoffs.

use std::sync::Arc;

use super::bump::{psi_time, psi_time_d1, psi_time_d2};
use super::field::{SpectralField, TimeSeries};
use super::grid::TorusGrid;
use crate::error::Result;

/// High-low decomposition of `P_j(f·g)` into `(HL_j, LH_j, HH_j)`.
///
/// Every index pair `(j', j'')` is assigned to exactly one bucket so the
/// three parts sum to `P_j(f·g)` up to the dealiasing mask:
/// `HH` for `j' > j+2`, `LH` for `j' < j−2`, `HL` for `j' ∈ [j−2, j+2]`.
/// On the ranges displayed in the defining formulas the buckets agree with
/// them; pairs those ranges drop are frequency-disjoint from `P_j` except
/// for `(j−2, j+1)`, which lands in `HL`.
pub fn hl_decompose(
    f: &SpectralField,
    g: &SpectralField,
    j: usize,
) -> Result<(SpectralField, SpectralField, SpectralField)> {
    let grid = f.grid().clone();
    grid.check_dyadic(j)?;
    let jmax = grid.jmax();
    let f_blocks = f.lp_blocks();
    let g_blocks = g.lp_blocks();

    let mut hl = SpectralField::zeros(grid.clone());
    let mut lh = SpectralField::zeros(grid.clone());
    let mut hh = SpectralField::zeros(grid.clone());
    for jp in 0..=jmax {
        for jpp in 0..=jmax {
            let term = f_blocks[jp].mul(&g_blocks[jpp]);
            if jp > j + 2 {
                hh = hh.add(&term);
            } else if jp + 2 < j {
                lh = lh.add(&term);
            } else {
                hl = hl.add(&term);
            }
        }
    }
    let hl = hl.dealias().lp_project(j)?;
    let lh = lh.dealias().lp_project(j)?;
    let hh = hh.dealias().lp_project(j)?;
    Ok((hl, lh, hh))
}

/// The low-high-high projector
/// `ℙ♮[h, f₁, f₂] = Σ (P_j̄ h)(P_{j'} f₁)(P_{j''} f₂)` over the symmetric
/// range `|j'' − j'| ≤ 2`, `min(j', j'') > j̄ − 2`, dealiased.
///
/// The index range is symmetric under swapping the two high slots, which is
/// what the cancellation identities for the gauge sources rely on.
pub fn lhh_project(
    h: &SpectralField,
    f1: &SpectralField,
    f2: &SpectralField,
) -> SpectralField {
    let grid = h.grid().clone();
    let jmax = grid.jmax();
    let f1_blocks = f1.lp_blocks();
    let f2_blocks = f2.lp_blocks();
    // cumulative low-pass of h: P_{≤ m} h
    let h_low: Vec<SpectralField> =
        (0..=jmax).map(|m| h.lp_project_leq(m).expect("in range")).collect();

    let mut acc = SpectralField::zeros(grid);
    for jp in 0..=jmax {
        for jpp in jp.saturating_sub(2)..=(jp + 2).min(jmax) {
            // h-blocks with j̄ < min(j',j'') + 2, i.e. j̄ ≤ min + 1
            let m = (jp.min(jpp) + 1).min(jmax);
            let term = h_low[m].mul(&f1_blocks[jp]).mul(&f2_blocks[jpp]);
            acc = acc.add(&term);
        }
    }
    acc.dealias()
}

/// `ℙ♮` restricted to high indices `(j', j'') = (ja, jb)` (no symmetrization,
/// no range sum). Exposed for the paired-index cancellation diagnostics.
pub fn lhh_project_ranged(
    h: &SpectralField,
    f1: &SpectralField,
    f2: &SpectralField,
    ja: usize,
    jb: usize,
) -> SpectralField {
    let grid = h.grid().clone();
    let jmax = grid.jmax();
    if ja > jmax || jb > jmax || ja.abs_diff(jb) > 2 {
        return SpectralField::zeros(grid);
    }
    let m = (ja.min(jb) + 1).min(jmax);
    let hl = h.lp_project_leq(m).expect("in range");
    let a = f1.lp_project(ja).expect("in range");
    let b = f2.lp_project(jb).expect("in range");
    hl.mul(&a).mul(&b).dealias()
}

/// Extension operator `𝔼h(t,x) = Σ_j Ψ(2^j t)·P_j h(x)` sampled on the
/// stored time grid of `grid` (times `k·dt`, `k = 0..=time_steps`).
pub fn extend_to_time_grid(h: &SpectralField, grid: &Arc<TorusGrid>) -> TimeSeries {
    extend_with_derivative_order(h, grid, 0)
}

/// Time derivative `∂₀^order 𝔼h` evaluated analytically from the bump
/// derivatives (order ≤ 2).
pub fn extend_time_derivative(h: &SpectralField, grid: &Arc<TorusGrid>, order: usize) -> TimeSeries {
    extend_with_derivative_order(h, grid, order)
}

/// `𝔼h` sampled at an arbitrary list of times.
pub fn extend_at_times(h: &SpectralField, times: &[f64]) -> Vec<SpectralField> {
    let blocks = h.lp_blocks();
    let grid = h.grid().clone();
    times
        .iter()
        .map(|&t| {
            let mut terms: Vec<(f64, &SpectralField)> = Vec::with_capacity(blocks.len());
            for (j, b) in blocks.iter().enumerate() {
                let s = (1u64 << j) as f64;
                let w = psi_time(s * t);
                if w != 0.0 {
                    terms.push((w, b));
                }
            }
            if terms.is_empty() {
                SpectralField::zeros(grid.clone())
            } else {
                SpectralField::linear_combination(&terms)
            }
        })
        .collect()
}

fn extend_with_derivative_order(
    h: &SpectralField,
    grid: &Arc<TorusGrid>,
    order: usize,
) -> TimeSeries {
    assert!(order <= 2, "analytic derivatives implemented through order 2");
    let blocks = h.lp_blocks();
    let dt = grid.dt();
    let steps = grid.time_steps;
    let mut times = Vec::with_capacity(steps + 1);
    let mut slices = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let mut terms: Vec<(f64, &SpectralField)> = Vec::with_capacity(blocks.len());
        for (j, b) in blocks.iter().enumerate() {
            let s = (1u64 << j) as f64;
            let w = match order {
                0 => psi_time(s * t),
                1 => s * psi_time_d1(s * t),
                _ => s * s * psi_time_d2(s * t),
            };
            if w != 0.0 {
                terms.push((w, b));
            }
        }
        let slice = if terms.is_empty() {
            SpectralField::zeros(grid.clone())
        } else {
            SpectralField::linear_combination(&terms)
        };
        times.push(t);
        slices.push(slice);
    }
    TimeSeries::new(times, slices)
}
