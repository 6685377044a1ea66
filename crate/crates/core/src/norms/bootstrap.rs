//! The bootstrap quantities: every norm in the three displayed lists,
//! assembled from stored run artifacts, plus the data-size functional.

use serde::Serialize;

use crate::error::Result;
use crate::evolution::InitialData;
use crate::geometry::stencil::fd_time_derivative;
use crate::geometry::{FrameHistory, GeometrySnapshot, ImmersionHistory};
use crate::spectral::{SpectralField, TimeSeries};

use super::constants::SmallConstants;
use super::mixed::{mixed_norm, sobolev_norm, MixedExponents};

/// One measured norm entry; `value = None` marks an entry whose stored
/// inputs were insufficient (e.g. too few slices for time derivatives).
#[derive(Clone, Debug, Serialize)]
pub struct NormEntry {
    pub label: String,
    pub p: f64,
    pub s: f64,
    pub q: f64,
    pub value: Option<f64>,
}

/// Full report: the individual entries and the three bootstrap sums.
#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub constants: SmallConstants,
    pub entries: Vec<NormEntry>,
    pub q_k: Option<f64>,
    pub q_g: Option<f64>,
    pub q_perp: Option<f64>,
}

/// Stored run inputs for the bootstrap quantities.
pub struct RunArtifacts<'a> {
    pub hist: &'a ImmersionHistory,
    pub frames: &'a FrameHistory,
}

/// All spacetime derivative multi-indices of total order `l` over `dd`
/// directions, as sorted direction lists.
fn multi_indices(dd: usize, l: usize) -> Vec<Vec<usize>> {
    match l {
        0 => vec![vec![]],
        1 => (0..dd).map(|a| vec![a]).collect(),
        2 => {
            let mut out = Vec::new();
            for a in 0..dd {
                for b in a..dd {
                    out.push(vec![a, b]);
                }
            }
            out
        }
        _ => panic!("derivative order {l} not supported"),
    }
}

/// Apply a derivative multi-index to a component series: time derivatives
/// by 5-point stencil per slice, spatial derivatives spectral.
fn derive_series(series: &TimeSeries, lambda: &[usize]) -> Result<TimeSeries> {
    let t_order = lambda.iter().filter(|&&a| a == 0).count();
    let spatial: Vec<usize> = lambda.iter().filter(|&&a| a != 0).map(|&a| a - 1).collect();
    let mut slices = Vec::with_capacity(series.len());
    for s in 0..series.len() {
        let mut f = if t_order == 0 {
            series.slices[s].clone()
        } else {
            fd_time_derivative(&series.slices, series.dt(), s, t_order)?
        };
        for &ax in &spatial {
            f = f.derivative(ax);
        }
        slices.push(f);
    }
    Ok(TimeSeries::new(series.times.clone(), slices))
}

/// Sum of mixed norms over components and derivative multi-indices,
/// `None` when the artifacts cannot support the requested derivatives.
fn summed_norm(
    components: &[TimeSeries],
    l: usize,
    e: MixedExponents,
) -> Option<f64> {
    let dd = components
        .first()
        .map(|c| c.slices[0].grid().dim + 1)
        .unwrap_or(0);
    if l > 0 && components.iter().any(|c| c.len() < 5) {
        return None;
    }
    let mut acc = 0.0;
    for comp in components {
        for lambda in multi_indices(dd, l) {
            let der = derive_series(comp, &lambda).ok()?;
            acc += mixed_norm(&der, e);
        }
    }
    Some(acc)
}

fn push(entries: &mut Vec<NormEntry>, label: &str, e: MixedExponents, value: Option<f64>) {
    entries.push(NormEntry { label: label.to_string(), p: e.p, s: e.s, q: e.q, value });
}

/// Assemble the bootstrap quantities from the run.
pub fn bootstrap_quantities(art: &RunArtifacts, c: &SmallConstants) -> Result<NormReport> {
    let hist = art.hist;
    let dd = hist.grid.dim + 1;
    let codim = hist.codim;
    let na = hist.target.ambient_dim;
    let inf = f64::INFINITY;

    let snaps: Vec<GeometrySnapshot> = (0..hist.len())
        .map(|s| GeometrySnapshot::compute(hist, art.frames, s))
        .collect::<Result<Vec<_>>>()?;
    let times = hist.times.clone();
    let series_of = |pick: &dyn Fn(&GeometrySnapshot) -> SpectralField| -> TimeSeries {
        TimeSeries::new(times.clone(), snaps.iter().map(|s| pick(s)).collect())
    };

    // component groups
    let mut k_comps = Vec::new();
    for abar in 0..codim {
        for al in 0..dd {
            for be in al..dd {
                k_comps.push(series_of(&move |s: &GeometrySnapshot| s.k[abar][al][be].clone()));
            }
        }
    }
    let mut g_comps = Vec::new();
    let mut g_minus_flat = Vec::new();
    for al in 0..dd {
        for be in al..dd {
            g_comps.push(series_of(&move |s: &GeometrySnapshot| s.g[al][be].clone()));
            let flat = if al != be {
                0.0
            } else if al == 0 {
                -1.0
            } else {
                1.0
            };
            g_minus_flat
                .push(series_of(&move |s: &GeometrySnapshot| s.g[al][be].map(|v| v - flat)));
        }
    }
    let mut w_comps = Vec::new();
    for al in 0..dd {
        for abar in 0..codim {
            for bbar in 0..codim {
                w_comps.push(series_of(&move |s: &GeometrySnapshot| {
                    s.omega[al][abar][bbar].clone()
                }));
            }
        }
    }
    let spatial_dim = hist.grid.dim;
    let mut e_comps = Vec::new();
    let mut e_minus_delta = Vec::new();
    for abar in 0..codim {
        for a in 0..na {
            e_comps.push(series_of(&move |s: &GeometrySnapshot| s.e[abar][a].clone()));
            let delta = if a == spatial_dim + 1 + abar { 1.0 } else { 0.0 };
            e_minus_delta
                .push(series_of(&move |s: &GeometrySnapshot| s.e[abar][a].map(|v| v - delta)));
        }
    }

    let mut entries = Vec::new();
    let mut q_k = Some(0.0f64);
    let mut q_g = Some(0.0f64);
    let mut q_perp = Some(0.0f64);
    let add = |bucket: &mut Option<f64>,
                   entries: &mut Vec<NormEntry>,
                   label: &str,
                   e: MixedExponents,
                   v: Option<f64>| {
        push(entries, label, e, v);
        *bucket = match (bucket.take(), v) {
            (Some(acc), Some(v)) => Some(acc + v),
            _ => None,
        };
    };

    // ---- Q_k ----
    for l in 0..=2usize {
        let lf = l as f64;
        let list = [
            MixedExponents { p: inf, s: c.s - 2.0 - lf, q: 2.0 },
            MixedExponents { p: 2.0, s: -0.5 - lf + c.s0, q: inf },
            MixedExponents { p: 4.0, s: 1.0 / 12.0 - lf + c.s0, q: 4.0 },
            MixedExponents { p: 3.5, s: -lf + c.s0, q: 14.0 / 3.0 },
        ];
        for e in list {
            add(&mut q_k, &mut entries, &format!("d^{l} k"), e, summed_norm(&k_comps, l, e));
        }
    }

    // ---- Q_g ----
    {
        let e = MixedExponents { p: inf, s: 0.0, q: inf };
        add(&mut q_g, &mut entries, "g - m0", e, summed_norm(&g_minus_flat, 0, e));
        for e in [
            MixedExponents { p: 1.0, s: 0.25 * c.delta0, q: inf },
            MixedExponents { p: inf, s: c.s - 2.0, q: 2.0 },
            MixedExponents { p: 2.0, s: 7.0 / 6.0 + c.s1, q: 2.0 },
            MixedExponents { p: 1.75, s: 1.0 + c.s1, q: 7.0 / 3.0 },
        ] {
            add(&mut q_g, &mut entries, "d g", e, summed_norm(&g_comps, 1, e));
        }
        for e in [
            MixedExponents { p: inf, s: c.s - 3.0, q: 2.0 },
            MixedExponents { p: 2.0, s: 1.0 / 6.0 + c.s1, q: 2.0 },
            MixedExponents { p: 1.75, s: c.s1, q: 7.0 / 3.0 },
        ] {
            add(&mut q_g, &mut entries, "d^2 g", e, summed_norm(&g_comps, 2, e));
        }
    }

    // ---- Q_⊥ ----
    {
        for e in [
            MixedExponents { p: 1.0, s: 0.25 * c.delta0, q: inf },
            MixedExponents { p: 2.0, s: 7.0 / 6.0 + c.s1, q: 2.0 },
            MixedExponents { p: 1.75, s: 1.0 + c.s1, q: 7.0 / 3.0 },
            MixedExponents { p: inf, s: c.s - 2.0, q: 2.0 },
        ] {
            add(&mut q_perp, &mut entries, "omega", e, summed_norm(&w_comps, 0, e));
        }
        for e in [
            MixedExponents { p: 2.0, s: 1.0 / 6.0 + c.s1, q: 2.0 },
            MixedExponents { p: 1.75, s: c.s1, q: 7.0 / 3.0 },
            MixedExponents { p: inf, s: c.s - 3.0, q: 2.0 },
        ] {
            add(&mut q_perp, &mut entries, "d omega", e, summed_norm(&w_comps, 1, e));
        }
        let e = MixedExponents { p: inf, s: 0.0, q: inf };
        add(&mut q_perp, &mut entries, "e - delta", e, summed_norm(&e_minus_delta, 0, e));
        for l in 1..=2usize {
            let lf = l as f64;
            for e in [
                MixedExponents { p: inf, s: c.s - 1.0 - lf, q: 2.0 },
                MixedExponents { p: 2.0, s: 1.0 / 6.0 + 2.0 - lf + c.s1, q: 2.0 },
                MixedExponents { p: 1.75, s: 2.0 - lf + c.s1, q: 7.0 / 3.0 },
            ] {
                add(&mut q_perp, &mut entries, &format!("d^{l} e"), e, summed_norm(&e_comps, l, e));
            }
        }
    }

    Ok(NormReport { constants: *c, entries, q_k, q_g, q_perp })
}

/// The data-size functional
/// `𝒟 = ‖Ȳ − Ȳ₀‖_{H^s} + ‖n̄ − n̄₀‖_{H^{s−1}}` (componentwise sums).
pub fn data_size(data: &InitialData, c: &SmallConstants) -> f64 {
    let na = data.ambient_dim();
    let mut acc = 0.0;
    for a in 0..na {
        acc += sobolev_norm(&data.ybar_disp[a], c.s, 2.0);
    }
    for a in 0..na {
        let flat = if a == 0 { 1.0 } else { 0.0 };
        let dev = data.nbar[a].map(move |v| v - flat);
        acc += sobolev_norm(&dev, c.s - 1.0, 2.0);
    }
    acc
}
