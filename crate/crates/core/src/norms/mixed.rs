//! Spatial Sobolev norms and mixed `L^p_t W^{s,q}_x` norms.
//!
//! The inner norm is `‖⟨D⟩^s f‖_{L^q}` with the normalized grid measure
//! (`L^∞` is the grid max); this equals the usual `W^{s,q}` norm on
//! band-limited fields and is the stated realization for `q ≠ 2`. The
//! outer time integral is a composite trapezoid on the stored slice grid,
//! `L^∞` in time the max over slices.

use crate::spectral::{SpectralField, TimeSeries};

/// Exponent triple `(p, s, q)` of a mixed norm; `p` or `q` may be `f64::INFINITY`.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct MixedExponents {
    pub p: f64,
    pub s: f64,
    pub q: f64,
}

/// `‖f‖_{W^{s,q}} = ‖⟨D⟩^s f‖_{L^q}`.
pub fn sobolev_norm(f: &SpectralField, s: f64, q: f64) -> f64 {
    let g = if s == 0.0 { f.clone() } else { f.japanese(s) };
    g.lq_norm(q)
}

/// Mixed `L^p W^{s,q}` norm of a stored time series.
pub fn mixed_norm(series: &TimeSeries, e: MixedExponents) -> f64 {
    let inner: Vec<f64> = series.slices.iter().map(|f| sobolev_norm(f, e.s, e.q)).collect();
    if e.p.is_infinite() {
        return inner.iter().cloned().fold(0.0, f64::max);
    }
    let dt = series.dt();
    if series.len() < 2 {
        return inner.first().cloned().unwrap_or(0.0);
    }
    let mut acc = 0.0;
    for (i, v) in inner.iter().enumerate() {
        let w = if i == 0 || i == inner.len() - 1 { 0.5 } else { 1.0 };
        acc += w * v.powf(e.p) * dt;
    }
    acc.powf(1.0 / e.p)
}
