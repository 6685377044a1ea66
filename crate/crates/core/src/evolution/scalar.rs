//! The scalar graph formulation
//! `m^{αβ} ∂_α ( ∂_β f / √(1 + m^{μν}∂_μ f ∂_ν f) ) = 0`,
//! expanded into its quasilinear second-order form and integrated by RK4
//! method of lines with spectral spatial derivatives.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::spectral::{SpectralField, TorusGrid};

use super::check_cfl;

/// First-order state `(f, ∂₀f)` of the scalar problem.
#[derive(Clone)]
pub struct ScalarState {
    pub grid: Arc<TorusGrid>,
    pub f: SpectralField,
    pub df: SpectralField,
}

/// Stored scalar evolution.
pub struct ScalarRun {
    pub times: Vec<f64>,
    pub f: Vec<SpectralField>,
    pub df: Vec<SpectralField>,
    /// min over the run of the timelike margin `1 + Q`
    pub min_margin: f64,
}

/// Expand the divergence form and solve pointwise for `∂₀²f`.
///
/// With `P^α = m^{αβ}∂_β f` and `Q = m^{μν}∂_μ f ∂_ν f`, the equation is
/// `(m^{αβ} − P^α P^β/(1+Q)) ∂_α∂_β f = 0`; the `∂₀²` coefficient
/// `−1 − (∂₀f)²/(1+Q)` never degenerates while the surface stays timelike.
pub fn scalar_rhs(f: &SpectralField, df: &SpectralField) -> Result<SpectralField> {
    let grid = f.grid().clone();
    let d = grid.dim;
    let npts = grid.len();

    let fx: Vec<SpectralField> = (0..d).map(|i| f.derivative(i)).collect();
    let dfx: Vec<SpectralField> = (0..d).map(|i| df.derivative(i)).collect();
    let fxx: Vec<Vec<SpectralField>> = (0..d)
        .map(|i| (i..d).map(|j| fx[i].derivative(j)).collect())
        .collect();

    let df_v = df.values();
    let fx_v: Vec<&[f64]> = fx.iter().map(|g| g.values()).collect();
    let dfx_v: Vec<&[f64]> = dfx.iter().map(|g| g.values()).collect();
    let fxx_v: Vec<Vec<&[f64]>> = fxx
        .iter()
        .map(|row| row.iter().map(|g| g.values()).collect())
        .collect();

    let mut out = vec![0.0; npts];
    for p in 0..npts {
        let ft = df_v[p];
        let mut q = -ft * ft;
        for i in 0..d {
            q += fx_v[i][p] * fx_v[i][p];
        }
        let margin = 1.0 + q;
        if margin <= 0.0 {
            return Err(CoreError::TimelikeBreakdown { point: p, margin });
        }
        // P^0 = −f_t, P^i = f_i
        let a00 = -1.0 - ft * ft / margin;
        let mut rhs = 0.0;
        for i in 0..d {
            let a0i = ft * fx_v[i][p] / margin;
            rhs += 2.0 * a0i * dfx_v[i][p];
            for j in i..d {
                let sym = if i == j { 1.0 } else { 2.0 };
                let aij = (if i == j { 1.0 } else { 0.0 }) - fx_v[i][p] * fx_v[j][p] / margin;
                rhs += sym * aij * fxx_v[i][j - i][p];
            }
        }
        out[p] = -rhs / a00;
    }
    Ok(SpectralField::from_values(grid, out).dealias())
}

/// Minimum of the timelike margin `1 + Q` over the grid.
pub fn timelike_margin(f: &SpectralField, df: &SpectralField) -> f64 {
    let grid = f.grid().clone();
    let d = grid.dim;
    let fx: Vec<SpectralField> = (0..d).map(|i| f.derivative(i)).collect();
    let df_v = df.values();
    let fx_v: Vec<&[f64]> = fx.iter().map(|g| g.values()).collect();
    let mut min_m = f64::INFINITY;
    for p in 0..grid.len() {
        let mut q = -df_v[p] * df_v[p];
        for i in 0..d {
            q += fx_v[i][p] * fx_v[i][p];
        }
        min_m = min_m.min(1.0 + q);
    }
    min_m
}

impl ScalarState {
    pub fn new(f: SpectralField, df: SpectralField) -> Self {
        let grid = f.grid().clone();
        ScalarState { grid, f, df }
    }

    /// One RK4 step of the first-order system; the state is dealiased after
    /// the update.
    pub fn step(&self, dt: f64, cfl: f64) -> Result<ScalarState> {
        // characteristic speed estimate: c² ≲ max |a^{ij}| row sums / |a^{00}|;
        // near flat this is ≈ 1, keep a margin
        let margin = timelike_margin(&self.f, &self.df);
        if margin <= 0.0 {
            return Err(CoreError::TimelikeBreakdown { point: 0, margin });
        }
        let c_max = (2.0 / margin.min(1.0)).sqrt();
        check_cfl(dt, self.grid.dx(), c_max, cfl)?;

        let k1f = self.df.clone();
        let k1v = scalar_rhs(&self.f, &self.df)?;
        let f2 = self.f.axpy(0.5 * dt, &k1f);
        let v2 = self.df.axpy(0.5 * dt, &k1v);
        let k2f = v2.clone();
        let k2v = scalar_rhs(&f2, &v2)?;
        let f3 = self.f.axpy(0.5 * dt, &k2f);
        let v3 = self.df.axpy(0.5 * dt, &k2v);
        let k3f = v3.clone();
        let k3v = scalar_rhs(&f3, &v3)?;
        let f4 = self.f.axpy(dt, &k3f);
        let v4 = self.df.axpy(dt, &k3v);
        let k4f = v4.clone();
        let k4v = scalar_rhs(&f4, &v4)?;

        let c = dt / 6.0;
        let f = SpectralField::linear_combination(&[
            (1.0, &self.f),
            (c, &k1f),
            (2.0 * c, &k2f),
            (2.0 * c, &k3f),
            (c, &k4f),
        ])
        .dealias();
        let df = SpectralField::linear_combination(&[
            (1.0, &self.df),
            (c, &k1v),
            (2.0 * c, &k2v),
            (2.0 * c, &k3v),
            (c, &k4v),
        ])
        .dealias();
        if !f.is_finite() || !df.is_finite() {
            return Err(CoreError::NonFinite { context: "scalar RK4 step".into() });
        }
        Ok(ScalarState::new(f, df))
    }

    /// Integrate `steps` steps, storing every `store_every`-th slice
    /// (always including the first and last).
    pub fn run(&self, dt: f64, steps: usize, store_every: usize, cfl: f64) -> Result<ScalarRun> {
        let mut state = self.clone();
        let mut times = vec![0.0];
        let mut fs = vec![state.f.clone()];
        let mut dfs = vec![state.df.clone()];
        let mut min_margin = timelike_margin(&state.f, &state.df);
        for s in 1..=steps {
            state = state.step(dt, cfl)?;
            min_margin = min_margin.min(timelike_margin(&state.f, &state.df));
            if s % store_every == 0 || s == steps {
                times.push(s as f64 * dt);
                fs.push(state.f.clone());
                dfs.push(state.df.clone());
            }
        }
        Ok(ScalarRun { times, f: fs, df: dfs, min_margin })
    }
}
