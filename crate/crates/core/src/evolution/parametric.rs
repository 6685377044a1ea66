//! The parametric formulation closed with the full wave gauge:
//! `∂₀²Y^A = −(g^{00})^{−1} ( 2 g^{0i} ∂₀∂_i Y^A + g^{ij} ∂_i∂_j Y^A )`.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::geometry::{Immersion, ImmersionHistory, MinkowskiTarget};
use crate::linalg::SmallMat;
use crate::spectral::{SpectralField, TorusGrid};

use super::check_cfl;

/// First-order state of the parametric system: displacement from the flat
/// reference plus velocity.
#[derive(Clone)]
pub struct ParametricState {
    pub grid: Arc<TorusGrid>,
    pub codim: usize,
    pub disp: Vec<SpectralField>,
    pub dy0: Vec<SpectralField>,
}

struct Derivs {
    /// `∂_α Y^A` values, `[α][a]`
    dy: Vec<Vec<SpectralField>>,
    /// `∂₀ ∂_i Y^A`, `[i][a]`
    d0di: Vec<Vec<SpectralField>>,
    /// `∂_i ∂_j Y^A`, `[i][j≥i][a]`
    didj: Vec<Vec<Vec<SpectralField>>>,
}

fn derivatives(state: &ParametricState) -> Derivs {
    let grid = &state.grid;
    let d = grid.dim;
    let na = state.disp.len();
    let mut dy = Vec::with_capacity(d + 1);
    dy.push(state.dy0.clone());
    for i in 0..d {
        dy.push(
            (0..na)
                .map(|a| {
                    let der = state.disp[a].derivative(i);
                    if a == i + 1 {
                        der.map(|v| v + 1.0)
                    } else {
                        der
                    }
                })
                .collect(),
        );
    }
    let d0di: Vec<Vec<SpectralField>> = (0..d)
        .map(|i| (0..na).map(|a| state.dy0[a].derivative(i)).collect())
        .collect();
    let didj: Vec<Vec<Vec<SpectralField>>> = (0..d)
        .map(|i| {
            (i..d)
                .map(|j| (0..na).map(|a| state.disp[a].derivative(i).derivative(j)).collect())
                .collect()
        })
        .collect();
    Derivs { dy, d0di, didj }
}

/// `∂₀²Y` from the gauge-completed wave system; errors when the induced
/// metric degenerates or `|g^{00}|` collapses.
pub fn parametric_rhs(state: &ParametricState) -> Result<Vec<SpectralField>> {
    let (rhs, _) = rhs_and_metric(state)?;
    Ok(rhs)
}

fn rhs_and_metric(state: &ParametricState) -> Result<(Vec<SpectralField>, Vec<Vec<SpectralField>>)> {
    let grid = &state.grid;
    let d = grid.dim;
    let dd = d + 1;
    let na = state.disp.len();
    let target = MinkowskiTarget { ambient_dim: na };
    let npts = grid.len();
    let der = derivatives(state);

    let dy_v: Vec<Vec<&[f64]>> = der.dy.iter().map(|r| r.iter().map(|f| f.values()).collect()).collect();
    let d0di_v: Vec<Vec<&[f64]>> =
        der.d0di.iter().map(|r| r.iter().map(|f| f.values()).collect()).collect();
    let didj_v: Vec<Vec<Vec<&[f64]>>> = der
        .didj
        .iter()
        .map(|r| r.iter().map(|c| c.iter().map(|f| f.values()).collect()).collect())
        .collect();

    let mut out = vec![vec![0.0; npts]; na];
    let mut ginv_store = vec![vec![vec![0.0; npts]; dd]; dd];
    let mut u = vec![0.0; na];
    let mut v = vec![0.0; na];
    for p in 0..npts {
        let mut g = SmallMat::zeros(dd);
        for al in 0..dd {
            for be in 0..dd {
                for a in 0..na {
                    u[a] = dy_v[al][a][p];
                    v[a] = dy_v[be][a][p];
                }
                g.set(al, be, target.inner(&u, &v));
            }
        }
        let det = g.det();
        if det >= 0.0 {
            return Err(CoreError::DegenerateSurface { point: p, det });
        }
        let ginv = g.inverse().ok_or(CoreError::DegenerateSurface { point: p, det })?;
        let g00 = ginv.at(0, 0);
        if g00.abs() < 1e-6 {
            return Err(CoreError::DegenerateG00 { point: p, value: g00 });
        }
        for al in 0..dd {
            for be in 0..dd {
                ginv_store[al][be][p] = ginv.at(al, be);
            }
        }
        for a in 0..na {
            let mut rhs = 0.0;
            for i in 0..d {
                rhs += 2.0 * ginv.at(0, i + 1) * d0di_v[i][a][p];
                for j in i..d {
                    let sym = if i == j { 1.0 } else { 2.0 };
                    rhs += sym * ginv.at(i + 1, j + 1) * didj_v[i][j - i][a][p];
                }
            }
            out[a][p] = -rhs / g00;
        }
    }
    let rhs = out
        .into_iter()
        .map(|vals| SpectralField::from_values(grid.clone(), vals).dealias())
        .collect();
    let ginv_fields = ginv_store
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|vals| SpectralField::from_values(grid.clone(), vals))
                .collect()
        })
        .collect();
    Ok((rhs, ginv_fields))
}

/// Exact third time jet of the evolved system: `∂₀³Y = ∂₀[rhs]` by the
/// chain rule, every ingredient being an exact derivative of the state.
pub fn parametric_jet3(state: &ParametricState) -> Result<Vec<SpectralField>> {
    let grid = &state.grid;
    let d = grid.dim;
    let dd = d + 1;
    let na = state.disp.len();
    let target = MinkowskiTarget { ambient_dim: na };
    let npts = grid.len();
    let der = derivatives(state);
    let (rhs2, _) = rhs_and_metric(state)?;

    // time derivatives of the spatial derivative blocks
    let d0d0di: Vec<Vec<SpectralField>> = (0..d)
        .map(|i| (0..na).map(|a| rhs2[a].derivative(i)).collect())
        .collect();
    let d0didj: Vec<Vec<Vec<SpectralField>>> = (0..d)
        .map(|i| {
            (i..d)
                .map(|j| (0..na).map(|a| state.dy0[a].derivative(i).derivative(j)).collect())
                .collect()
        })
        .collect();

    let dy_v: Vec<Vec<&[f64]>> = der.dy.iter().map(|r| r.iter().map(|f| f.values()).collect()).collect();
    let d0di_v: Vec<Vec<&[f64]>> =
        der.d0di.iter().map(|r| r.iter().map(|f| f.values()).collect()).collect();
    let didj_v: Vec<Vec<Vec<&[f64]>>> = der
        .didj
        .iter()
        .map(|r| r.iter().map(|c| c.iter().map(|f| f.values()).collect()).collect())
        .collect();
    let rhs2_v: Vec<&[f64]> = rhs2.iter().map(|f| f.values()).collect();
    let d0d0di_v: Vec<Vec<&[f64]>> =
        d0d0di.iter().map(|r| r.iter().map(|f| f.values()).collect()).collect();
    let d0didj_v: Vec<Vec<Vec<&[f64]>>> = d0didj
        .iter()
        .map(|r| r.iter().map(|c| c.iter().map(|f| f.values()).collect()).collect())
        .collect();

    let mut out = vec![vec![0.0; npts]; na];
    let mut u = vec![0.0; na];
    let mut v = vec![0.0; na];
    for p in 0..npts {
        // metric, inverse and time derivative of the metric
        let mut g = SmallMat::zeros(dd);
        for al in 0..dd {
            for be in 0..dd {
                for a in 0..na {
                    u[a] = dy_v[al][a][p];
                    v[a] = dy_v[be][a][p];
                }
                g.set(al, be, target.inner(&u, &v));
            }
        }
        let ginv = g.inverse().ok_or(CoreError::DegenerateSurface { point: p, det: g.det() })?;
        // ∂₀ ∂_α Y at this point: α = 0 → rhs2; α = i → d0di
        let d0dy = |al: usize, a: usize| -> f64 {
            if al == 0 {
                rhs2_v[a][p]
            } else {
                d0di_v[al - 1][a][p]
            }
        };
        let mut dg = SmallMat::zeros(dd);
        for al in 0..dd {
            for be in 0..dd {
                let mut s = 0.0;
                for a in 0..na {
                    let eta = target.eta(a);
                    s += eta * (d0dy(al, a) * dy_v[be][a][p] + dy_v[al][a][p] * d0dy(be, a));
                }
                dg.set(al, be, s);
            }
        }
        // ∂₀ g^{αβ} = −g^{αμ} ∂₀g_{μν} g^{νβ}
        let mut dginv = SmallMat::zeros(dd);
        for al in 0..dd {
            for be in 0..dd {
                let mut s = 0.0;
                for mu in 0..dd {
                    for nu in 0..dd {
                        s -= ginv.at(al, mu) * dg.at(mu, nu) * ginv.at(nu, be);
                    }
                }
                dginv.set(al, be, s);
            }
        }
        let g00 = ginv.at(0, 0);
        for a in 0..na {
            // B = 2 g^{0i} ∂₀∂_i Y + g^{ij} ∂_i∂_j Y; rhs = −B/g^{00}
            let mut b = 0.0;
            let mut db = 0.0;
            for i in 0..d {
                b += 2.0 * ginv.at(0, i + 1) * d0di_v[i][a][p];
                db += 2.0 * dginv.at(0, i + 1) * d0di_v[i][a][p]
                    + 2.0 * ginv.at(0, i + 1) * d0d0di_v[i][a][p];
                for j in i..d {
                    let sym = if i == j { 1.0 } else { 2.0 };
                    b += sym * ginv.at(i + 1, j + 1) * didj_v[i][j - i][a][p];
                    db += sym
                        * (dginv.at(i + 1, j + 1) * didj_v[i][j - i][a][p]
                            + ginv.at(i + 1, j + 1) * d0didj_v[i][j - i][a][p]);
                }
            }
            out[a][p] = -db / g00 + b * dginv.at(0, 0) / (g00 * g00);
        }
    }
    Ok(out
        .into_iter()
        .map(|vals| SpectralField::from_values(grid.clone(), vals).dealias())
        .collect())
}

impl ParametricState {
    pub fn flat(grid: Arc<TorusGrid>, codim: usize) -> Self {
        let na = grid.dim + 1 + codim;
        let disp = (0..na).map(|_| SpectralField::zeros(grid.clone())).collect();
        let dy0 = (0..na)
            .map(|a| {
                if a == 0 {
                    SpectralField::constant(grid.clone(), 1.0)
                } else {
                    SpectralField::zeros(grid.clone())
                }
            })
            .collect();
        ParametricState { grid, codim, disp, dy0 }
    }

    pub fn ambient_dim(&self) -> usize {
        self.disp.len()
    }

    /// One RK4 step with dealiasing of the updated state.
    ///
    /// The displacement integrates `∂₀u = ∂₀Y − ∂₀Y₀`, i.e. the stored
    /// velocity minus the constant time-direction unit.
    pub fn step(&self, dt: f64, cfl: f64) -> Result<ParametricState> {
        check_cfl(dt, self.grid.dx(), 1.6, cfl)?;
        let na = self.ambient_dim();

        let stage = |disp: &[SpectralField], dy0: &[SpectralField]| ParametricState {
            grid: self.grid.clone(),
            codim: self.codim,
            disp: disp.to_vec(),
            dy0: dy0.to_vec(),
        };
        let u_rate = |dy0: &[SpectralField]| -> Vec<SpectralField> {
            dy0.iter()
                .enumerate()
                .map(|(a, f)| if a == 0 { f.map(|v| v - 1.0) } else { f.clone() })
                .collect()
        };

        let k1u = u_rate(&self.dy0);
        let k1v = parametric_rhs(self)?;
        let s2 = stage(
            &add_scaled(&self.disp, 0.5 * dt, &k1u),
            &add_scaled(&self.dy0, 0.5 * dt, &k1v),
        );
        let k2u = u_rate(&s2.dy0);
        let k2v = parametric_rhs(&s2)?;
        let s3 = stage(
            &add_scaled(&self.disp, 0.5 * dt, &k2u),
            &add_scaled(&self.dy0, 0.5 * dt, &k2v),
        );
        let k3u = u_rate(&s3.dy0);
        let k3v = parametric_rhs(&s3)?;
        let s4 = stage(&add_scaled(&self.disp, dt, &k3u), &add_scaled(&self.dy0, dt, &k3v));
        let k4u = u_rate(&s4.dy0);
        let k4v = parametric_rhs(&s4)?;

        let c = dt / 6.0;
        let mut disp = Vec::with_capacity(na);
        let mut dy0 = Vec::with_capacity(na);
        for a in 0..na {
            let u = SpectralField::linear_combination(&[
                (1.0, &self.disp[a]),
                (c, &k1u[a]),
                (2.0 * c, &k2u[a]),
                (2.0 * c, &k3u[a]),
                (c, &k4u[a]),
            ])
            .dealias();
            let v = SpectralField::linear_combination(&[
                (1.0, &self.dy0[a]),
                (c, &k1v[a]),
                (2.0 * c, &k2v[a]),
                (2.0 * c, &k3v[a]),
                (c, &k4v[a]),
            ])
            .dealias();
            if !u.is_finite() || !v.is_finite() {
                return Err(CoreError::NonFinite { context: "parametric RK4 step".into() });
            }
            disp.push(u);
            dy0.push(v);
        }
        Ok(ParametricState { grid: self.grid.clone(), codim: self.codim, disp, dy0 })
    }

    /// Integrate and store an immersion history with exact second and third
    /// jets on every stored slice.
    pub fn run(
        &self,
        dt: f64,
        steps: usize,
        store_every: usize,
        cfl: f64,
    ) -> Result<ImmersionHistory> {
        // the stored history carries its own uniform slice spacing
        let store_dt = dt * store_every as f64;
        let stored_steps = steps / store_every;
        let hgrid = TorusGrid::new(
            self.grid.dim,
            self.grid.points_per_axis,
            (store_dt * stored_steps as f64).max(store_dt),
            stored_steps.max(1),
        );
        let mut hist = ImmersionHistory::new(hgrid, self.grid.dim, self.codim);
        let mut state = self.clone();
        let push = |hist: &mut ImmersionHistory, t: f64, st: &ParametricState| -> Result<()> {
            let d2 = parametric_rhs(st)?;
            let d3 = parametric_jet3(st)?;
            hist.push_slice_with_jets(
                t,
                Immersion { disp: st.disp.clone(), dy0: st.dy0.clone() },
                d2,
                d3,
            );
            Ok(())
        };
        push(&mut hist, 0.0, &state)?;
        for s in 1..=steps {
            state = state.step(dt, cfl)?;
            if s % store_every == 0 {
                push(&mut hist, s as f64 * dt, &state)?;
            }
        }
        Ok(hist)
    }
}

fn add_scaled(base: &[SpectralField], c: f64, dir: &[SpectralField]) -> Vec<SpectralField> {
    base.iter().zip(dir).map(|(b, d)| b.axpy(c, d)).collect()
}
