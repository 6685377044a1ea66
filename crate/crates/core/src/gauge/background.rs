//! Background data for the gauge flow: the product-gauge immersion with its
//! geometry tabulated per slice, evaluable at diffeomorphism-mapped points.
//!
//! Composition with `Ψ` uses jet evaluation about the flow grid point and
//! the nearest stored slice: second order in the time offset (finite
//! differences across slices) and first order in the spatial displacement
//! (spectral gradients). Every interpolated field is an O(ε) deviation from
//! a constant, so the truncation error is O(ε·δt³ + ε²·|u| + ε·|u|²) — far
//! below the O(ε²) structure the flow resolves.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{CoreError, Result};
use crate::geometry::stencil::fd_time_derivative_any;
use crate::geometry::{FrameHistory, GeometrySnapshot, ImmersionHistory};
use crate::spectral::{SpectralField, TorusGrid};

/// Identifies one scalar component field of the background.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Field {
    /// displacement `Y^A − Y₀^A`
    Disp(usize),
    /// velocity `∂₀Y^A`
    Dy0(usize),
    /// spatial derivative `∂_iY^A` (affine part included)
    DySpatial(usize, usize),
    /// metric `g_{αβ}` (spacetime indices)
    G(usize, usize),
    /// Christoffel `Γ^{(0)λ}_{μν}`
    Gamma(usize, usize, usize),
    /// second fundamental form `k^{Ā}_{αβ}` (background frame)
    K(usize, usize, usize),
    /// frame component `e′^A_{Ā}`
    EPrime(usize, usize),
    /// connection `ω′^{Ā}_{αB̄}`
    OmegaPrime(usize, usize, usize),
    /// Gram matrix `m(e′_Ā, e′_B̄)`
    GramPrime(usize, usize),
}

struct SliceTables {
    /// `jets[field*3 + m][point]`: m-th time jet values
    jets: Vec<Vec<f64>>,
    /// `grads[field*3 + m][axis][point]`
    grads: Vec<Vec<Vec<f64>>>,
}

pub struct Background {
    pub grid: Arc<TorusGrid>,
    pub dd: usize,
    pub codim: usize,
    pub ambient: usize,
    pub times: Vec<f64>,
    fields: Vec<Field>,
    index: HashMap<Field, usize>,
    /// raw per-slice component fields: `raw[s][field]`
    raw: Vec<Vec<SpectralField>>,
    /// lazily built jet/gradient tables per slice
    tables: Mutex<HashMap<usize, Arc<SliceTables>>>,
}

impl Background {
    /// Tabulate the background geometry from a stored history.
    pub fn from_history(hist: &ImmersionHistory, frames: &FrameHistory) -> Result<Background> {
        let grid = hist.grid.clone();
        let dd = grid.dim + 1;
        let codim = hist.codim;
        let ambient = hist.target.ambient_dim;

        let mut fields = Vec::new();
        for a in 0..ambient {
            fields.push(Field::Disp(a));
        }
        for a in 0..ambient {
            fields.push(Field::Dy0(a));
        }
        for i in 0..grid.dim {
            for a in 0..ambient {
                fields.push(Field::DySpatial(i, a));
            }
        }
        for al in 0..dd {
            for be in 0..dd {
                fields.push(Field::G(al, be));
            }
        }
        for la in 0..dd {
            for mu in 0..dd {
                for nu in 0..dd {
                    fields.push(Field::Gamma(la, mu, nu));
                }
            }
        }
        for abar in 0..codim {
            for al in 0..dd {
                for be in 0..dd {
                    fields.push(Field::K(abar, al, be));
                }
            }
        }
        for abar in 0..codim {
            for a in 0..ambient {
                fields.push(Field::EPrime(abar, a));
            }
        }
        for al in 0..dd {
            for abar in 0..codim {
                for bbar in 0..codim {
                    fields.push(Field::OmegaPrime(al, abar, bbar));
                }
            }
        }
        for abar in 0..codim {
            for bbar in 0..codim {
                fields.push(Field::GramPrime(abar, bbar));
            }
        }
        let index: HashMap<Field, usize> =
            fields.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect();

        let mut raw = Vec::with_capacity(hist.len());
        for s in 0..hist.len() {
            let snap = GeometrySnapshot::compute(hist, frames, s)?;
            let mut per = Vec::with_capacity(fields.len());
            for f in &fields {
                let fld = match *f {
                    Field::Disp(a) => hist.slice(s).disp[a].clone(),
                    Field::Dy0(a) => hist.slice(s).dy0[a].clone(),
                    Field::DySpatial(i, a) => hist.dy_spatial(s, i, a),
                    Field::G(al, be) => snap.g[al][be].clone(),
                    Field::Gamma(la, mu, nu) => snap.gamma_up[la][mu][nu].clone(),
                    Field::K(abar, al, be) => snap.k[abar][al][be].clone(),
                    Field::EPrime(abar, a) => snap.e[abar][a].clone(),
                    Field::OmegaPrime(al, abar, bbar) => snap.omega[al][abar][bbar].clone(),
                    Field::GramPrime(abar, bbar) => snap.gram[abar][bbar].clone(),
                };
                per.push(fld);
            }
            raw.push(per);
        }
        Ok(Background {
            grid,
            dd,
            codim,
            ambient,
            times: hist.times.clone(),
            fields,
            index,
            raw,
            tables: Mutex::new(HashMap::new()),
        })
    }

    fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            1.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    fn tables_for(&self, s: usize) -> Arc<SliceTables> {
        if let Some(t) = self.tables.lock().unwrap().get(&s) {
            return t.clone();
        }
        let dt = self.dt();
        let d = self.grid.dim;
        let nf = self.fields.len();
        let mut jets = Vec::with_capacity(nf * 3);
        let mut grads = Vec::with_capacity(nf * 3);
        for fi in 0..nf {
            let series: Vec<SpectralField> =
                self.raw.iter().map(|per| per[fi].clone()).collect();
            for m in 0..3usize {
                let jet = if m == 0 {
                    series[s].clone()
                } else {
                    fd_time_derivative_any(&series, dt, s, m)
                        .unwrap_or_else(|_| SpectralField::zeros(self.grid.clone()))
                };
                let g: Vec<Vec<f64>> =
                    (0..d).map(|ax| jet.derivative(ax).values().to_vec()).collect();
                jets.push(jet.values().to_vec());
                grads.push(g);
            }
        }
        let t = Arc::new(SliceTables { jets, grads });
        let mut cache = self.tables.lock().unwrap();
        // the flow touches at most two slices at a time
        if cache.len() > 2 {
            cache.clear();
        }
        cache.insert(s, t.clone());
        t
    }

    /// Nearest stored slice to a target time, with range check.
    fn nearest_slice(&self, t: f64) -> Result<usize> {
        let dt = self.dt();
        let last = *self.times.last().unwrap();
        if t < self.times[0] - 0.5 * dt || t > last + 0.5 * dt {
            return Err(CoreError::FlowAborted {
                t,
                reason: format!("mapped time {t:.4} outside stored background [0, {last:.4}]"),
            });
        }
        let idx = ((t - self.times[0]) / dt).round() as isize;
        Ok(idx.clamp(0, self.times.len() as isize - 1) as usize)
    }

    /// Evaluate a batch of fields at mapped points `(t'_p, x_p + u(x_p))`.
    pub fn eval_mapped(
        &self,
        which: &[Field],
        tprime: &[f64],
        u: &[Vec<f64>],
    ) -> Result<Vec<Vec<f64>>> {
        let d = self.grid.dim;
        let npts = self.grid.len();
        debug_assert_eq!(tprime.len(), npts);
        let mut slice_of = vec![0usize; npts];
        for p in 0..npts {
            slice_of[p] = self.nearest_slice(tprime[p])?;
        }
        let mut out = vec![vec![0.0; npts]; which.len()];
        for (wi, f) in which.iter().enumerate() {
            let fi = *self
                .index
                .get(f)
                .ok_or_else(|| CoreError::Other(format!("background field {f:?} not tabulated")))?;
            for p in 0..npts {
                let s = slice_of[p];
                let tables = self.tables_for(s);
                let delta = tprime[p] - self.times[s];
                let mut acc = 0.0;
                let mut fact = 1.0;
                for m in 0..3usize {
                    if m > 0 {
                        fact *= m as f64;
                    }
                    let mut val = tables.jets[fi * 3 + m][p];
                    for ax in 0..d {
                        val += u[ax][p] * tables.grads[fi * 3 + m][ax][p];
                    }
                    acc += delta.powi(m as i32) / fact * val;
                }
                out[wi][p] = acc;
            }
        }
        Ok(out)
    }

    pub fn field_list(&self) -> &[Field] {
        &self.fields
    }
}
