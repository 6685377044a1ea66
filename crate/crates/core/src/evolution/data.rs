//! Initial data `(Ȳ, n̄)` → evolution state, with the balanced-gauge slice
//! conditions fixing `(N₀, β₀)` and hence `∂₀Y|₀ = N₀ n̄ + β₀^i ∂_i Ȳ`.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::linalg::SmallMat;
use crate::solvers::{
    solve_elliptic_perturbative, solve_vector_laplacian, EllipticKind, SliceMetric,
};
use crate::spectral::{SpectralField, TorusGrid};

use super::parametric::ParametricState;

/// An initial data pair: `Ȳ` as displacement from the flat slice and the
/// full components of `n̄`.
#[derive(Clone)]
pub struct InitialData {
    pub grid: Arc<TorusGrid>,
    pub codim: usize,
    pub ybar_disp: Vec<SpectralField>,
    pub nbar: Vec<SpectralField>,
}

/// Measured properties of the constructed state.
pub struct InitialDataReport {
    pub constraint_normal: f64,
    pub constraint_unit: f64,
    pub lapse_deviation: f64,
    pub shift_size: f64,
}

impl InitialData {
    pub fn ambient_dim(&self) -> usize {
        self.ybar_disp.len()
    }

    /// Flat data.
    pub fn flat(grid: Arc<TorusGrid>, codim: usize) -> Self {
        let na = grid.dim + 1 + codim;
        InitialData {
            grid: grid.clone(),
            codim,
            ybar_disp: (0..na).map(|_| SpectralField::zeros(grid.clone())).collect(),
            nbar: (0..na)
                .map(|a| {
                    if a == 0 {
                        SpectralField::constant(grid.clone(), 1.0)
                    } else {
                        SpectralField::zeros(grid.clone())
                    }
                })
                .collect(),
        }
    }

    /// `∂_i Ȳ^A` including the affine part.
    pub fn dybar(&self, axis: usize, a: usize) -> SpectralField {
        let der = self.ybar_disp[a].derivative(axis);
        if a == axis + 1 {
            der.map(|v| v + 1.0)
        } else {
            der
        }
    }

    /// Max-norm residuals of the two data constraints
    /// `m(n̄, n̄) = −1`, `m(∂_i Ȳ, n̄) = 0`.
    pub fn constraint_residuals(&self) -> (f64, f64) {
        let grid = &self.grid;
        let d = grid.dim;
        let na = self.ambient_dim();
        let mut unit = SpectralField::zeros(grid.clone());
        for a in 0..na {
            let eta = if a == 0 { -1.0 } else { 1.0 };
            unit = unit.add(&self.nbar[a].mul(&self.nbar[a]).scale(eta));
        }
        let unit_res = unit.map(|v| v + 1.0).max_abs();
        let mut normal_res = 0.0f64;
        for i in 0..d {
            let mut acc = SpectralField::zeros(grid.clone());
            for a in 0..na {
                let eta = if a == 0 { -1.0 } else { 1.0 };
                acc = acc.add(&self.dybar(i, a).mul(&self.nbar[a]).scale(eta));
            }
            normal_res = normal_res.max(acc.max_abs());
        }
        (normal_res, unit_res)
    }

    /// Project a candidate `n̄` onto the exact constraint set:
    /// orthogonalize against the tangent vectors with the Minkowski Gram
    /// system, then normalize to `m(n̄, n̄) = −1`.
    pub fn enforce_constraints(&mut self) -> Result<()> {
        let grid = self.grid.clone();
        let d = grid.dim;
        let na = self.ambient_dim();
        let npts = grid.len();
        let tangents: Vec<Vec<SpectralField>> =
            (0..d).map(|i| (0..na).map(|a| self.dybar(i, a)).collect()).collect();
        let tan_v: Vec<Vec<&[f64]>> = tangents
            .iter()
            .map(|row| row.iter().map(|f| f.values()).collect())
            .collect();
        let n_v: Vec<&[f64]> = self.nbar.iter().map(|f| f.values()).collect();
        let eta = |a: usize| if a == 0 { -1.0 } else { 1.0 };
        let mut out = vec![vec![0.0; npts]; na];
        for p in 0..npts {
            // subtract the tangential part: solve ḡ c = m(∂Ȳ, n̄)
            let mut gbar = SmallMat::zeros(d);
            for i in 0..d {
                for j in 0..d {
                    let mut s = 0.0;
                    for a in 0..na {
                        s += eta(a) * tan_v[i][a][p] * tan_v[j][a][p];
                    }
                    gbar.set(i, j, s);
                }
            }
            let rhs: Vec<f64> = (0..d)
                .map(|i| {
                    let mut s = 0.0;
                    for a in 0..na {
                        s += eta(a) * tan_v[i][a][p] * n_v[a][p];
                    }
                    s
                })
                .collect();
            let c = gbar
                .solve(&rhs)
                .ok_or(CoreError::DataConstraint("spatial metric degenerate".into()))?;
            let mut n = vec![0.0; na];
            for a in 0..na {
                n[a] = n_v[a][p];
                for i in 0..d {
                    n[a] -= c[i] * tan_v[i][a][p];
                }
            }
            let mut nn = 0.0;
            for a in 0..na {
                nn += eta(a) * n[a] * n[a];
            }
            if nn >= 0.0 {
                return Err(CoreError::DataConstraint(format!(
                    "candidate normal not timelike at point {p}"
                )));
            }
            let scale = 1.0 / (-nn).sqrt();
            let sign = if n[0] > 0.0 { 1.0 } else { -1.0 };
            for a in 0..na {
                out[a][p] = sign * scale * n[a];
            }
        }
        self.nbar = out
            .into_iter()
            .map(|vals| SpectralField::from_values(grid.clone(), vals))
            .collect();
        Ok(())
    }
}

/// Build the evolution state from a data pair: check the constraints, then
/// choose `(N₀, β₀)` so the balanced-gauge slice conditions hold at `t = 0`
/// (the tilded sources vanish on the initial slice, so the lapse condition
/// reduces to `Δ_ḡ |D|^{−1}(N−1) = 𝒫_ḡ tr_ḡ h` and the harmonic condition
/// determines `β` from the contracted Christoffel symbols).
pub fn initial_data_from_pair(
    data: &InitialData,
    tol: f64,
) -> Result<(ParametricState, InitialDataReport)> {
    let grid = data.grid.clone();
    let d = grid.dim;
    let na = data.ambient_dim();
    let (c_normal, c_unit) = data.constraint_residuals();
    if c_normal > tol || c_unit > tol {
        return Err(CoreError::DataConstraint(format!(
            "m(∂Ȳ,n̄) residual {c_normal:.3e}, m(n̄,n̄)+1 residual {c_unit:.3e} exceed tol {tol:.1e}"
        )));
    }

    // slice metric
    let eta = |a: usize| if a == 0 { -1.0 } else { 1.0 };
    let mut gbar = vec![vec![SpectralField::zeros(grid.clone()); d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut acc = SpectralField::zeros(grid.clone());
            for a in 0..na {
                acc = acc.add(&data.dybar(i, a).mul(&data.dybar(j, a)).scale(eta(a)));
            }
            gbar[i][j] = acc;
        }
    }
    let metric = SliceMetric::from_components(gbar)?;

    // h_ij = m(n̄, ∂²_ij Ȳ)
    let mut h = vec![vec![SpectralField::zeros(grid.clone()); d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut acc = SpectralField::zeros(grid.clone());
            for a in 0..na {
                let dd = data.ybar_disp[a].derivative(i).derivative(j);
                acc = acc.add(&data.nbar[a].mul(&dd).scale(eta(a)));
            }
            h[i][j] = acc;
        }
    }
    let mut trace = SpectralField::zeros(grid.clone());
    for i in 0..d {
        for j in 0..d {
            trace = trace.add(&metric.ginv[i][j].mul(&h[i][j]));
        }
    }

    // lapse: N₀ = 1 + |D| Δ_ḡ^{−1} 𝒫_ḡ (tr_ḡ h)
    let w = solve_elliptic_perturbative(
        &metric,
        &metric.project_mean_free(&trace),
        EllipticKind::LaplaceBeltrami,
        1e-10,
        400,
    )?;
    let lapse = w.abs_d().map(|v| v + 1.0);

    // shift: tensorial Δ_ḡ (|D|^{−1} β)^k = −ḡ^{ij} Γ̄^k_{ij}
    let mut contracted = vec![SpectralField::zeros(grid.clone()); d];
    for kk in 0..d {
        let mut acc = SpectralField::zeros(grid.clone());
        for i in 0..d {
            for j in 0..d {
                acc = acc.add(&metric.ginv[i][j].mul(&metric.gamma_up[kk][i][j]));
            }
        }
        contracted[kk] = acc;
    }
    let rhs: Vec<SpectralField> = contracted.iter().map(|f| f.scale(-1.0)).collect();
    let vv = solve_vector_laplacian(&metric, &rhs, 1e-10, 400)?;
    let shift: Vec<SpectralField> = vv.iter().map(|f| f.abs_d()).collect();

    // ∂₀Y = N₀ n̄ + β₀^k ∂_k Ȳ
    let mut dy0 = Vec::with_capacity(na);
    for a in 0..na {
        let mut acc = lapse.mul(&data.nbar[a]);
        for kk in 0..d {
            acc = acc.add(&shift[kk].mul(&data.dybar(kk, a)));
        }
        dy0.push(acc);
    }

    let report = InitialDataReport {
        constraint_normal: c_normal,
        constraint_unit: c_unit,
        lapse_deviation: lapse.map(|v| v - 1.0).max_abs(),
        shift_size: shift.iter().map(|f| f.max_abs()).fold(0.0f64, f64::max),
    };
    let state = ParametricState {
        grid,
        codim: data.codim,
        disp: data.ybar_disp.clone(),
        dy0,
    };
    Ok((state, report))
}
