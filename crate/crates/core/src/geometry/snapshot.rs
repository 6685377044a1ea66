//! One-slice extrinsic geometry: induced metric, Christoffel symbols (two
//! routes), second fundamental form, normal connection, curvature tensors
//! and their identity residuals.
//!
//! Index order conventions for the nested component vectors are documented
//! field by field; spacetime indices run over `0..=d` with `0` the time
//! direction, frame indices over `0..codim`.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::linalg::SmallMat;
use crate::spectral::{SpectralField, TorusGrid};

use super::frame::FrameHistory;
use super::immersion::{ImmersionHistory, MinkowskiTarget};
use super::stencil::{fd_time_derivative, fd_time_derivative_any};

/// Fully expanded geometry of one slice.
pub struct GeometrySnapshot {
    pub grid: Arc<TorusGrid>,
    pub target: MinkowskiTarget,
    pub time: f64,
    /// spacetime dimension `d+1`
    pub dd: usize,
    pub codim: usize,

    /// `∂_α Y^A`: `dy[α][a]`
    pub dy: Vec<Vec<SpectralField>>,
    /// `∂_α ∂_β Y^A`: `ddy[α][β][a]`
    pub ddy: Vec<Vec<Vec<SpectralField>>>,

    /// `g_{αβ}` and inverse
    pub g: Vec<Vec<SpectralField>>,
    pub ginv: Vec<Vec<SpectralField>>,
    /// `∂_μ g_{αβ}`: `dg[μ][α][β]`
    pub dg: Vec<Vec<Vec<SpectralField>>>,
    /// `∂_κ ∂_μ g_{αβ}`: `ddg[κ][μ][α][β]`
    pub ddg: Vec<Vec<Vec<Vec<SpectralField>>>>,

    /// `Γ_{λμν}` (all indices down) and `Γ^γ_{αβ}` from the metric route
    pub gamma_low: Vec<Vec<Vec<SpectralField>>>,
    pub gamma_up: Vec<Vec<Vec<SpectralField>>>,
    /// `∂_κ Γ_{λμν}`: `dgamma_low[κ][λ][μ][ν]`
    pub dgamma_low: Vec<Vec<Vec<Vec<SpectralField>>>>,
    /// `Γ^γ_{αβ}` from the tangential projection of `∂²Y`
    pub gamma_proj: Vec<Vec<Vec<SpectralField>>>,

    /// frame components `e[abar][a]` and derivatives `de[α][abar][a]`
    pub e: Vec<Vec<SpectralField>>,
    pub de: Vec<Vec<Vec<SpectralField>>>,
    /// frame Gram matrix `m(e_Ā, e_B̄)` and inverse
    pub gram: Vec<Vec<SpectralField>>,
    pub gram_inv: Vec<Vec<SpectralField>>,

    /// second fundamental form `k^Ā_{αβ}`: `k[abar][α][β]`
    pub k: Vec<Vec<Vec<SpectralField>>>,
    /// normal connection `ω^Ā_{αB̄}`: `omega[α][abar][bbar]`
    pub omega: Vec<Vec<Vec<SpectralField>>>,
}

/// Values view of a component list, used in the pointwise loops.
fn values<'a>(fields: &'a [SpectralField]) -> Vec<&'a [f64]> {
    fields.iter().map(|f| f.values()).collect()
}

impl GeometrySnapshot {
    /// Build the snapshot of slice `s`. The frame history must match the
    /// immersion history slice for slice; time derivatives of the frame use
    /// the 5-point stencil.
    pub fn compute(
        history: &ImmersionHistory,
        frames: &FrameHistory,
        s: usize,
    ) -> Result<GeometrySnapshot> {
        let grid = history.grid.clone();
        let target = history.target;
        let d = grid.dim;
        let dd = d + 1;
        let na = target.ambient_dim;
        let codim = history.codim;
        let npts = grid.len();
        if frames.slices.len() != history.len() {
            return Err(CoreError::Other(
                "frame history must match immersion history".into(),
            ));
        }

        // ---- time jets ----
        let jet1 = history.y_jet(s, 1)?;
        let jet2 = history.y_jet(s, 2)?;
        let jet3 = history.y_jet(s, 3)?;

        // ---- first derivatives dy[α][a] ----
        let mut dy: Vec<Vec<SpectralField>> = Vec::with_capacity(dd);
        dy.push(jet1.clone());
        for i in 0..d {
            dy.push((0..na).map(|a| history.dy_spatial(s, i, a)).collect());
        }

        // ---- second derivatives ddy[α][β][a] ----
        let mut ddy: Vec<Vec<Vec<SpectralField>>> =
            vec![vec![Vec::new(); dd]; dd];
        ddy[0][0] = jet2.clone();
        for i in 0..d {
            let col: Vec<SpectralField> = (0..na).map(|a| jet1[a].derivative(i)).collect();
            ddy[0][i + 1] = col.clone();
            ddy[i + 1][0] = col;
        }
        for i in 0..d {
            for j in i..d {
                let col: Vec<SpectralField> = (0..na)
                    .map(|a| history.slice(s).disp[a].derivative(i).derivative(j))
                    .collect();
                ddy[i + 1][j + 1] = col.clone();
                ddy[j + 1][i + 1] = col;
            }
        }

        // ---- third derivatives d3y[(α,β,γ) sorted] ----
        // Needed combinations for ddg: all sorted triples.
        let mut d3y: Vec<Vec<Vec<Vec<SpectralField>>>> =
            vec![vec![vec![Vec::new(); dd]; dd]; dd];
        for al in 0..dd {
            for be in al..dd {
                for ga in be..dd {
                    let col: Vec<SpectralField> = if al == 0 && be == 0 && ga == 0 {
                        jet3.clone()
                    } else if al == 0 && be == 0 {
                        (0..na).map(|a| jet2[a].derivative(ga - 1)).collect()
                    } else if al == 0 {
                        (0..na)
                            .map(|a| jet1[a].derivative(be - 1).derivative(ga - 1))
                            .collect()
                    } else {
                        (0..na)
                            .map(|a| {
                                history.slice(s).disp[a]
                                    .derivative(al - 1)
                                    .derivative(be - 1)
                                    .derivative(ga - 1)
                            })
                            .collect()
                    };
                    // fill all permutations
                    let perms = [
                        (al, be, ga), (al, ga, be), (be, al, ga),
                        (be, ga, al), (ga, al, be), (ga, be, al),
                    ];
                    for (a1, a2, a3) in perms {
                        if d3y[a1][a2][a3].is_empty() {
                            d3y[a1][a2][a3] = col.clone();
                        }
                    }
                }
            }
        }

        // ---- metric g, inverse, Lorentzian check ----
        let inner = |u: &[SpectralField], v: &[SpectralField]| -> SpectralField {
            let mut acc = u[0].mul(&v[0]).scale(-1.0);
            for a in 1..na {
                acc = acc.add(&u[a].mul(&v[a]));
            }
            acc
        };

        let mut g: Vec<Vec<SpectralField>> = vec![Vec::new(); dd];
        for al in 0..dd {
            g[al] = (0..dd).map(|be| inner(&dy[al], &dy[be])).collect();
        }

        // pointwise inverse + signature check
        let g_vals: Vec<Vec<&[f64]>> = g.iter().map(|row| values(row)).collect();
        let mut ginv_vals: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.0; npts]; dd]; dd];
        for p in 0..npts {
            let mut m = SmallMat::zeros(dd);
            for al in 0..dd {
                for be in 0..dd {
                    m.set(al, be, g_vals[al][be][p]);
                }
            }
            let det = m.det();
            if det >= 0.0 {
                return Err(CoreError::DegenerateSurface { point: p, det });
            }
            // spatial block positive definite: leading minors
            for sz in 1..=d {
                let mut blk = SmallMat::zeros(sz);
                for i in 0..sz {
                    for j in 0..sz {
                        blk.set(i, j, g_vals[i + 1][j + 1][p]);
                    }
                }
                if blk.det() <= 0.0 {
                    return Err(CoreError::DegenerateSurface { point: p, det });
                }
            }
            let inv = m.inverse().ok_or(CoreError::DegenerateSurface { point: p, det })?;
            for al in 0..dd {
                for be in 0..dd {
                    ginv_vals[al][be][p] = inv.at(al, be);
                }
            }
        }
        let ginv: Vec<Vec<SpectralField>> = ginv_vals
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|vals| SpectralField::from_values(grid.clone(), vals))
                    .collect()
            })
            .collect();

        // ---- ∂g and ∂∂g from derivative fields ----
        let mut dg: Vec<Vec<Vec<SpectralField>>> = vec![vec![Vec::new(); dd]; dd];
        for mu in 0..dd {
            for al in 0..dd {
                dg[mu][al] = (0..dd)
                    .map(|be| inner(&ddy[mu][al], &dy[be]).add(&inner(&dy[al], &ddy[mu][be])))
                    .collect();
            }
        }
        let mut ddg: Vec<Vec<Vec<Vec<SpectralField>>>> =
            vec![vec![vec![vec![]; dd]; dd]; dd];
        for ka in 0..dd {
            for mu in 0..dd {
                for al in 0..dd {
                    ddg[ka][mu][al] = (0..dd)
                        .map(|be| {
                            inner(&d3y[ka][mu][al], &dy[be])
                                .add(&inner(&ddy[mu][al], &ddy[ka][be]))
                                .add(&inner(&ddy[ka][al], &ddy[mu][be]))
                                .add(&inner(&dy[al], &d3y[ka][mu][be]))
                        })
                        .collect();
                }
            }
        }

        // ---- Christoffel symbols and their first derivatives ----
        let mut gamma_low: Vec<Vec<Vec<SpectralField>>> = vec![vec![Vec::new(); dd]; dd];
        for la in 0..dd {
            for mu in 0..dd {
                gamma_low[la][mu] = (0..dd)
                    .map(|nu| {
                        dg[mu][la][nu]
                            .add(&dg[nu][la][mu])
                            .sub(&dg[la][mu][nu])
                            .scale(0.5)
                    })
                    .collect();
            }
        }
        let mut gamma_up: Vec<Vec<Vec<SpectralField>>> = vec![vec![Vec::new(); dd]; dd];
        for ga in 0..dd {
            for al in 0..dd {
                gamma_up[ga][al] = (0..dd)
                    .map(|be| {
                        let mut acc = SpectralField::zeros(grid.clone());
                        for de in 0..dd {
                            acc = acc.add(&ginv[ga][de].mul(&gamma_low[de][al][be]));
                        }
                        acc
                    })
                    .collect();
            }
        }
        let mut dgamma_low: Vec<Vec<Vec<Vec<SpectralField>>>> =
            vec![vec![vec![vec![]; dd]; dd]; dd];
        for ka in 0..dd {
            for la in 0..dd {
                for mu in 0..dd {
                    dgamma_low[ka][la][mu] = (0..dd)
                        .map(|nu| {
                            ddg[ka][mu][la][nu]
                                .add(&ddg[ka][nu][la][mu])
                                .sub(&ddg[ka][la][mu][nu])
                                .scale(0.5)
                        })
                        .collect();
                }
            }
        }

        // ---- frame and its derivatives ----
        let frame = &frames.slices[s];
        if frame.codim() != codim {
            return Err(CoreError::Other("frame codim mismatch".into()));
        }
        let e = frame.e.clone();
        let dt = history.dt();
        let mut de: Vec<Vec<Vec<SpectralField>>> = vec![vec![Vec::new(); codim]; dd];
        for abar in 0..codim {
            // time derivative by stencil over the frame history
            let series: Vec<Vec<SpectralField>> = (0..na)
                .map(|a| frames.slices.iter().map(|fr| fr.e[abar][a].clone()).collect())
                .collect();
            de[0][abar] = (0..na)
                .map(|a| fd_time_derivative_any(&series[a], dt, s, 1))
                .collect::<Result<Vec<_>>>()?;
            for i in 0..d {
                de[i + 1][abar] = (0..na).map(|a| e[abar][a].derivative(i)).collect();
            }
        }

        // ---- frame Gram matrix ----
        let mut gram: Vec<Vec<SpectralField>> = vec![Vec::new(); codim];
        for i in 0..codim {
            gram[i] = (0..codim).map(|j| inner(&e[i], &e[j])).collect();
        }
        let gram_vals: Vec<Vec<&[f64]>> = gram.iter().map(|row| values(row)).collect();
        let mut gram_inv_vals: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.0; npts]; codim]; codim];
        for p in 0..npts {
            let mut m = SmallMat::zeros(codim);
            for i in 0..codim {
                for j in 0..codim {
                    m.set(i, j, gram_vals[i][j][p]);
                }
            }
            let det = m.det();
            let inv = m.inverse().ok_or(CoreError::FrameDegenerate { point: p, det })?;
            for i in 0..codim {
                for j in 0..codim {
                    gram_inv_vals[i][j][p] = inv.at(i, j);
                }
            }
        }
        let gram_inv: Vec<Vec<SpectralField>> = gram_inv_vals
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|vals| SpectralField::from_values(grid.clone(), vals))
                    .collect()
            })
            .collect();

        // ---- combined Gram solves: Γ_proj, k, ω ----
        // basis B = [∂_0 Y, …, ∂_d Y, e_0, …, e_{codim−1}] spans the ambient
        // space pointwise, so Π + Π⊥ decomposition is the exact solve.
        let dy_vals: Vec<Vec<&[f64]>> = dy.iter().map(|row| values(row)).collect();
        let e_vals: Vec<Vec<&[f64]>> = e.iter().map(|row| values(row)).collect();

        // right-hand sides: ddy pairs (α ≤ β) then de (α, bbar)
        let ddy_vals: Vec<Vec<Vec<&[f64]>>> = ddy
            .iter()
            .map(|row| row.iter().map(|col| values(col)).collect())
            .collect();
        let de_vals: Vec<Vec<Vec<&[f64]>>> = de
            .iter()
            .map(|row| row.iter().map(|col| values(col)).collect())
            .collect();

        let pair_count = dd * (dd + 1) / 2;
        let de_count = dd * codim;
        let ncols = pair_count + de_count;

        let mut gamma_proj_vals: Vec<Vec<Vec<Vec<f64>>>> =
            vec![vec![vec![vec![0.0; npts]; dd]; dd]; dd];
        let mut k_vals: Vec<Vec<Vec<Vec<f64>>>> =
            vec![vec![vec![vec![0.0; npts]; dd]; dd]; codim];
        let mut omega_vals: Vec<Vec<Vec<Vec<f64>>>> =
            vec![vec![vec![vec![0.0; npts]; codim]; codim]; dd];

        let nb = dd + codim;
        debug_assert_eq!(nb, na);
        let mut basis = vec![vec![0.0; na]; nb];
        let mut rhs = vec![0.0; nb * ncols];
        for p in 0..npts {
            for al in 0..dd {
                for a in 0..na {
                    basis[al][a] = dy_vals[al][a][p];
                }
            }
            for abar in 0..codim {
                for a in 0..na {
                    basis[dd + abar][a] = e_vals[abar][a][p];
                }
            }
            let mut gm = SmallMat::zeros(nb);
            for i in 0..nb {
                for j in 0..nb {
                    gm.set(i, j, target.inner(&basis[i], &basis[j]));
                }
            }
            // columns: m(B_i, v) for each rhs vector v
            let mut col = 0usize;
            let mut v = vec![0.0; na];
            for al in 0..dd {
                for be in al..dd {
                    for a in 0..na {
                        v[a] = ddy_vals[al][be][a][p];
                    }
                    for i in 0..nb {
                        rhs[i * ncols + col] = target.inner(&basis[i], &v);
                    }
                    col += 1;
                }
            }
            for al in 0..dd {
                for bbar in 0..codim {
                    for a in 0..na {
                        v[a] = de_vals[al][bbar][a][p];
                    }
                    for i in 0..nb {
                        rhs[i * ncols + col] = target.inner(&basis[i], &v);
                    }
                    col += 1;
                }
            }
            let sol = gm
                .solve_multi(&rhs, ncols)
                .ok_or(CoreError::DegenerateSurface { point: p, det: gm.det() })?;
            let mut col = 0usize;
            for al in 0..dd {
                for be in al..dd {
                    for ga in 0..dd {
                        let c = sol[ga * ncols + col];
                        gamma_proj_vals[ga][al][be][p] = c;
                        gamma_proj_vals[ga][be][al][p] = c;
                    }
                    for abar in 0..codim {
                        let c = sol[(dd + abar) * ncols + col];
                        k_vals[abar][al][be][p] = c;
                        k_vals[abar][be][al][p] = c;
                    }
                    col += 1;
                }
            }
            for al in 0..dd {
                for bbar in 0..codim {
                    for abar in 0..codim {
                        omega_vals[al][abar][bbar][p] = sol[(dd + abar) * ncols + col];
                    }
                    col += 1;
                }
            }
        }

        let wrap3 = |vals: Vec<Vec<Vec<Vec<f64>>>>, grid: &Arc<TorusGrid>| {
            vals.into_iter()
                .map(|l2| {
                    l2.into_iter()
                        .map(|l1| {
                            l1.into_iter()
                                .map(|v| SpectralField::from_values(grid.clone(), v))
                                .collect::<Vec<_>>()
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        };
        let gamma_proj = wrap3(gamma_proj_vals, &grid);
        let k = wrap3(k_vals, &grid);
        let omega = wrap3(omega_vals, &grid);

        Ok(GeometrySnapshot {
            grid,
            target,
            time: history.times[s],
            dd,
            codim,
            dy,
            ddy,
            g,
            ginv,
            dg,
            ddg,
            gamma_low,
            gamma_up,
            dgamma_low,
            gamma_proj,
            e,
            de,
            gram,
            gram_inv,
            k,
            omega,
        })
    }

    /// Riemann tensor from the Christoffel route:
    /// `R_{αβγδ} = ∂_α Γ_{γβδ} − ∂_β Γ_{γαδ} − Γ_{λαγ} Γ^λ_{βδ} + Γ_{λβγ} Γ^λ_{αδ}`.
    pub fn riemann_from_gamma(&self) -> Vec<Vec<Vec<Vec<SpectralField>>>> {
        let dd = self.dd;
        let mut out = vec![vec![vec![Vec::new(); dd]; dd]; dd];
        for al in 0..dd {
            for be in 0..dd {
                for ga in 0..dd {
                    out[al][be][ga] = (0..dd)
                        .map(|de| {
                            let mut r = self.dgamma_low[al][ga][be][de]
                                .sub(&self.dgamma_low[be][ga][al][de]);
                            for la in 0..dd {
                                r = r
                                    .sub(&self.gamma_low[la][al][ga].mul(&self.gamma_up[la][be][de]))
                                    .add(&self.gamma_low[la][be][ga].mul(&self.gamma_up[la][al][de]));
                            }
                            r
                        })
                        .collect();
                }
            }
        }
        out
    }

    /// Riemann tensor from the Gauss equation:
    /// `R_{αβγδ} = m̄_{ĀB̄} (k^Ā_{αγ} k^B̄_{βδ} − k^Ā_{αδ} k^B̄_{βγ})`.
    pub fn riemann_from_k(&self) -> Vec<Vec<Vec<Vec<SpectralField>>>> {
        let dd = self.dd;
        let cd = self.codim;
        let mut out = vec![vec![vec![Vec::new(); dd]; dd]; dd];
        for al in 0..dd {
            for be in 0..dd {
                for ga in 0..dd {
                    out[al][be][ga] = (0..dd)
                        .map(|de| {
                            let mut r = SpectralField::zeros(self.grid.clone());
                            for i in 0..cd {
                                for j in 0..cd {
                                    let term = self.k[i][al][ga]
                                        .mul(&self.k[j][be][de])
                                        .sub(&self.k[i][al][de].mul(&self.k[j][be][ga]));
                                    r = r.add(&self.gram[i][j].mul(&term));
                                }
                            }
                            r
                        })
                        .collect();
                }
            }
        }
        out
    }

    /// Both curvature routes and the max-norm of their difference.
    pub fn curvature_two_ways(
        &self,
    ) -> (Vec<Vec<Vec<Vec<SpectralField>>>>, Vec<Vec<Vec<Vec<SpectralField>>>>, f64) {
        let a = self.riemann_from_gamma();
        let b = self.riemann_from_k();
        let mut worst = 0.0f64;
        for al in 0..self.dd {
            for be in 0..self.dd {
                for ga in 0..self.dd {
                    for de in 0..self.dd {
                        worst = worst.max(a[al][be][ga][de].sub(&b[al][be][ga][de]).max_abs());
                    }
                }
            }
        }
        (a, b, worst)
    }

    /// Normal curvature from the Ricci equation (raised frame indices):
    /// `R^{⊥ĀB̄}_{αβ} = g^{γδ} (k^Ā_{αγ} k^B̄_{βδ} − k^B̄_{αγ} k^Ā_{βδ})`.
    ///
    /// The sign is fixed by requiring agreement with the connection-route
    /// curvature `∂ω − ∂ω + ωω − ωω` obtained from the same definition of
    /// `ω`; commuting flat ambient derivatives of the frame yields exactly
    /// this orientation of the wedge.
    pub fn normal_curvature_from_k(&self) -> Vec<Vec<Vec<Vec<SpectralField>>>> {
        let dd = self.dd;
        let cd = self.codim;
        // out[abar][bbar][α][β]
        let mut out = vec![vec![vec![Vec::new(); dd]; cd]; cd];
        for i in 0..cd {
            for j in 0..cd {
                for al in 0..dd {
                    out[i][j][al] = (0..dd)
                        .map(|be| {
                            let mut r = SpectralField::zeros(self.grid.clone());
                            for ga in 0..dd {
                                for de in 0..dd {
                                    let term = self.k[i][al][ga]
                                        .mul(&self.k[j][be][de])
                                        .sub(&self.k[j][al][ga].mul(&self.k[i][be][de]));
                                    r = r.add(&self.ginv[ga][de].mul(&term));
                                }
                            }
                            r
                        })
                        .collect();
                }
            }
        }
        out
    }

    /// Minimality trace `g^{αβ} k^Ā_{αβ}` per frame direction.
    pub fn minimality_trace(&self) -> Vec<SpectralField> {
        (0..self.codim)
            .map(|abar| {
                let mut acc = SpectralField::zeros(self.grid.clone());
                for al in 0..self.dd {
                    for be in 0..self.dd {
                        acc = acc.add(&self.ginv[al][be].mul(&self.k[abar][al][be]));
                    }
                }
                acc
            })
            .collect()
    }

    /// The trace re-solved for `k_{00}`:
    /// `k_00 = −(g^{00})^{−1} (2 g^{0i} k_{0i} + g^{ij} k_{ij})`; returns the
    /// residual against the stored `k_00`.
    pub fn k00_resolved_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for abar in 0..self.codim {
            let mut rhs = SpectralField::zeros(self.grid.clone());
            for i in 1..self.dd {
                rhs = rhs.add(&self.ginv[0][i].mul(&self.k[abar][0][i]).scale(2.0));
                for j in 1..self.dd {
                    rhs = rhs.add(&self.ginv[i][j].mul(&self.k[abar][i][j]));
                }
            }
            let g00 = &self.ginv[0][0];
            let resolved = rhs.zip(g00, |r, g| -r / g);
            // residual of the minimal surface equation in resolved form
            let trace = self.minimality_trace()[abar].clone();
            let direct = self.k[abar][0][0].clone();
            let res = resolved.sub(&direct);
            // the two agree exactly when trace = 0; in general the defect is
            // trace / g^{00}
            let implied = trace.zip(g00, |t, g| t / g);
            worst = worst.max(res.add(&implied).max_abs());
        }
        worst
    }

    /// Max deviation between the metric-route and projection-route
    /// Christoffel symbols.
    pub fn christoffel_projection_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for ga in 0..self.dd {
            for al in 0..self.dd {
                for be in 0..self.dd {
                    worst = worst
                        .max(self.gamma_up[ga][al][be].sub(&self.gamma_proj[ga][al][be]).max_abs());
                }
            }
        }
        worst
    }

    /// Residual of the frame-transport relation
    /// `∂_β e^A_Ā = ω^B̄_{βĀ} e^A_B̄ − g^{γδ} m̄_{ĀB̄} k^B̄_{βγ} ∂_δ Y^A`.
    pub fn frame_transport_residual(&self) -> f64 {
        let na = self.target.ambient_dim;
        let mut worst = 0.0f64;
        for be in 0..self.dd {
            for abar in 0..self.codim {
                for a in 0..na {
                    let mut rhs = SpectralField::zeros(self.grid.clone());
                    for bbar in 0..self.codim {
                        rhs = rhs.add(&self.omega[be][bbar][abar].mul(&self.e[bbar][a]));
                    }
                    for ga in 0..self.dd {
                        for de in 0..self.dd {
                            for bbar in 0..self.codim {
                                let coef = self.ginv[ga][de]
                                    .mul(&self.gram[abar][bbar])
                                    .mul(&self.k[bbar][be][ga]);
                                rhs = rhs.sub(&coef.mul(&self.dy[de][a]));
                            }
                        }
                    }
                    worst = worst.max(self.de[be][abar][a].sub(&rhs).max_abs());
                }
            }
        }
        worst
    }

    /// Reconstruct a random ambient vector from its Π/Π⊥ parts; the
    /// combined basis spans the ambient space pointwise so this is an
    /// identity up to solve roundoff.
    pub fn projection_reconstruction_residual(&self, seed: u64) -> f64 {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let na = self.target.ambient_dim;
        let npts = self.grid.len();
        let dy_vals: Vec<Vec<&[f64]>> = self.dy.iter().map(|row| values(row)).collect();
        let e_vals: Vec<Vec<&[f64]>> = self.e.iter().map(|row| values(row)).collect();
        let nb = self.dd + self.codim;
        let mut worst = 0.0f64;
        let mut basis = vec![vec![0.0; na]; nb];
        for _ in 0..8 {
            let v: Vec<f64> = (0..na).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = rng.random_range(0..npts);
            for al in 0..self.dd {
                for a in 0..na {
                    basis[al][a] = dy_vals[al][a][p];
                }
            }
            for abar in 0..self.codim {
                for a in 0..na {
                    basis[self.dd + abar][a] = e_vals[abar][a][p];
                }
            }
            let mut gm = SmallMat::zeros(nb);
            for i in 0..nb {
                for j in 0..nb {
                    gm.set(i, j, self.target.inner(&basis[i], &basis[j]));
                }
            }
            let rhs: Vec<f64> = (0..nb).map(|i| self.target.inner(&basis[i], &v)).collect();
            let sol = gm.solve(&rhs).expect("combined basis nondegenerate");
            let mut rec = vec![0.0; na];
            for (ci, c) in sol.iter().enumerate() {
                for a in 0..na {
                    rec[a] += c * basis[ci][a];
                }
            }
            for a in 0..na {
                worst = worst.max((rec[a] - v[a]).abs());
            }
        }
        worst
    }
}

/// Five consecutive snapshots, giving 4th-order time derivatives of any
/// slice quantity at the center.
pub struct SnapshotStencil {
    pub snaps: Vec<GeometrySnapshot>,
    pub center: usize,
    pub dt: f64,
}

impl SnapshotStencil {
    pub fn new(snaps: Vec<GeometrySnapshot>, center: usize, dt: f64) -> Result<Self> {
        if snaps.len() < 5 {
            return Err(CoreError::StencilDepth { needed: 5, available: snaps.len() });
        }
        Ok(SnapshotStencil { snaps, center, dt })
    }

    pub fn center(&self) -> &GeometrySnapshot {
        &self.snaps[self.center]
    }

    /// Time derivative at the center of a per-snapshot component.
    pub fn dt_of(
        &self,
        pick: impl Fn(&GeometrySnapshot) -> SpectralField,
        order: usize,
    ) -> SpectralField {
        let series: Vec<SpectralField> = self.snaps.iter().map(&pick).collect();
        fd_time_derivative(&series, self.dt, self.center, order).expect("stencil depth checked")
    }

    /// Spacetime derivative `∂_α` of a per-snapshot component (time by
    /// stencil, space spectral at the center).
    pub fn d_alpha(
        &self,
        pick: impl Fn(&GeometrySnapshot) -> SpectralField,
        alpha: usize,
    ) -> SpectralField {
        if alpha == 0 {
            self.dt_of(pick, 1)
        } else {
            pick(self.center()).derivative(alpha - 1)
        }
    }

    /// Codazzi residual `∇_α k^B̄_{βγ} − ∇_β k^B̄_{αγ}` (max norm over all
    /// index triples and, per component, the residual field).
    pub fn codazzi_residual(&self) -> (Vec<SpectralField>, f64) {
        let snap = self.center();
        let dd = snap.dd;
        let cd = snap.codim;
        let mut fields = Vec::new();
        let mut worst = 0.0f64;
        for bbar in 0..cd {
            for al in 0..dd {
                for be in (al + 1)..dd {
                    for ga in 0..dd {
                        let r = self.nabla_k(bbar, al, be, ga).sub(&self.nabla_k(bbar, be, al, ga));
                        worst = worst.max(r.max_abs());
                        fields.push(r);
                    }
                }
            }
        }
        (fields, worst)
    }

    /// Full covariant derivative of `k` as a section of
    /// `NΣ ⊗ T*Σ ⊗ T*Σ`:
    /// `∇_α k^Ā_{βγ} = ∂_α k^Ā_{βγ} − Γ^λ_{αβ} k^Ā_{λγ} − Γ^λ_{αγ} k^Ā_{βλ} + ω^Ā_{αB̄} k^B̄_{βγ}`.
    pub fn nabla_k(&self, abar: usize, al: usize, be: usize, ga: usize) -> SpectralField {
        let snap = self.center();
        let dd = snap.dd;
        let mut r = self.d_alpha(|s| s.k[abar][be][ga].clone(), al);
        for la in 0..dd {
            r = r
                .sub(&snap.gamma_up[la][al][be].mul(&snap.k[abar][la][ga]))
                .sub(&snap.gamma_up[la][al][ga].mul(&snap.k[abar][be][la]));
        }
        for bbar in 0..snap.codim {
            r = r.add(&snap.omega[al][abar][bbar].mul(&snap.k[bbar][be][ga]));
        }
        r
    }

    /// Normal curvature from the connection route:
    /// `R^⊥_{αβ}{}^Ā{}_{B̄} = ∂_α ω^Ā_{βB̄} − ∂_β ω^Ā_{αB̄} + ω^Ā_{αC̄} ω^C̄_{βB̄} − ω^Ā_{βC̄} ω^C̄_{αB̄}`,
    /// with the frame index raised by the Gram inverse to compare against
    /// the Ricci route. Returns `(R⊥_ω, R⊥_k, max residual)`; in codimension
    /// one both vanish identically and the flag marks the trivial case.
    pub fn normal_curvature_two_ways(
        &self,
    ) -> (Vec<Vec<Vec<Vec<SpectralField>>>>, Vec<Vec<Vec<Vec<SpectralField>>>>, f64, bool) {
        let snap = self.center();
        let dd = snap.dd;
        let cd = snap.codim;
        let trivial = cd < 2;
        if trivial {
            // rank-one normal bundle: both routes vanish identically
            let zero = || {
                vec![vec![
                    (0..dd)
                        .map(|_| {
                            (0..dd)
                                .map(|_| SpectralField::zeros(snap.grid.clone()))
                                .collect::<Vec<_>>()
                        })
                        .collect::<Vec<_>>();
                    cd
                ]; cd]
            };
            return (zero(), zero(), 0.0, true);
        }
        // mixed-index tensor W[abar][bbar][α][β]
        let mut mixed = vec![vec![vec![Vec::new(); dd]; cd]; cd];
        for abar in 0..cd {
            for bbar in 0..cd {
                for al in 0..dd {
                    mixed[abar][bbar][al] = (0..dd)
                        .map(|be| {
                            let mut r = self
                                .d_alpha(|s| s.omega[be][abar][bbar].clone(), al)
                                .sub(&self.d_alpha(|s| s.omega[al][abar][bbar].clone(), be));
                            for cbar in 0..cd {
                                r = r
                                    .add(&snap.omega[al][abar][cbar].mul(&snap.omega[be][cbar][bbar]))
                                    .sub(&snap.omega[be][abar][cbar].mul(&snap.omega[al][cbar][bbar]));
                            }
                            r
                        })
                        .collect();
                }
            }
        }
        // raise the lower frame index: R⊥^ĀB̄ = W^Ā_C̄ · m̄^{C̄B̄}
        let mut from_omega = vec![vec![vec![Vec::new(); dd]; cd]; cd];
        for abar in 0..cd {
            for bbar in 0..cd {
                for al in 0..dd {
                    from_omega[abar][bbar][al] = (0..dd)
                        .map(|be| {
                            let mut r = SpectralField::zeros(snap.grid.clone());
                            for cbar in 0..cd {
                                r = r.add(&mixed[abar][cbar][al][be].mul(&snap.gram_inv[cbar][bbar]));
                            }
                            r
                        })
                        .collect();
                }
            }
        }
        let from_k = snap.normal_curvature_from_k();
        let mut worst = 0.0f64;
        for abar in 0..cd {
            for bbar in 0..cd {
                for al in 0..dd {
                    for be in 0..dd {
                        worst = worst.max(
                            from_omega[abar][bbar][al][be]
                                .sub(&from_k[abar][bbar][al][be])
                                .max_abs(),
                        );
                    }
                }
            }
        }
        (from_omega, from_k, worst, trivial)
    }
}

impl GeometrySnapshot {
    /// Export the snapshot components as a flat binary block with a JSON
    /// sidecar naming them (little-endian f64, header with dim/N/codim and
    /// the slice time).
    pub fn export_block(
        &self,
        path: &std::path::Path,
        metadata: std::collections::BTreeMap<String, String>,
    ) -> Result<()> {
        let mut named: Vec<(String, &SpectralField)> = Vec::new();
        for al in 0..self.dd {
            for be in al..self.dd {
                named.push((format!("g_{al}{be}"), &self.g[al][be]));
                named.push((format!("ginv_{al}{be}"), &self.ginv[al][be]));
            }
        }
        for ga in 0..self.dd {
            for al in 0..self.dd {
                for be in al..self.dd {
                    named.push((format!("gamma_{ga}_{al}{be}"), &self.gamma_up[ga][al][be]));
                }
            }
        }
        for abar in 0..self.codim {
            for al in 0..self.dd {
                for be in al..self.dd {
                    named.push((format!("k_{abar}_{al}{be}"), &self.k[abar][al][be]));
                }
            }
        }
        for al in 0..self.dd {
            for abar in 0..self.codim {
                for bbar in 0..self.codim {
                    named.push((format!("omega_{al}_{abar}{bbar}"), &self.omega[al][abar][bbar]));
                }
            }
        }
        for abar in 0..self.codim {
            for a in 0..self.target.ambient_dim {
                named.push((format!("e_{abar}_{a}"), &self.e[abar][a]));
            }
        }
        crate::io::write_block(
            path,
            self.grid.dim,
            self.grid.points_per_axis,
            self.codim,
            self.time,
            &named,
            metadata,
        )
    }
}
