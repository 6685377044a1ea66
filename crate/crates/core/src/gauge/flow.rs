//! The gauge-fixing flow: solve the coupled parabolic system for the
//! diffeomorphism potential `Φ` (ansatz `Ψ = x + ⟨D⟩^{−1}Φ`) and the frame
//! transformation `U = 𝕀 + 𝕄(t) + |D|(1+|D|)^{−1}V`, driving an arbitrary
//! near-flat immersion into (approximate) balanced gauge.
//!
//! Time stepping is the half-heat exponential integrator (exact `e^{−|ξ|Δt}`
//! factors, two-stage predictor/corrector in the nonlinearity); the matrix
//! path `𝕄(t)` enforcing the zero-average condition on `ω₀` is integrated
//! with classical RK4 on the same grid, its stage states supplied by
//! exponential half-steps. The right-hand sides involve `∂₀Ψ` and `∂₀U`
//! through the gauge sources; those enter through cached rates refreshed by
//! a corrector pass each step (they multiply quadratic source terms, so the
//! lag is far below the resolved order).

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::geometry::{FrameHistory, Immersion, ImmersionHistory, NormalFrame};
use crate::linalg::SmallMat;
use crate::solvers::{solve_elliptic_perturbative, EllipticKind, SliceMetric};
use crate::spectral::{extend_at_times, lhh_project, SpectralField, TorusGrid};

use super::background::{Background, Field};

#[derive(Clone, Debug)]
pub struct FlowConfig {
    pub t_flow: f64,
    pub steps: usize,
    pub elliptic_tol: f64,
    /// corrector passes refreshing the cached `∂₀Φ`, `∂₀U` rates per stage
    pub corrector_passes: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { t_flow: 0.2, steps: 32, elliptic_tol: 1e-11, corrector_passes: 1 }
    }
}

/// Flow unknowns at one time, plus cached rate estimates.
#[derive(Clone)]
pub struct FlowState {
    pub time: f64,
    pub phi: Vec<SpectralField>,
    pub v: Vec<Vec<SpectralField>>,
    pub m_mat: Vec<Vec<f64>>,
    pub dphi: Vec<SpectralField>,
    pub dv: Vec<Vec<SpectralField>>,
    pub dm: Vec<Vec<f64>>,
}

impl FlowState {
    fn zero(grid: &Arc<TorusGrid>, dd: usize, codim: usize) -> FlowState {
        let zf = || SpectralField::zeros(grid.clone());
        FlowState {
            time: 0.0,
            phi: (0..dd).map(|_| zf()).collect(),
            v: (0..codim).map(|_| (0..codim).map(|_| zf()).collect()).collect(),
            m_mat: vec![vec![0.0; codim]; codim],
            dphi: (0..dd).map(|_| zf()).collect(),
            dv: (0..codim).map(|_| (0..codim).map(|_| zf()).collect()).collect(),
            dm: vec![vec![0.0; codim]; codim],
        }
    }

    /// `Ψ^α − x^α = ⟨D⟩^{−1} Φ^α`.
    pub fn psi_disp(&self) -> Vec<SpectralField> {
        self.phi.iter().map(|f| f.japanese(-1.0)).collect()
    }

    /// `U = 𝕀 + 𝕄 + |D|(1+|D|)^{−1} V` as pointwise matrix fields.
    pub fn u_matrix(&self) -> Vec<Vec<SpectralField>> {
        let cd = self.v.len();
        (0..cd)
            .map(|i| {
                (0..cd)
                    .map(|j| {
                        let x = absd_over_one_plus(&self.v[i][j]);
                        let c = self.m_mat[i][j] + if i == j { 1.0 } else { 0.0 };
                        x.map(move |val| val + c)
                    })
                    .collect()
            })
            .collect()
    }
}

/// multiplier `|ξ|/(1+|ξ|)`
fn absd_over_one_plus(f: &SpectralField) -> SpectralField {
    f.multiplier(|flat, g| {
        let r = g.xi_norm(flat);
        Complex64::new(r / (1.0 + r), 0.0)
    })
}

/// multiplier `−(1+|ξ|)/|ξ|²`, zero mode dropped
fn neg_one_plus_over_d2(f: &SpectralField) -> SpectralField {
    f.multiplier(|flat, g| {
        let r = g.xi_norm(flat);
        if r == 0.0 {
            Complex64::default()
        } else {
            Complex64::new(-(1.0 + r) / (r * r), 0.0)
        }
    })
}

/// scalar `Δ_ḡ|D|^{−1}` on a slice metric
fn laplace_absd_inv_sm(metric: &SliceMetric, f: &SpectralField) -> SpectralField {
    let d = metric.d;
    let w = f.abs_d_inv();
    let mut acc = SpectralField::zeros(f.grid().clone());
    for i in 0..d {
        let mut flux = SpectralField::zeros(f.grid().clone());
        for j in 0..d {
            flux = flux.add(&metric.ginv[i][j].mul(&metric.sqrt_det).mul(&w.derivative(j)));
        }
        acc = acc.add(&flux.derivative(i));
    }
    acc.zip(&metric.sqrt_det, |a, s| a / s)
}

/// `𝔇^{(−1)} = |D| Δ_ḡ^{−1} 𝒫_ḡ`.
fn dinv(metric: &SliceMetric, f: &SpectralField, tol: f64) -> Result<SpectralField> {
    let proj = metric.project_mean_free(f);
    let sol = solve_elliptic_perturbative(metric, &proj, EllipticKind::LaplaceBeltrami, tol, 300)?;
    Ok(sol.abs_d())
}

/// `𝕀[f₁, f₂] = 𝔇^{(−1)}[f₁·f₂] − 𝔇^{(−1)}[f₁]·f₂`.
fn commutator_i(
    metric: &SliceMetric,
    f1: &SpectralField,
    f2: &SpectralField,
    tol: f64,
) -> Result<SpectralField> {
    Ok(dinv(metric, &f1.mul(f2), tol)?.sub(&dinv(metric, f1, tol)?.mul(f2)))
}

struct RhsEval {
    /// RHS of `∂₀Φ = −|D|Φ + nphi`, i.e. `nphi = ⟨D⟩𝒩`
    nphi: Vec<SpectralField>,
    /// RHS of `∂₀V = −|D|V + nv`
    nv: Vec<Vec<SpectralField>>,
    mdot: Vec<Vec<f64>>,
    /// transformed sources at this state (kept for the τ=0 capture)
    fnat: Vec<Vec<SpectralField>>,
    fperp: Vec<Vec<SpectralField>>,
    /// smallness monitor `‖ḡ−δ‖_∞`
    gbar_deviation: f64,
}

struct FlowContext<'a> {
    bg: &'a Background,
    grid: Arc<TorusGrid>,
    dd: usize,
    codim: usize,
    tol: f64,
    /// initial-slice sources for the 𝔼-subtraction (empty before capture)
    fnat0: Option<Vec<Vec<SpectralField>>>,
    fperp0: Option<Vec<Vec<SpectralField>>>,
}

fn wrap(grid: &Arc<TorusGrid>, vals: Vec<f64>) -> SpectralField {
    SpectralField::from_values(grid.clone(), vals)
}

impl<'a> FlowContext<'a> {
    /// Evaluate the full right-hand side at state `st`.
    fn eval(&self, st: &FlowState) -> Result<RhsEval> {
        let grid = &self.grid;
        let d = grid.dim;
        let dd = self.dd;
        let cd = self.codim;
        let npts = grid.len();
        let bg = self.bg;

        // ---- diffeomorphism and its derivatives ----
        let psi = st.psi_disp();
        let tprime: Vec<f64> = psi[0].values().iter().map(|&v| st.time + v).collect();
        let u_disp: Vec<Vec<f64>> = (0..d).map(|ax| psi[ax + 1].values().to_vec()).collect();
        // ∂_i Ψ^α
        let dpsi: Vec<Vec<SpectralField>> = (0..d)
            .map(|i| {
                (0..dd)
                    .map(|al| {
                        let der = psi[al].derivative(i);
                        if al == i + 1 {
                            der.map(|v| v + 1.0)
                        } else {
                            der
                        }
                    })
                    .collect()
            })
            .collect();
        // ∂₀ Ψ^α from the cached rate
        let dpsi0: Vec<SpectralField> = (0..dd)
            .map(|al| {
                let der = st.dphi[al].japanese(-1.0);
                if al == 0 {
                    der.map(|v| v + 1.0)
                } else {
                    der
                }
            })
            .collect();
        // ∂_i∂_j Ψ^α
        let ddpsi: Vec<Vec<Vec<SpectralField>>> = (0..d)
            .map(|i| {
                (i..d)
                    .map(|j| (0..dd).map(|al| psi[al].derivative(i).derivative(j)).collect())
                    .collect()
            })
            .collect();

        // ---- background at mapped points ----
        let mut want: Vec<Field> = Vec::new();
        for al in 0..dd {
            for be in 0..dd {
                want.push(Field::G(al, be));
            }
        }
        for la in 0..dd {
            for mu in 0..dd {
                for nu in 0..dd {
                    want.push(Field::Gamma(la, mu, nu));
                }
            }
        }
        for abar in 0..cd {
            for al in 0..dd {
                for be in 0..dd {
                    want.push(Field::K(abar, al, be));
                }
            }
        }
        for al in 0..dd {
            for abar in 0..cd {
                for bbar in 0..cd {
                    want.push(Field::OmegaPrime(al, abar, bbar));
                }
            }
        }
        for abar in 0..cd {
            for bbar in 0..cd {
                want.push(Field::GramPrime(abar, bbar));
            }
        }
        let evals = bg.eval_mapped(&want, &tprime, &u_disp)?;
        let mut cursor = 0usize;
        let mut take = |n: usize| -> Vec<Vec<f64>> {
            let out = evals[cursor..cursor + n].to_vec();
            cursor += n;
            out
        };
        let g_bg = take(dd * dd);
        let gamma_bg = take(dd * dd * dd);
        let k_bg = take(cd * dd * dd);
        let omega_bg = take(dd * cd * cd);
        let gram_bg = take(cd * cd);
        let g_at = |al: usize, be: usize| -> &Vec<f64> { &g_bg[al * dd + be] };
        let gamma_at =
            |la: usize, mu: usize, nu: usize| -> &Vec<f64> { &gamma_bg[(la * dd + mu) * dd + nu] };
        let k_at =
            |abar: usize, al: usize, be: usize| -> &Vec<f64> { &k_bg[(abar * dd + al) * dd + be] };
        let omega_at = |al: usize, abar: usize, bbar: usize| -> &Vec<f64> {
            &omega_bg[(al * cd + abar) * cd + bbar]
        };
        let gram_at = |abar: usize, bbar: usize| -> &Vec<f64> { &gram_bg[abar * cd + bbar] };

        // ---- induced slice metric ----
        let dpsi_v: Vec<Vec<&[f64]>> = dpsi
            .iter()
            .map(|row| row.iter().map(|f| f.values()).collect())
            .collect();
        let dpsi0_v: Vec<&[f64]> = dpsi0.iter().map(|f| f.values()).collect();
        let mut gbar_vals = vec![vec![vec![0.0; npts]; d]; d];
        for i in 0..d {
            for j in 0..d {
                for p in 0..npts {
                    let mut s = 0.0;
                    for ga in 0..dd {
                        for de in 0..dd {
                            s += g_at(ga, de)[p] * dpsi_v[i][ga][p] * dpsi_v[j][de][p];
                        }
                    }
                    gbar_vals[i][j][p] = s;
                }
            }
        }
        let gbar: Vec<Vec<SpectralField>> = gbar_vals
            .into_iter()
            .map(|row| row.into_iter().map(|v| wrap(grid, v)).collect())
            .collect();
        let metric = SliceMetric::from_components(gbar)?;
        let gbar_deviation = metric.deviation();

        // ---- unit normal of the Ψ-slices ----
        let mut nhat_vals = vec![vec![0.0; npts]; dd];
        {
            let mut rows = vec![vec![0.0; dd]; d];
            for p in 0..npts {
                for i in 0..d {
                    for de in 0..dd {
                        let mut s = 0.0;
                        for ga in 0..dd {
                            s += g_at(ga, de)[p] * dpsi_v[i][ga][p];
                        }
                        rows[i][de] = s;
                    }
                }
                // null space of the d×(d+1) matrix by cofactors
                let mut n_raw = vec![0.0; dd];
                for col in 0..dd {
                    let mut minor = SmallMat::zeros(d);
                    for r in 0..d {
                        let mut cc = 0usize;
                        for c in 0..dd {
                            if c == col {
                                continue;
                            }
                            minor.set(r, cc, rows[r][c]);
                            cc += 1;
                        }
                    }
                    let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                    n_raw[col] = sign * minor.det();
                }
                let mut nn = 0.0;
                for ga in 0..dd {
                    for de in 0..dd {
                        nn += g_at(ga, de)[p] * n_raw[ga] * n_raw[de];
                    }
                }
                if nn >= 0.0 {
                    return Err(CoreError::FlowAborted {
                        t: st.time,
                        reason: format!("Ψ-slice not spacelike at point {p}"),
                    });
                }
                let mut scale = 1.0 / (-nn).sqrt();
                if n_raw[0] * scale < 0.0 {
                    scale = -scale;
                }
                for ga in 0..dd {
                    nhat_vals[ga][p] = n_raw[ga] * scale;
                }
            }
        }
        let nhat: Vec<SpectralField> =
            nhat_vals.iter().map(|v| wrap(grid, v.clone())).collect();

        // ---- slice second fundamental form and mean curvature ----
        let ddpsi_v: Vec<Vec<Vec<&[f64]>>> = ddpsi
            .iter()
            .map(|r| r.iter().map(|c| c.iter().map(|f| f.values()).collect()).collect())
            .collect();
        let mut h_vals = vec![vec![vec![0.0; npts]; d]; d];
        for i in 0..d {
            for j in i..d {
                for p in 0..npts {
                    // H^α_ij = ∂_i∂_jΨ^α + Γ^{(0)α}_{μν}(Ψ) ∂_iΨ^μ ∂_jΨ^ν
                    let mut h = 0.0;
                    for al in 0..dd {
                        let mut cap = ddpsi_v[i][j - i][al][p];
                        for mu in 0..dd {
                            for nu in 0..dd {
                                cap += gamma_at(al, mu, nu)[p]
                                    * dpsi_v[i][mu][p]
                                    * dpsi_v[j][nu][p];
                            }
                        }
                        // h_ij = g(H_ij, n̂)
                        for be in 0..dd {
                            h += g_at(al, be)[p] * cap * nhat_vals[be][p];
                        }
                    }
                    h_vals[i][j][p] = h;
                    h_vals[j][i][p] = h;
                }
            }
        }
        let mut trh = SpectralField::zeros(grid.clone());
        for i in 0..d {
            for j in 0..d {
                trh = trh.add(&metric.ginv[i][j].mul(&wrap(grid, h_vals[i][j].clone())));
            }
        }

        // ---- transformed second fundamental form in the new frame ----
        let u_mat = st.u_matrix();
        let u_vals: Vec<Vec<&[f64]>> =
            u_mat.iter().map(|row| row.iter().map(|f| f.values()).collect()).collect();
        let mut uinv_vals = vec![vec![vec![0.0; npts]; cd]; cd];
        for p in 0..npts {
            let mut m = SmallMat::zeros(cd);
            for i in 0..cd {
                for j in 0..cd {
                    m.set(i, j, u_vals[i][j][p]);
                }
            }
            let inv = m.inverse().ok_or(CoreError::FlowAborted {
                t: st.time,
                reason: format!("frame transformation singular at point {p}"),
            })?;
            for i in 0..cd {
                for j in 0..cd {
                    uinv_vals[i][j][p] = inv.at(i, j);
                }
            }
        }

        // pullback k in the primed frame, then rotate by U^{−1}
        let pull_k = |al_is_time: bool, al_sp: usize, be_sp: usize| -> Vec<Vec<f64>> {
            // returns k^Ā(new)_{αβ} values per abar
            let mut out = vec![vec![0.0; npts]; cd];
            for p in 0..npts {
                for abar_new in 0..cd {
                    let mut acc = 0.0;
                    for abp in 0..cd {
                        let mut kk = 0.0;
                        for ga in 0..dd {
                            for de in 0..dd {
                                let da = if al_is_time {
                                    dpsi0_v[ga][p]
                                } else {
                                    dpsi_v[al_sp][ga][p]
                                };
                                kk += k_at(abp, ga, de)[p] * da * dpsi_v[be_sp][de][p];
                            }
                        }
                        acc += uinv_vals[abar_new][abp][p] * kk;
                    }
                    out[abar_new][p] = acc;
                }
            }
            out
        };
        // spatial block and the (0, l) block
        let k_sp: Vec<Vec<Vec<SpectralField>>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        pull_k(false, i, j).into_iter().map(|v| wrap(grid, v)).collect()
                    })
                    .collect()
            })
            .collect(); // k_sp[i][j][abar]
        let k_0l: Vec<Vec<SpectralField>> = (0..d)
            .map(|l| pull_k(true, 0, l).into_iter().map(|v| wrap(grid, v)).collect())
            .collect(); // k_0l[l][abar]

        // new-frame Gram m(e) = Uᵀ (gram′∘Ψ) U
        let mut gram_new = vec![vec![SpectralField::zeros(grid.clone()); cd]; cd];
        for i in 0..cd {
            for j in 0..cd {
                let mut vals = vec![0.0; npts];
                for (p, val) in vals.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for a in 0..cd {
                        for b in 0..cd {
                            s += u_vals[a][i][p] * gram_at(a, b)[p] * u_vals[b][j][p];
                        }
                    }
                    *val = s;
                }
                gram_new[i][j] = wrap(grid, vals);
            }
        }

        // ---- F♮ of the transformed data ----
        let tk0: Vec<SpectralField> = (0..cd)
            .map(|abar| {
                let mut acc = SpectralField::zeros(grid.clone());
                for l in 0..d {
                    acc = acc.add(&k_0l[l][abar].riesz_t_sum(l));
                }
                acc
            })
            .collect();
        let mut fnat = vec![vec![SpectralField::zeros(grid.clone()); d]; d];
        for i in 0..d {
            for j in i..d {
                let mut acc = SpectralField::zeros(grid.clone());
                for abar in 0..cd {
                    for bbar in 0..cd {
                        acc = acc.add(&lhh_project(&gram_new[abar][bbar], &k_sp[i][j][bbar], &tk0[abar]));
                    }
                }
                fnat[i][j] = acc.clone();
                fnat[j][i] = acc;
            }
        }
        // F̃♮ = F♮ − 𝔼[F♮|₀](t)
        let fnat_tilde: Vec<Vec<SpectralField>> = match &self.fnat0 {
            None => fnat.iter().map(|row| row.iter().map(|f| f.scale(0.0)).collect()).collect(),
            Some(f0) => (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| {
                            let ext = extend_at_times(&f0[i][j], &[st.time]);
                            fnat[i][j].sub(&ext[0])
                        })
                        .collect()
                })
                .collect(),
        };

        // ---- Φ right-hand side ----
        // contracted source (1/N) ḡ^{ij} F̃♮_ij with N ≈ 1 + 𝔇^{(−1)}[tr h]
        let n_est = dinv(&metric, &trh, self.tol)?.map(|v| 1.0 + v);
        let mut fsource = SpectralField::zeros(grid.clone());
        for i in 0..d {
            for j in 0..d {
                fsource = fsource.add(&metric.ginv[i][j].mul(&fnat_tilde[i][j]));
            }
        }
        fsource = fsource.zip(&n_est, |f, n| f / n);
        let dinv_fsource = dinv(&metric, &fsource, self.tol)?;

        // ḡ^{ij} Γ̄^k_{ij}
        let contracted_gamma: Vec<SpectralField> = (0..d)
            .map(|kk| {
                let mut acc = SpectralField::zeros(grid.clone());
                for i in 0..d {
                    for j in 0..d {
                        acc = acc.add(&metric.ginv[i][j].mul(&metric.gamma_up[kk][i][j]));
                    }
                }
                acc
            })
            .collect();

        let mut nphi = Vec::with_capacity(dd);
        for al in 0..dd {
            // 𝔇^{(−1)}[tr h · n̂ − ḡΓ̄^k ∂_k Ψ]
            let mut arg = trh.mul(&nhat[al]);
            for kk in 0..d {
                arg = arg.sub(&contracted_gamma[kk].mul(&dpsi[kk][al]));
            }
            let mut rhs_total = dinv(&metric, &arg, self.tol)?;
            rhs_total = rhs_total.sub(&commutator_i(&metric, &trh, &nhat[al], self.tol)?);
            for kk in 0..d {
                rhs_total = rhs_total
                    .add(&commutator_i(&metric, &contracted_gamma[kk], &dpsi[kk][al], self.tol)?);
            }
            rhs_total = rhs_total.add(&dinv_fsource.mul(&nhat[al])).add(&nhat[al]);
            // ∂₀Φ = ⟨D⟩(∂₀Ψ − δ₀); the ETD splitting needs the explicit
            // part of ∂₀Φ = −|D|Φ + nphi, i.e. nphi = ⟨D⟩(∂₀Ψ − δ₀) + |D|Φ
            let shifted = if al == 0 { rhs_total.map(|v| v - 1.0) } else { rhs_total };
            nphi.push(shifted.japanese(1.0).add(&st.phi[al].abs_d()).dealias());
        }

        // ---- V and 𝕄 right-hand sides ----
        // pullback connection 1-forms ω̃′_α (matrix-valued)
        let omega_pull = |al_is_time: bool, al_sp: usize| -> Vec<Vec<SpectralField>> {
            let mut out = vec![vec![SpectralField::zeros(grid.clone()); cd]; cd];
            for a in 0..cd {
                for b in 0..cd {
                    let mut vals = vec![0.0; npts];
                    for (p, val) in vals.iter_mut().enumerate() {
                        let mut s = 0.0;
                        for ga in 0..dd {
                            let da = if al_is_time {
                                dpsi0_v[ga][p]
                            } else {
                                dpsi_v[al_sp][ga][p]
                            };
                            s += omega_at(ga, a, b)[p] * da;
                        }
                        *val = s;
                    }
                    out[a][b] = wrap(grid, vals);
                }
            }
            out
        };
        let omega_t0 = omega_pull(true, 0);
        let omega_sp: Vec<Vec<Vec<SpectralField>>> =
            (0..d).map(|i| omega_pull(false, i)).collect();

        // X = |D|(1+|D|)^{−1}V and derivative matrices
        let x_mat: Vec<Vec<SpectralField>> = (0..cd)
            .map(|i| (0..cd).map(|j| absd_over_one_plus(&st.v[i][j])).collect())
            .collect();
        let du_sp: Vec<Vec<Vec<SpectralField>>> = (0..d)
            .map(|i| {
                (0..cd)
                    .map(|a| (0..cd).map(|b| x_mat[a][b].derivative(i)).collect())
                    .collect()
            })
            .collect();
        let d0u: Vec<Vec<SpectralField>> = (0..cd)
            .map(|a| {
                (0..cd)
                    .map(|b| {
                        absd_over_one_plus(&st.dv[a][b]).map({
                            let c = st.dm[a][b];
                            move |v| v + c
                        })
                    })
                    .collect()
            })
            .collect();

        let uinv: Vec<Vec<SpectralField>> = (0..cd)
            .map(|i| (0..cd).map(|j| wrap(grid, uinv_vals[i][j].clone())).collect())
            .collect();
        let matmul = |a: &Vec<Vec<SpectralField>>, b: &Vec<Vec<SpectralField>>| {
            (0..cd)
                .map(|i| {
                    (0..cd)
                        .map(|j| {
                            let mut acc = SpectralField::zeros(grid.clone());
                            for k in 0..cd {
                                acc = acc.add(&a[i][k].mul(&b[k][j]));
                            }
                            acc
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<Vec<SpectralField>>>()
        };

        // ω_j = U^{−1}(∂_jU + ω̃′_j U), ω₀ = U^{−1}(∂₀U + ω̃′₀ U)
        let omega_new_sp: Vec<Vec<Vec<SpectralField>>> = (0..d)
            .map(|j| {
                let inner = add_mats(&du_sp[j], &matmul(&omega_sp[j], &u_mat));
                matmul(&uinv, &inner)
            })
            .collect();
        let omega_new_0 = matmul(&uinv, &add_mats(&d0u, &matmul(&omega_t0, &u_mat)));

        // F⊥ of the transformed data
        let fperp = {
            // pullback spacetime metric and inverse
            let mut pg = vec![vec![vec![0.0; npts]; dd]; dd];
            for al in 0..dd {
                for be in 0..dd {
                    for p in 0..npts {
                        let mut s = 0.0;
                        for ga in 0..dd {
                            for de in 0..dd {
                                let da =
                                    if al == 0 { dpsi0_v[ga][p] } else { dpsi_v[al - 1][ga][p] };
                                let db =
                                    if be == 0 { dpsi0_v[de][p] } else { dpsi_v[be - 1][de][p] };
                                s += g_at(ga, de)[p] * da * db;
                            }
                        }
                        pg[al][be][p] = s;
                    }
                }
            }
            let mut pginv = vec![vec![vec![0.0; npts]; dd]; dd];
            for p in 0..npts {
                let mut m = SmallMat::zeros(dd);
                for al in 0..dd {
                    for be in 0..dd {
                        m.set(al, be, pg[al][be][p]);
                    }
                }
                let inv = m.inverse().ok_or(CoreError::FlowAborted {
                    t: st.time,
                    reason: format!("pullback metric degenerate at point {p}"),
                })?;
                for al in 0..dd {
                    for be in 0..dd {
                        pginv[al][be][p] = inv.at(al, be);
                    }
                }
            }
            let pginv_f: Vec<Vec<SpectralField>> = pginv
                .into_iter()
                .map(|row| row.into_iter().map(|v| wrap(grid, v)).collect())
                .collect();
            // full transformed k blocks k^Ā_{αβ}
            let mut k_full: Vec<Vec<Vec<SpectralField>>> =
                vec![vec![Vec::new(); dd]; dd];
            for al in 0..dd {
                for be in 0..dd {
                    let block = if al == 0 && be == 0 {
                        pull_k(true, 0, 0) // note: (0,0) needs ∂₀Ψ twice
                    } else if al == 0 {
                        pull_k(true, 0, be - 1)
                    } else if be == 0 {
                        pull_k(true, 0, al - 1)
                    } else {
                        pull_k(false, al - 1, be - 1)
                    };
                    k_full[al][be] = block.into_iter().map(|v| wrap(grid, v)).collect();
                }
            }
            // (0,0) entry above reused the (0,l)-path with one ∂₀Ψ; rebuild it
            // with both slots temporal
            {
                let mut out = vec![vec![0.0; npts]; cd];
                for p in 0..npts {
                    for abar_new in 0..cd {
                        let mut acc = 0.0;
                        for abp in 0..cd {
                            let mut kk = 0.0;
                            for ga in 0..dd {
                                for de in 0..dd {
                                    kk += k_at(abp, ga, de)[p] * dpsi0_v[ga][p] * dpsi0_v[de][p];
                                }
                            }
                            acc += uinv_vals[abar_new][abp][p] * kk;
                        }
                        out[abar_new][p] = acc;
                    }
                }
                k_full[0][0] = out.into_iter().map(|v| wrap(grid, v)).collect();
            }
            // 𝒯^{(b)} k^Ā_{bδ}
            let mut tkd = vec![vec![SpectralField::zeros(grid.clone()); dd]; cd];
            for abar in 0..cd {
                for de in 0..dd {
                    let mut acc = SpectralField::zeros(grid.clone());
                    for b in 0..d {
                        acc = acc.add(&k_full[b + 1][de][abar].riesz_t_sum(b));
                    }
                    tkd[abar][de] = acc;
                }
            }
            let mut out = vec![vec![SpectralField::zeros(grid.clone()); cd]; cd];
            for abar in 0..cd {
                for bbar in 0..cd {
                    let mut total = SpectralField::zeros(grid.clone());
                    for i in 0..d {
                        for j in 0..d {
                            let mut inner = SpectralField::zeros(grid.clone());
                            for ga in 0..dd {
                                for de in 0..dd {
                                    inner = inner.add(&lhh_project(
                                        &pginv_f[ga][de],
                                        &k_full[j + 1][ga][bbar],
                                        &tkd[abar][de],
                                    ));
                                }
                            }
                            total = total.add(&metric.ginv[i][j].mul(&inner).derivative(i));
                        }
                    }
                    out[abar][bbar] = total.scale(-1.0);
                }
            }
            out
        };
        let fperp_tilde: Vec<Vec<SpectralField>> = match &self.fperp0 {
            None => fperp.iter().map(|row| row.iter().map(|f| f.scale(0.0)).collect()).collect(),
            Some(f0) => (0..cd)
                .map(|i| {
                    (0..cd)
                        .map(|j| {
                            let ext = extend_at_times(&f0[i][j], &[st.time]);
                            fperp[i][j].sub(&ext[0])
                        })
                        .collect()
                })
                .collect(),
        };

        // (m(e) F̃⊥)^Ā_B̄ − ⨍_ḡ(…)
        let mut mf = vec![vec![SpectralField::zeros(grid.clone()); cd]; cd];
        for abar in 0..cd {
            for bbar in 0..cd {
                let mut acc = SpectralField::zeros(grid.clone());
                for cbar in 0..cd {
                    acc = acc.add(&gram_new[bbar][cbar].mul(&fperp_tilde[abar][cbar]));
                }
                let mean = acc.mul(&metric.sqrt_det).mean() / metric.sqrt_det.mean();
                mf[abar][bbar] = acc.map(move |v| v - mean);
            }
        }

        // 𝒢_U = ḡ^{ij} ∂_iU ω_j + U[−Δ_ḡ|D|^{−1}𝒫ω₀ + mf] − δ_ḡω̃′ U − ḡ^{ij} ω̃′_j ∂_iU
        let mut gu = vec![vec![SpectralField::zeros(grid.clone()); cd]; cd];
        {
            // δ_ḡ ω̃′ (covariant divergence of the matrix 1-form)
            let mut div_op = vec![vec![SpectralField::zeros(grid.clone()); cd]; cd];
            for a in 0..cd {
                for b in 0..cd {
                    let form: Vec<SpectralField> =
                        (0..d).map(|i| omega_sp[i][a][b].clone()).collect();
                    let mut acc = SpectralField::zeros(grid.clone());
                    for i in 0..d {
                        for j in 0..d {
                            let mut nab = form[j].derivative(i);
                            for kk in 0..d {
                                nab = nab.sub(&metric.gamma_up[kk][i][j].mul(&form[kk]));
                            }
                            acc = acc.add(&metric.ginv[i][j].mul(&nab));
                        }
                    }
                    div_op[a][b] = acc;
                }
            }
            // −Δ_ḡ|D|^{−1} 𝒫_T³ ω₀ + mf, then U·(...)
            let mut bracket = vec![vec![SpectralField::zeros(grid.clone()); cd]; cd];
            for a in 0..cd {
                for b in 0..cd {
                    bracket[a][b] = laplace_absd_inv_sm(&metric, &omega_new_0[a][b].mean_free())
                        .scale(-1.0)
                        .add(&mf[a][b]);
                }
            }
            let term2 = matmul(&u_mat, &bracket);
            let term3 = matmul(&div_op, &u_mat);
            for a in 0..cd {
                for b in 0..cd {
                    let mut acc = term2[a][b].sub(&term3[a][b]);
                    for i in 0..d {
                        for j in 0..d {
                            for kmid in 0..cd {
                                acc = acc.add(
                                    &metric.ginv[i][j]
                                        .mul(&du_sp[i][a][kmid])
                                        .mul(&omega_new_sp[j][kmid][b]),
                                );
                                acc = acc.sub(
                                    &metric.ginv[i][j]
                                        .mul(&omega_sp[j][a][kmid])
                                        .mul(&du_sp[i][kmid][b]),
                                );
                            }
                        }
                    }
                    gu[a][b] = acc;
                }
            }
        }

        // nv = −(1+|D|)|D|^{−2} 𝒫 { B − |D| 𝒫 ∂₀X_lag },
        // B = 𝒢_U + (Δ_flat − Δ_ḡ^{LB}) X
        let mut nv = vec![vec![SpectralField::zeros(grid.clone()); cd]; cd];
        for a in 0..cd {
            for b in 0..cd {
                let x = &x_mat[a][b];
                let flat_lap = x.multiplier(|flat, g| {
                    let r = g.xi_norm(flat);
                    Complex64::new(-r * r, 0.0)
                });
                // scalar Laplace–Beltrami of x
                let mut lb = SpectralField::zeros(grid.clone());
                for i in 0..d {
                    let mut flux = SpectralField::zeros(grid.clone());
                    for j in 0..d {
                        flux = flux.add(&metric.ginv[i][j].mul(&metric.sqrt_det).mul(&x.derivative(j)));
                    }
                    lb = lb.add(&flux.derivative(i));
                }
                lb = lb.zip(&metric.sqrt_det, |v, s| v / s);
                let bfield = gu[a][b].add(&flat_lap.sub(&lb));
                let d0x_lag = absd_over_one_plus(&st.dv[a][b]);
                let inner = bfield.sub(&d0x_lag.mean_free().abs_d()).mean_free();
                nv[a][b] = neg_one_plus_over_d2(&inner).dealias();
            }
        }

        // 𝕄̇ from the zero-average condition:
        // 𝕄̇ = −(⨍U^{−1})^{−1} ⨍[ U^{−1}(|D|(1+|D|)^{−1} ∂₀V_new) + U^{−1} ω̃′₀ U ]
        let mdot = {
            let d0v_new: Vec<Vec<SpectralField>> = (0..cd)
                .map(|a| {
                    (0..cd)
                        .map(|b| nv[a][b].sub(&st.v[a][b].abs_d()))
                        .collect()
                })
                .collect();
            let inner1: Vec<Vec<SpectralField>> = (0..cd)
                .map(|a| (0..cd).map(|b| absd_over_one_plus(&d0v_new[a][b])).collect())
                .collect();
            let t1 = matmul(&uinv, &inner1);
            let t2 = matmul(&uinv, &matmul(&omega_t0, &u_mat));
            let mut mean_mat = SmallMat::zeros(cd);
            for a in 0..cd {
                for b in 0..cd {
                    mean_mat.set(a, b, t1[a][b].mean() + t2[a][b].mean());
                }
            }
            let mut mean_uinv = SmallMat::zeros(cd);
            for a in 0..cd {
                for b in 0..cd {
                    mean_uinv.set(a, b, uinv[a][b].mean());
                }
            }
            let lead = mean_uinv.inverse().ok_or(CoreError::FlowAborted {
                t: st.time,
                reason: "mean frame transformation singular".into(),
            })?;
            let mut out = vec![vec![0.0; cd]; cd];
            for a in 0..cd {
                for b in 0..cd {
                    let mut s = 0.0;
                    for k in 0..cd {
                        s -= lead.at(a, k) * mean_mat.at(k, b);
                    }
                    out[a][b] = s;
                }
            }
            out
        };

        Ok(RhsEval { nphi, nv, mdot, fnat, fperp, gbar_deviation })
    }
}

fn add_mats(a: &[Vec<SpectralField>], b: &[Vec<SpectralField>]) -> Vec<Vec<SpectralField>> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.add(y)).collect())
        .collect()
}

/// `e^{−|D|h} f + h·I_w(|ξ|h)·ĝ` combined per mode: the exponential Euler
/// update with weight `I₀`, and the two-stage correction with `I₁`.
fn etd_combine(f: &SpectralField, h: f64, g0: &SpectralField, g1: Option<&SpectralField>) -> SpectralField {
    let grid = f.grid().clone();
    let fc = f.coeffs();
    let g0c = g0.coeffs();
    let g1c = g1.map(|g| g.coeffs());
    let out: Vec<Complex64> = (0..grid.len())
        .map(|p| {
            let r = grid.xi_norm(p);
            let z = r * h;
            let decay = (-z).exp();
            let i0 = hh_weight(0, z);
            let mut val = fc[p] * decay + g0c[p] * (h * i0);
            if let Some(g1c) = &g1c {
                let i1 = hh_weight(1, z);
                val += (g1c[p] - g0c[p]) * (h * i1);
            }
            val
        })
        .collect();
    SpectralField::from_coeffs(grid, out)
}

/// `I_m(z) = ∫₀¹ e^{−z(1−θ)} θ^m dθ` (same weights as the half-heat solver).
fn hh_weight(m: usize, z: f64) -> f64 {
    if z <= 2.0 {
        let mut mfact = 1.0;
        for q in 1..=m {
            mfact *= q as f64;
        }
        let mut denom = mfact * (m as f64 + 1.0);
        let mut term = mfact / denom;
        let mut sum = term;
        let mut n = 1usize;
        loop {
            denom *= (m + n + 1) as f64;
            term = mfact * (-z).powi(n as i32) / denom;
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1.0) || n > 60 {
                break;
            }
            n += 1;
        }
        sum
    } else {
        let mut i = (1.0 - (-z).exp()) / z;
        for q in 1..=m {
            i = (1.0 - q as f64 * i) / z;
        }
        i
    }
}

/// Output of the flow: the state trajectory and the captured initial-slice
/// sources.
pub struct GaugeFlowOutput {
    pub states: Vec<FlowState>,
    pub fnat0: Vec<Vec<SpectralField>>,
    pub fperp0: Vec<Vec<SpectralField>>,
    /// per-step `‖ḡ−δ‖_∞` monitor
    pub deviation_trace: Vec<f64>,
}

/// Run the gauge-fixing flow over a stored background immersion.
///
/// Initial conditions `Φ = 0`, `V = 0`, `𝕄 = 0`, so `Ψ|₀ = Id` and
/// `U|₀ = 𝕀` exactly. Aborts with the last valid state on elliptic
/// smallness violations or loss of spacelike slices.
pub fn run_gauge_flow(bg: &Background, cfg: &FlowConfig) -> Result<GaugeFlowOutput> {
    let state = FlowState::zero(&bg.grid, bg.dd, bg.codim);
    resume_gauge_flow(bg, cfg, state, cfg.steps)
}

fn refresh_rates(state: &mut FlowState, eval: &RhsEval) {
    let dd = state.phi.len();
    let cd = state.v.len();
    for al in 0..dd {
        state.dphi[al] = eval.nphi[al].sub(&state.phi[al].abs_d());
    }
    for a in 0..cd {
        for b in 0..cd {
            state.dv[a][b] = eval.nv[a][b].sub(&state.v[a][b].abs_d());
            state.dm[a][b] = eval.mdot[a][b];
        }
    }
}

/// Exponential step of the parabolic unknowns (two-stage when `eval_end`
/// is provided); `𝕄` advances with a plain Euler predictor here and is
/// overwritten by the RK4 combination in the caller.
fn advance(state: &FlowState, h: f64, eval_start: &RhsEval, eval_end: Option<&RhsEval>) -> FlowState {
    let dd = state.phi.len();
    let cd = state.v.len();
    let mut out = state.clone();
    for al in 0..dd {
        out.phi[al] = etd_combine(
            &state.phi[al],
            h,
            &eval_start.nphi[al],
            eval_end.map(|e| &e.nphi[al]),
        );
    }
    for a in 0..cd {
        for b in 0..cd {
            out.v[a][b] = etd_combine(
                &state.v[a][b],
                h,
                &eval_start.nv[a][b],
                eval_end.map(|e| &e.nv[a][b]),
            );
            out.m_mat[a][b] = state.m_mat[a][b] + h * eval_start.mdot[a][b];
        }
    }
    out
}

/// Rebuild the transformed immersion and frame histories `(Y∘Ψ, U·e′∘Ψ)`
/// from the flow trajectory, on the flow's time lattice, for residual
/// evaluation by the standard pipeline.
pub fn transformed_history(
    bg: &Background,
    out: &GaugeFlowOutput,
    every: usize,
) -> Result<(ImmersionHistory, FrameHistory)> {
    let grid = bg.grid.clone();
    let d = grid.dim;
    let dd = bg.dd;
    let cd = bg.codim;
    let na = bg.ambient;
    let npts = grid.len();

    let picked: Vec<(usize, &FlowState)> = out
        .states
        .iter()
        .enumerate()
        .filter(|(i, _)| i % every == 0)
        .map(|(i, s)| (i, s))
        .collect();
    let dt = if picked.len() >= 2 { picked[1].1.time - picked[0].1.time } else { 1.0 };
    let hgrid = TorusGrid::new(d, grid.points_per_axis, (dt * (picked.len().max(2) - 1) as f64).max(dt), picked.len().max(2) - 1);
    let mut hist = ImmersionHistory::new(hgrid, d, cd);
    let mut frames = Vec::with_capacity(picked.len());

    // background fields needed: disp, the full first derivatives, e′
    let mut want: Vec<Field> = Vec::new();
    for a in 0..na {
        want.push(Field::Disp(a));
    }
    for a in 0..na {
        want.push(Field::Dy0(a));
    }
    for i in 0..d {
        for a in 0..na {
            want.push(Field::DySpatial(i, a));
        }
    }
    for abar in 0..cd {
        for a in 0..na {
            want.push(Field::EPrime(abar, a));
        }
    }

    for (_, st) in &picked {
        let psi = st.psi_disp();
        let tprime: Vec<f64> = psi[0].values().iter().map(|&v| st.time + v).collect();
        let u_disp: Vec<Vec<f64>> = (0..d).map(|ax| psi[ax + 1].values().to_vec()).collect();
        let evals = bg.eval_mapped(&want, &tprime, &u_disp)?;
        let disp_bg = &evals[0..na];
        let dy0_bg = &evals[na..2 * na];
        let dysp_bg = &evals[2 * na..(2 + d) * na];
        let e_bg = &evals[(2 + d) * na..];

        // Y∘Ψ displacement: (Y₀ + u)(Ψ) − Y₀(x) = affine(Ψ) − affine(x) + u∘Ψ
        //   time comp: Ψ⁰ − t = psi_disp[0]; spatial: Ψ^i − x^i = psi_disp[i]
        let mut disp = Vec::with_capacity(na);
        for a in 0..na {
            let affine = if a == 0 {
                psi[0].clone()
            } else if a <= d {
                psi[a].clone()
            } else {
                SpectralField::zeros(grid.clone())
            };
            disp.push(affine.add(&wrap(&grid, disp_bg[a].clone())));
        }
        // ∂₀(Y∘Ψ) = (∂_γY ∘ Ψ) ∂₀Ψ^γ
        let dpsi0: Vec<SpectralField> = (0..dd)
            .map(|al| {
                let der = st.dphi[al].japanese(-1.0);
                if al == 0 {
                    der.map(|v| v + 1.0)
                } else {
                    der
                }
            })
            .collect();
        // ∂₀(Y∘Ψ) = (∂_γY ∘ Ψ) ∂₀Ψ^γ with the interpolated first
        // derivatives of the background
        let mut dy0_new = Vec::with_capacity(na);
        for a in 0..na {
            let mut acc = wrap(&grid, dy0_bg[a].clone()).mul(&dpsi0[0]);
            for i in 0..d {
                acc = acc.add(&wrap(&grid, dysp_bg[i * na + a].clone()).mul(&dpsi0[i + 1]));
            }
            dy0_new.push(acc);
        }

        let u_mat = st.u_matrix();
        let mut e = Vec::with_capacity(cd);
        for abar in 0..cd {
            let mut comps = Vec::with_capacity(na);
            for a in 0..na {
                let mut acc = SpectralField::zeros(grid.clone());
                for abp in 0..cd {
                    acc = acc.add(&u_mat[abp][abar].mul(&wrap(&grid, e_bg[abp * na + a].clone())));
                }
                comps.push(acc);
            }
            e.push(comps);
        }
        frames.push(NormalFrame { e });
        hist.push_slice(st.time, Immersion { disp, dy0: dy0_new });
        let _ = npts;
    }
    Ok((hist, FrameHistory { slices: frames }))
}

/// Write a flow state as a checkpoint block (same binary + sidecar format
/// as snapshots); `read_checkpoint` restores it for resume.
pub fn write_checkpoint(
    path: &std::path::Path,
    bg_codim: usize,
    state: &FlowState,
    metadata: std::collections::BTreeMap<String, String>,
) -> Result<()> {
    let grid = state.phi[0].grid().clone();
    let mut named: Vec<(String, &SpectralField)> = Vec::new();
    for (al, f) in state.phi.iter().enumerate() {
        named.push((format!("phi_{al}"), f));
    }
    for (a, row) in state.v.iter().enumerate() {
        for (b, f) in row.iter().enumerate() {
            named.push((format!("v_{a}_{b}"), f));
        }
    }
    for (al, f) in state.dphi.iter().enumerate() {
        named.push((format!("dphi_{al}"), f));
    }
    for (a, row) in state.dv.iter().enumerate() {
        for (b, f) in row.iter().enumerate() {
            named.push((format!("dv_{a}_{b}"), f));
        }
    }
    let mut meta = metadata;
    let cd = state.v.len();
    for a in 0..cd {
        for b in 0..cd {
            meta.insert(format!("m_{a}_{b}"), format!("{:.17e}", state.m_mat[a][b]));
            meta.insert(format!("dm_{a}_{b}"), format!("{:.17e}", state.dm[a][b]));
        }
    }
    crate::io::write_block(path, grid.dim, grid.points_per_axis, bg_codim, state.time, &named, meta)
}

/// Restore a flow state from a checkpoint block.
pub fn read_checkpoint(path: &std::path::Path) -> Result<FlowState> {
    let (header, fields) = crate::io::read_block(path)?;
    let lookup = |name: &str| -> Result<SpectralField> {
        fields
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f.clone())
            .ok_or_else(|| CoreError::Other(format!("checkpoint missing component {name}")))
    };
    let dd = header.dim + 1;
    let cd = header.codim;
    let phi: Vec<SpectralField> =
        (0..dd).map(|al| lookup(&format!("phi_{al}"))).collect::<Result<_>>()?;
    let dphi: Vec<SpectralField> =
        (0..dd).map(|al| lookup(&format!("dphi_{al}"))).collect::<Result<_>>()?;
    let v: Vec<Vec<SpectralField>> = (0..cd)
        .map(|a| (0..cd).map(|b| lookup(&format!("v_{a}_{b}"))).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let dv: Vec<Vec<SpectralField>> = (0..cd)
        .map(|a| (0..cd).map(|b| lookup(&format!("dv_{a}_{b}"))).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let mut m_mat = vec![vec![0.0; cd]; cd];
    let mut dm = vec![vec![0.0; cd]; cd];
    for a in 0..cd {
        for b in 0..cd {
            m_mat[a][b] = header
                .metadata
                .get(&format!("m_{a}_{b}"))
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CoreError::Other("checkpoint missing M entries".into()))?;
            dm[a][b] = header
                .metadata
                .get(&format!("dm_{a}_{b}"))
                .and_then(|s| s.parse().ok())
                .unwrap_or(0.0);
        }
    }
    Ok(FlowState { time: header.slice_time, phi, v, m_mat, dphi, dv, dm })
}

/// Continue a flow from a restored state for `extra_steps` more steps of
/// size `t_flow/steps` relative to `cfg`; used by checkpoint resume.
pub fn resume_gauge_flow(
    bg: &Background,
    cfg: &FlowConfig,
    start: FlowState,
    extra_steps: usize,
) -> Result<GaugeFlowOutput> {
    let grid = bg.grid.clone();
    let dd = bg.dd;
    let cd = bg.codim;
    let h = cfg.t_flow / cfg.steps as f64;
    let mut ctx = FlowContext {
        bg,
        grid: grid.clone(),
        dd,
        codim: cd,
        tol: cfg.elliptic_tol,
        fnat0: None,
        fperp0: None,
    };
    // the 𝔼-subtraction always references the initial slice of the flow
    let zero_state = FlowState::zero(&grid, dd, cd);
    let init_eval = ctx.eval(&zero_state)?;
    ctx.fnat0 = Some(init_eval.fnat.clone());
    ctx.fperp0 = Some(init_eval.fperp.clone());

    let mut state = start;
    let mut states = vec![state.clone()];
    let mut deviation_trace = Vec::new();
    for _ in 0..extra_steps {
        let mut eval1 = ctx.eval(&state)?;
        for _ in 0..cfg.corrector_passes {
            let mut probe = state.clone();
            refresh_rates(&mut probe, &eval1);
            eval1 = ctx.eval(&probe)?;
            refresh_rates(&mut state, &eval1);
        }
        let mut half = advance(&state, 0.5 * h, &eval1, None);
        half.time = state.time + 0.5 * h;
        refresh_rates(&mut half, &eval1);
        let eval2 = ctx.eval(&half)?;
        let mut half2 = advance(&state, 0.5 * h, &eval2, None);
        half2.time = state.time + 0.5 * h;
        refresh_rates(&mut half2, &eval2);
        let eval3 = ctx.eval(&half2)?;
        let mut full = advance(&state, h, &eval3, None);
        full.time = state.time + h;
        refresh_rates(&mut full, &eval3);
        let eval4 = ctx.eval(&full)?;
        let mut next = advance(&state, h, &eval1, Some(&eval4));
        for a in 0..cd {
            for b in 0..cd {
                next.m_mat[a][b] = state.m_mat[a][b]
                    + h / 6.0
                        * (eval1.mdot[a][b]
                            + 2.0 * eval2.mdot[a][b]
                            + 2.0 * eval3.mdot[a][b]
                            + eval4.mdot[a][b]);
            }
        }
        next.time = state.time + h;
        refresh_rates(&mut next, &eval4);
        deviation_trace.push(eval4.gbar_deviation);
        state = next;
        states.push(state.clone());
    }
    Ok(GaugeFlowOutput {
        states,
        fnat0: ctx.fnat0.unwrap(),
        fperp0: ctx.fperp0.unwrap(),
        deviation_trace,
    })
}
