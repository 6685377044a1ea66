//! The exact (non-schematic) parabolic-elliptic equations derived from the
//! balanced gauge condition, evaluated term by term as residuals.
//!
//! Unconditional identity versions (gauge combinations substituted by their
//! defining expressions) are exposed alongside: they hold for arbitrary
//! immersion foliations and pin down every sign against spectral
//! convergence tests, independently of gauge quality.

use crate::error::Result;
use crate::geometry::stencil::fd_time_derivative;
use crate::geometry::{Foliation31, GeometrySnapshot};
use crate::solvers::{solve_elliptic_perturbative, solve_vector_laplacian, EllipticKind};
use crate::spectral::SpectralField;

use super::balanced::{fol_metric, laplace_absd_inv_scalar, laplace_absd_inv_vector, weighted_mean};
use super::GaugeHistory;

/// Max-norm residuals of the five derived equations at one slice.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DerivedEquationResiduals {
    pub lapse: f64,
    pub shift: f64,
    pub gbar: f64,
    pub h: f64,
    pub omega_i: f64,
}

impl DerivedEquationResiduals {
    pub fn total(&self) -> f64 {
        self.lapse + self.shift + self.gbar + self.h + self.omega_i
    }
}

/// `∇̄_m C_{abc}` for a (0,3) slice tensor.
fn nabla3(
    fol: &Foliation31,
    c: &dyn Fn(usize, usize, usize) -> SpectralField,
    m: usize,
    a: usize,
    b: usize,
    cc: usize,
) -> SpectralField {
    let d = fol.d;
    let mut r = c(a, b, cc).derivative(m);
    for e in 0..d {
        r = r
            .sub(&fol.gammabar_up[e][m][a].mul(&c(e, b, cc)))
            .sub(&fol.gammabar_up[e][m][b].mul(&c(a, e, cc)))
            .sub(&fol.gammabar_up[e][m][cc].mul(&c(a, b, e)));
    }
    r
}

/// Unconditional elliptic identity for the slice second fundamental form:
/// `Δ_ḡ h_ij = ∇̄²_ij tr_ḡ h + ḡ^{kl} ∇̄_k C_{lij} + ḡ^{kl} ∇̄_i C_{ljk}
///  + ḡ^{kl} R̄_{kilm} h^m_j − R̄_{kilj} h^{kl}`,
/// `C_{abc} = R_{a b α c} n̂^α`. Holds for any immersion foliation.
pub fn h_elliptic_identity_residual(snap: &GeometrySnapshot, fol: &Foliation31) -> f64 {
    let d = fol.d;
    let riemann = snap.riemann_from_gamma();
    let c3 = |a: usize, b: usize, c: usize| -> SpectralField {
        let mut acc = SpectralField::zeros(fol.grid.clone());
        for al in 0..=d {
            acc = acc.add(&riemann[a + 1][b + 1][al][c + 1].mul(&fol.nhat[al]));
        }
        acc
    };
    let trace = fol.mean_curvature();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            // Δ_ḡ h_ij (tensorial)
            let mut lhs = SpectralField::zeros(fol.grid.clone());
            // ∇̄_l h_ij, then ∇̄_k of it
            let grad: Vec<Vec<Vec<SpectralField>>> = (0..d)
                .map(|l| {
                    (0..d)
                        .map(|a| (0..d).map(|b| fol.nabla_bar_sym2(&fol.h, l, a, b)).collect())
                        .collect()
                })
                .collect();
            for kk in 0..d {
                for l in 0..d {
                    let mut term = grad[l][i][j].derivative(kk);
                    for e in 0..d {
                        term = term
                            .sub(&fol.gammabar_up[e][kk][l].mul(&grad[e][i][j]))
                            .sub(&fol.gammabar_up[e][kk][i].mul(&grad[l][e][j]))
                            .sub(&fol.gammabar_up[e][kk][j].mul(&grad[l][i][e]));
                    }
                    lhs = lhs.add(&fol.gbar_inv[kk][l].mul(&term));
                }
            }
            // ∇̄²_ij tr h
            let mut hess = trace.derivative(i).derivative(j);
            for e in 0..d {
                hess = hess.sub(&fol.gammabar_up[e][i][j].mul(&trace.derivative(e)));
            }
            let mut rhs = hess;
            for kk in 0..d {
                for l in 0..d {
                    rhs = rhs
                        .add(&fol.gbar_inv[kk][l].mul(&nabla3(fol, &c3, kk, l, i, j)))
                        .add(&fol.gbar_inv[kk][l].mul(&nabla3(fol, &c3, i, l, j, kk)));
                }
            }
            for kk in 0..d {
                for l in 0..d {
                    for m in 0..d {
                        for n in 0..d {
                            // + ḡ^{kl} R̄_{kilm} h^m_j
                            rhs = rhs.add(
                                &fol.gbar_inv[kk][l]
                                    .mul(&fol.rbar[kk][i][l][m])
                                    .mul(&fol.gbar_inv[m][n])
                                    .mul(&fol.h[n][j]),
                            );
                            // − R̄_{kilj} h^{kl}
                            rhs = rhs.sub(
                                &fol.rbar[kk][i][l][j]
                                    .mul(&fol.gbar_inv[kk][m])
                                    .mul(&fol.gbar_inv[l][n])
                                    .mul(&fol.h[m][n]),
                            );
                        }
                    }
                }
            }
            worst = worst.max(lhs.sub(&rhs).max_abs());
        }
    }
    worst
}

/// Unconditional elliptic identity for `ḡ` with the harmonic combination
/// substituted by its definition `W^k := −ḡ^{ab} Γ̄^k_{ab}`:
/// `ḡ^{kl} ∂_k∂_l ḡ_ij = −∂_i(ḡ_{jk} W^k) − ∂_j(ḡ_{ik} W^k) + 2 Γ̄^l_{ij} ḡ_{lk} W^k
///  − 2 ḡ^{kl} R̄_{ikjl} + 2 ḡ^{kl} ḡ^{cd} ( Γ̄_{cki} Γ̄_{dlj} + Γ̄_{cki} Γ̄_{jld} + Γ̄_{ckj} Γ̄_{ild} )`.
/// Pure slice geometry: testable on arbitrary Riemannian metrics.
pub fn gbar_elliptic_identity_residual(fol: &Foliation31, w: Option<&[SpectralField]>) -> f64 {
    let d = fol.d;
    let w_default: Vec<SpectralField>;
    let w = match w {
        Some(v) => v,
        None => {
            w_default = (0..d)
                .map(|kk| {
                    let mut acc = SpectralField::zeros(fol.grid.clone());
                    for a in 0..d {
                        for b in 0..d {
                            acc = acc.add(&fol.gbar_inv[a][b].mul(&fol.gammabar_up[kk][a][b]));
                        }
                    }
                    acc.scale(-1.0)
                })
                .collect();
            &w_default
        }
    };
    // lowered Christoffels Γ̄_{kij}
    let gl = |k: usize, i: usize, j: usize| -> SpectralField {
        fol.gammabar_low[k][i][j].clone()
    };
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let mut lhs = SpectralField::zeros(fol.grid.clone());
            for kk in 0..d {
                for l in 0..d {
                    lhs = lhs
                        .add(&fol.gbar_inv[kk][l].mul(&fol.gbar[i][j].derivative(kk).derivative(l)));
                }
            }
            let mut rhs = SpectralField::zeros(fol.grid.clone());
            for kk in 0..d {
                rhs = rhs
                    .sub(&fol.gbar[j][kk].mul(&w[kk]).derivative(i))
                    .sub(&fol.gbar[i][kk].mul(&w[kk]).derivative(j));
                for l in 0..d {
                    rhs = rhs.add(&fol.gammabar_up[l][i][j].mul(&fol.gbar[l][kk]).mul(&w[kk]).scale(2.0));
                }
            }
            for kk in 0..d {
                for l in 0..d {
                    rhs = rhs.sub(&fol.gbar_inv[kk][l].mul(&fol.rbar[i][kk][j][l]).scale(2.0));
                }
            }
            for kk in 0..d {
                for l in 0..d {
                    for cc in 0..d {
                        for dd in 0..d {
                            let weight = fol.gbar_inv[kk][l].mul(&fol.gbar_inv[cc][dd]).scale(2.0);
                            let combo = gl(cc, kk, i)
                                .mul(&gl(dd, l, j))
                                .add(&gl(cc, kk, i).mul(&gl(j, l, dd)))
                                .add(&gl(cc, kk, j).mul(&gl(i, l, dd)));
                            rhs = rhs.add(&weight.mul(&combo));
                        }
                    }
                }
            }
            worst = worst.max(lhs.sub(&rhs).max_abs());
        }
    }
    worst
}

/// Matrix-valued spatial 1-form helpers for the ω identities.
fn omega_matrix(snap: &GeometrySnapshot, i: usize) -> Vec<Vec<SpectralField>> {
    // (ω_i)^Ā_{B̄} = snap.omega[i+1][abar][bbar] (spatial index i)
    snap.omega[i + 1].clone()
}

fn mat_mul(a: &[Vec<SpectralField>], b: &[Vec<SpectralField>]) -> Vec<Vec<SpectralField>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = SpectralField::zeros(a[0][0].grid().clone());
                    for k in 0..n {
                        acc = acc.add(&a[i][k].mul(&b[k][j]));
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Unconditional elliptic identity for the spatial connection components:
/// `Δ_ḡ ω_j = ∇̄_j(δ_ḡ ω) + ḡ^{il} ∇̄_i (R⊥)_{lj} + ḡ^{kl} ḡ^{im} R̄_{ijmk} ω_l
///  − ∇̄^i(ω_i ω_j) + ∇̄^i(ω_j ω_i)`,
/// with everything matrix-valued in the frame indices and only spatial
/// derivatives involved.
pub fn omega_elliptic_identity_residual(snap: &GeometrySnapshot, fol: &Foliation31) -> f64 {
    let d = fol.d;
    let cd = snap.codim;
    let grid = fol.grid.clone();
    let omega: Vec<Vec<Vec<SpectralField>>> = (0..d).map(|i| omega_matrix(snap, i)).collect();

    // spatial R⊥_{lj} = ∂_l ω_j − ∂_j ω_l + ω_l ω_j − ω_j ω_l
    let rperp = |l: usize, j: usize| -> Vec<Vec<SpectralField>> {
        let mut out = vec![vec![SpectralField::zeros(grid.clone()); cd]; cd];
        let comm1 = mat_mul(&omega[l], &omega[j]);
        let comm2 = mat_mul(&omega[j], &omega[l]);
        for a in 0..cd {
            for b in 0..cd {
                out[a][b] = omega[j][a][b]
                    .derivative(l)
                    .sub(&omega[l][a][b].derivative(j))
                    .add(&comm1[a][b])
                    .sub(&comm2[a][b]);
            }
        }
        out
    };

    // δ_ḡ ω = ḡ^{ij} ∇̄_i ω_j (matrix-valued scalar)
    let mut div = vec![vec![SpectralField::zeros(grid.clone()); cd]; cd];
    for a in 0..cd {
        for b in 0..cd {
            let form: Vec<SpectralField> = (0..d).map(|i| omega[i][a][b].clone()).collect();
            for i in 0..d {
                for j in 0..d {
                    div[a][b] =
                        div[a][b].add(&fol.gbar_inv[i][j].mul(&fol.nabla_bar_oneform(&form, i, j)));
                }
            }
        }
    }

    let mut worst = 0.0f64;
    for jj in 0..d {
        for a in 0..cd {
            for b in 0..cd {
                // Δ_ḡ ω_j (1-form Laplacian componentwise in frame indices)
                let form: Vec<SpectralField> = (0..d).map(|i| omega[i][a][b].clone()).collect();
                let grad: Vec<Vec<SpectralField>> = (0..d)
                    .map(|i| (0..d).map(|m| fol.nabla_bar_oneform(&form, i, m)).collect())
                    .collect();
                let mut lhs = SpectralField::zeros(grid.clone());
                for i in 0..d {
                    for l in 0..d {
                        let mut term = grad[l][jj].derivative(i);
                        for e in 0..d {
                            term = term
                                .sub(&fol.gammabar_up[e][i][l].mul(&grad[e][jj]))
                                .sub(&fol.gammabar_up[e][i][jj].mul(&grad[l][e]));
                        }
                        lhs = lhs.add(&fol.gbar_inv[i][l].mul(&term));
                    }
                }
                // ∇̄_j (δ_ḡ ω) = ∂_j
                let mut rhs = div[a][b].derivative(jj);
                // ḡ^{il} ∇̄_i (R⊥)_{lj}
                for i in 0..d {
                    for l in 0..d {
                        // ∇̄_i of the 2-form R⊥_{lj}
                        let mut term = rperp(l, jj)[a][b].derivative(i);
                        for e in 0..d {
                            term = term
                                .sub(&fol.gammabar_up[e][i][l].mul(&rperp(e, jj)[a][b]))
                                .sub(&fol.gammabar_up[e][i][jj].mul(&rperp(l, e)[a][b]));
                        }
                        rhs = rhs.add(&fol.gbar_inv[i][l].mul(&term));
                    }
                }
                // + ḡ^{kl} ḡ^{im} R̄_{ijmk} ω_l
                for kk in 0..d {
                    for l in 0..d {
                        for i in 0..d {
                            for m in 0..d {
                                rhs = rhs.add(
                                    &fol.gbar_inv[kk][l]
                                        .mul(&fol.gbar_inv[i][m])
                                        .mul(&fol.rbar[i][jj][m][kk])
                                        .mul(&omega[l][a][b]),
                                );
                            }
                        }
                    }
                }
                // − ∇̄^i(ω_i ω_j) + ∇̄^i(ω_j ω_i)
                let prod1: Vec<Vec<Vec<SpectralField>>> =
                    (0..d).map(|i| mat_mul(&omega[i], &omega[jj])).collect();
                let prod2: Vec<Vec<Vec<SpectralField>>> =
                    (0..d).map(|i| mat_mul(&omega[jj], &omega[i])).collect();
                for i in 0..d {
                    for l in 0..d {
                        let f1: Vec<SpectralField> =
                            (0..d).map(|m| prod1[m][a][b].clone()).collect();
                        let f2: Vec<SpectralField> =
                            (0..d).map(|m| prod2[m][a][b].clone()).collect();
                        rhs = rhs
                            .sub(&fol.gbar_inv[i][l].mul(&fol.nabla_bar_oneform(&f1, i, l)))
                            .add(&fol.gbar_inv[i][l].mul(&fol.nabla_bar_oneform(&f2, i, l)));
                    }
                }
                worst = worst.max(lhs.sub(&rhs).max_abs());
            }
        }
    }
    worst
}

/// `∂₀(ḡ^{ij} Γ̄^k_{ij})` via the first-variation formulas (unconditional):
/// `A^k = (2N h^{ij} − ∇̄^i β^j − ∇̄^j β^i) Γ̄^k_{ij}
///  + ḡ^{ij} [ −(∇̄_i (Nh)_j^k + ∇̄_j (Nh)_i^k − ∇̄^k (Nh)_{ij})
///             + ∇̄_i ∇̄_j β^k + ḡ^{kl} R̄_{imjl} β^m ]`.
fn contracted_christoffel_rate(fol: &Foliation31) -> Vec<SpectralField> {
    let d = fol.d;
    let grid = fol.grid.clone();
    // (Nh) lowered and mixed
    let nh: Vec<Vec<SpectralField>> = (0..d)
        .map(|i| (0..d).map(|j| fol.lapse.mul(&fol.h[i][j])).collect())
        .collect();
    let nh_mixed: Vec<Vec<SpectralField>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|kk| {
                    let mut acc = SpectralField::zeros(grid.clone());
                    for l in 0..d {
                        acc = acc.add(&nh[i][l].mul(&fol.gbar_inv[l][kk]));
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mixed_cov = |ii: usize, jj: usize, kkk: usize| -> SpectralField {
        let mut r = nh_mixed[jj][kkk].derivative(ii);
        for l in 0..d {
            r = r
                .sub(&fol.gammabar_up[l][ii][jj].mul(&nh_mixed[l][kkk]))
                .add(&fol.gammabar_up[kkk][ii][l].mul(&nh_mixed[jj][l]));
        }
        r
    };
    let grad_beta: Vec<Vec<SpectralField>> = (0..d)
        .map(|i| (0..d).map(|kk| fol.nabla_bar_vector(&fol.shift, i, kk)).collect())
        .collect();
    (0..d)
        .map(|kk| {
            let mut acc = SpectralField::zeros(grid.clone());
            for i in 0..d {
                for j in 0..d {
                    // ∂₀ḡ^{ij} Γ̄^k_{ij} part: (2N h^{ij} − ∇̄^i β^j − ∇̄^j β^i) Γ̄^k_{ij}
                    let mut dginv = SpectralField::zeros(grid.clone());
                    for a in 0..d {
                        for b in 0..d {
                            dginv = dginv.add(
                                &fol.gbar_inv[i][a]
                                    .mul(&fol.gbar_inv[j][b])
                                    .mul(&fol.lapse.mul(&fol.h[a][b]).scale(2.0)),
                            );
                        }
                        dginv = dginv
                            .sub(&fol.gbar_inv[j][a].mul(&grad_beta[a][i]))
                            .sub(&fol.gbar_inv[i][a].mul(&grad_beta[a][j]));
                    }
                    acc = acc.add(&dginv.mul(&fol.gammabar_up[kk][i][j]));
                    // ḡ^{ij} ∂₀Γ̄^k_{ij} part
                    let mut up = SpectralField::zeros(grid.clone());
                    for l in 0..d {
                        up = up.add(&fol.gbar_inv[kk][l].mul(&fol.nabla_bar_sym2(&nh, l, i, j)));
                    }
                    let mut dgamma = mixed_cov(i, j, kk).add(&mixed_cov(j, i, kk)).sub(&up).scale(-1.0);
                    // ∇̄_i ∇̄_j β^k
                    let mut hess = grad_beta[j][kk].derivative(i);
                    for l in 0..d {
                        hess = hess
                            .sub(&fol.gammabar_up[l][i][j].mul(&grad_beta[l][kk]))
                            .add(&fol.gammabar_up[kk][i][l].mul(&grad_beta[j][l]));
                    }
                    dgamma = dgamma.add(&hess);
                    for l in 0..d {
                        for m in 0..d {
                            dgamma = dgamma
                                .add(&fol.gbar_inv[kk][l].mul(&fol.rbar[i][m][j][l]).mul(&fol.shift[m]));
                        }
                    }
                    acc = acc.add(&fol.gbar_inv[i][j].mul(&dgamma));
                }
            }
            acc
        })
        .collect()
}

/// Unconditional check of the `∂₀(ḡ Γ̄)` variation identity against a
/// direct finite-difference time derivative (stencil of foliations).
pub fn shift_identity_residual(fols: &[Foliation31], center: usize, dt: f64) -> Result<f64> {
    let fol = &fols[center];
    let d = fol.d;
    let a = contracted_christoffel_rate(fol);
    let mut worst = 0.0f64;
    for kk in 0..d {
        let series: Vec<SpectralField> = fols
            .iter()
            .map(|f| {
                let mut acc = SpectralField::zeros(f.grid.clone());
                for i in 0..d {
                    for j in 0..d {
                        acc = acc.add(&f.gbar_inv[i][j].mul(&f.gammabar_up[kk][i][j]));
                    }
                }
                acc
            })
            .collect();
        let fd = fd_time_derivative(&series, dt, center, 1)?;
        worst = worst.max(fd.sub(&a[kk]).max_abs());
    }
    Ok(worst)
}

/// The five derived-equation residuals at slice `c` of a gauge history.
pub fn derived_gauge_equation_residuals(
    gh: &GaugeHistory,
    c: usize,
    tol: f64,
) -> Result<DerivedEquationResiduals> {
    let fol = &gh.fols[c];
    let snap = &gh.snaps[c];
    let d = fol.d;
    let dt = gh.hist.dt();
    let metric = fol_metric(fol)?;
    let riemann = snap.riemann_from_gamma();

    // ---------- 1. parabolic lapse ----------
    let lapse = {
        let n_minus_1 = fol.lapse.map(|v| v - 1.0);
        let dt_n = fd_time_derivative(
            &gh.fols.iter().map(|f| f.lapse.clone()).collect::<Vec<_>>(),
            dt,
            c,
            1,
        )?;
        // 𝒢 assembly
        let trace = fol.mean_curvature();
        // (1/N) ḡ^{ij} (∂₀F̃♮_ij − R_{i0j0})
        let mut g1 = SpectralField::zeros(fol.grid.clone());
        for i in 0..d {
            for j in 0..d {
                let series: Vec<SpectralField> =
                    gh.fnat_tilde.iter().map(|f| f[i + 1][j + 1].clone()).collect();
                let dt_f = fd_time_derivative(&series, dt, c, 1)?;
                g1 = g1.add(&fol.gbar_inv[i][j].mul(&dt_f.sub(&riemann[i + 1][0][j + 1][0])));
            }
        }
        g1 = g1.zip(&fol.lapse, |v, n| v / n);
        // ∂₀((1/N) ḡ^{ij}) F̃♮_ij
        let mut g2 = SpectralField::zeros(fol.grid.clone());
        for i in 0..d {
            for j in 0..d {
                let series: Vec<SpectralField> = gh
                    .fols
                    .iter()
                    .map(|f| f.gbar_inv[i][j].zip(&f.lapse, |v, n| v / n))
                    .collect();
                let dt_c = fd_time_derivative(&series, dt, c, 1)?;
                g2 = g2.add(&dt_c.mul(&gh.fnat_tilde[c][i + 1][j + 1]));
            }
        }
        // β^i ∇̄_i tr h + N |h|²
        let mut g3 = SpectralField::zeros(fol.grid.clone());
        for i in 0..d {
            g3 = g3.add(&fol.shift[i].mul(&trace.derivative(i)));
        }
        let mut h2 = SpectralField::zeros(fol.grid.clone());
        for i in 0..d {
            for j in 0..d {
                for a in 0..d {
                    for b in 0..d {
                        h2 = h2.add(
                            &fol.h[i][j]
                                .mul(&fol.h[a][b])
                                .mul(&fol.gbar_inv[i][a])
                                .mul(&fol.gbar_inv[j][b]),
                        );
                    }
                }
            }
        }
        let g4 = fol.lapse.mul(&h2);
        // (1/N)(2 ḡ^{ij} R_{i0jk} β^k − ḡ^{ij} R_{ikjl} β^k β^l)
        let mut g5 = SpectralField::zeros(fol.grid.clone());
        for i in 0..d {
            for j in 0..d {
                for kk in 0..d {
                    g5 = g5.add(
                        &fol.gbar_inv[i][j]
                            .mul(&riemann[i + 1][0][j + 1][kk + 1])
                            .mul(&fol.shift[kk])
                            .scale(2.0),
                    );
                    for l in 0..d {
                        g5 = g5.sub(
                            &fol.gbar_inv[i][j]
                                .mul(&riemann[i + 1][kk + 1][j + 1][l + 1])
                                .mul(&fol.shift[kk])
                                .mul(&fol.shift[l]),
                        );
                    }
                }
            }
        }
        g5 = g5.zip(&fol.lapse, |v, n| v / n);
        // −2 (N h^{ij} − ∇̄^i β^j) ∇̄²_ij |D|^{−1}(N−1)
        let w = n_minus_1.mean_free().abs_d_inv();
        let mut g6 = SpectralField::zeros(fol.grid.clone());
        for i in 0..d {
            for j in 0..d {
                let mut hess = w.derivative(i).derivative(j);
                for e in 0..d {
                    hess = hess.sub(&fol.gammabar_up[e][i][j].mul(&w.derivative(e)));
                }
                let mut nh_up = SpectralField::zeros(fol.grid.clone());
                for a in 0..d {
                    for b in 0..d {
                        nh_up = nh_up.add(
                            &fol.lapse
                                .mul(&fol.h[a][b])
                                .mul(&fol.gbar_inv[i][a])
                                .mul(&fol.gbar_inv[j][b]),
                        );
                    }
                }
                let mut grad_up = SpectralField::zeros(fol.grid.clone());
                for a in 0..d {
                    grad_up = grad_up.add(&fol.gbar_inv[i][a].mul(&fol.nabla_bar_vector(&fol.shift, a, j)));
                }
                g6 = g6.sub(&nh_up.sub(&grad_up).mul(&hess).scale(2.0));
            }
        }
        // bracket · ∇̄^k |D|^{−1}(N−1)
        let nh: Vec<Vec<SpectralField>> = (0..d)
            .map(|i| (0..d).map(|j| fol.lapse.mul(&fol.h[i][j])).collect())
            .collect();
        let ntr = fol.lapse.mul(&trace);
        let mut g7 = SpectralField::zeros(fol.grid.clone());
        for kk in 0..d {
            // −2 ∇̄^i (Nh)_{ik} + ∇̄_k (N tr h) + Δ_ḡ β_k + ḡ^{ij}(R_{ikjl} + h h − h h) β^l
            let mut br = SpectralField::zeros(fol.grid.clone());
            for i in 0..d {
                for a in 0..d {
                    br = br.sub(&fol.gbar_inv[i][a].mul(&fol.nabla_bar_sym2(&nh, a, i, kk)).scale(2.0));
                }
            }
            br = br.add(&ntr.derivative(kk));
            // Δ_ḡ β_k: 1-form Laplacian of β_low
            let grad: Vec<Vec<SpectralField>> = (0..d)
                .map(|i| (0..d).map(|m| fol.nabla_bar_oneform(&fol.shift_low, i, m)).collect())
                .collect();
            for i in 0..d {
                for l in 0..d {
                    let mut term = grad[l][kk].derivative(i);
                    for e in 0..d {
                        term = term
                            .sub(&fol.gammabar_up[e][i][l].mul(&grad[e][kk]))
                            .sub(&fol.gammabar_up[e][i][kk].mul(&grad[l][e]));
                    }
                    br = br.add(&fol.gbar_inv[i][l].mul(&term));
                }
            }
            for i in 0..d {
                for j in 0..d {
                    for l in 0..d {
                        let curv = riemann[i + 1][kk + 1][j + 1][l + 1]
                            .add(&fol.h[i][l].mul(&fol.h[kk][j]))
                            .sub(&fol.h[i][j].mul(&fol.h[kk][l]));
                        br = br.add(&fol.gbar_inv[i][j].mul(&curv).mul(&fol.shift[l]));
                    }
                }
            }
            let mut grad_up_w = SpectralField::zeros(fol.grid.clone());
            for a in 0..d {
                grad_up_w = grad_up_w.add(&fol.gbar_inv[kk][a].mul(&w.derivative(a)));
            }
            g7 = g7.add(&br.mul(&grad_up_w));
        }

        let gg = g1.add(&g2).add(&g3).add(&g4).add(&g5).add(&g6).add(&g7);
        let proj = metric.project_mean_free(&gg);
        let inv = solve_elliptic_perturbative(&metric, &proj, EllipticKind::LaplaceBeltrami, tol, 400)?;
        dt_n.add(&n_minus_1.mean_free().abs_d()).sub(&inv.abs_d()).max_abs()
    };

    // ---------- 2. parabolic shift ----------
    let shift = {
        // exact rearrangement of the varied harmonic condition:
        // ∂₀β^k = −|D| Δ_tens^{−1} [ A^k + [∂₀, Δ_ḡ|D|^{−1}] β^k ]
        let a = contracted_christoffel_rate(fol);
        // commutator: ∂₀(L β)(FD of field) − L(∂₀β)
        let dt_beta: Vec<SpectralField> = (0..d)
            .map(|kk| {
                fd_time_derivative(
                    &gh.fols.iter().map(|f| f.shift[kk].clone()).collect::<Vec<_>>(),
                    dt,
                    c,
                    1,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let l_beta_series: Vec<Vec<SpectralField>> = gh
            .fols
            .iter()
            .map(|f| laplace_absd_inv_vector(f, &f.shift))
            .collect();
        let mut worst = 0.0f64;
        let l_dtbeta = laplace_absd_inv_vector(fol, &dt_beta);
        for kk in 0..d {
            let series: Vec<SpectralField> =
                l_beta_series.iter().map(|v| v[kk].clone()).collect();
            let dt_l = fd_time_derivative(&series, dt, c, 1)?;
            let commut = dt_l.sub(&l_dtbeta[kk]);
            let rhs_k = a[kk].add(&commut).mean_free();
            // tensorial inverse needs all components: handled after loop
            let _ = rhs_k;
            worst = worst.max(0.0);
        }
        // assemble vector rhs and invert the tensorial Laplacian once
        let rhs: Vec<SpectralField> = (0..d)
            .map(|kk| {
                let series: Vec<SpectralField> =
                    l_beta_series.iter().map(|v| v[kk].clone()).collect();
                let dt_l = fd_time_derivative(&series, dt, c, 1).expect("stencil checked");
                a[kk].add(&dt_l.sub(&l_dtbeta[kk])).mean_free()
            })
            .collect();
        let minv = solve_vector_laplacian(&metric, &rhs, tol, 400)?;
        for kk in 0..d {
            let res = dt_beta[kk].add(&minv[kk].abs_d());
            worst = worst.max(res.max_abs());
        }
        worst
    };

    // ---------- 3. elliptic ḡ (gauged: W^k = Δ_ḡ|D|^{−1} β^k) ----------
    let gbar = {
        let w = laplace_absd_inv_vector(fol, &fol.shift);
        gbar_elliptic_identity_residual(fol, Some(&w))
    };

    // ---------- 4. elliptic h (unconditional identity) ----------
    let h = h_elliptic_identity_residual(snap, fol);

    // ---------- 5. elliptic ω_i (gauged substitution) ----------
    let omega_i = {
        // residual of the unconditional identity with ∇̄_j(δ_ḡω) replaced by
        // ∂_j of the gauge condition right-hand side
        let cd = snap.codim;
        let grid = fol.grid.clone();
        let mut worst = omega_elliptic_identity_residual(snap, fol);
        // additionally check that δ_ḡω matches the condition RHS (this is
        // the balanced residual; the displayed equation differs from the
        // unconditional identity exactly by ∂_j of that residual)
        for abar in 0..cd {
            for bbar in 0..cd {
                let form: Vec<SpectralField> =
                    (0..d).map(|i| snap.omega[i + 1][abar][bbar].clone()).collect();
                let mut div = SpectralField::zeros(grid.clone());
                for i in 0..d {
                    for j in 0..d {
                        div = div
                            .add(&fol.gbar_inv[i][j].mul(&fol.nabla_bar_oneform(&form, i, j)));
                    }
                }
                let parab = laplace_absd_inv_scalar(fol, &snap.omega[0][abar][bbar].mean_free());
                let mut rhs = SpectralField::zeros(grid.clone());
                for cbar in 0..cd {
                    rhs = rhs.add(&snap.gram[bbar][cbar].mul(&gh.fperp_tilde[c][abar][cbar]));
                }
                let mean = weighted_mean(fol, &rhs);
                let cond = div.add(&parab).sub(&rhs).map(move |v| v + mean);
                for j in 0..d {
                    worst = worst.max(cond.derivative(j).max_abs());
                }
            }
        }
        worst
    };

    Ok(DerivedEquationResiduals { lapse, shift, gbar, h, omega_i })
}
