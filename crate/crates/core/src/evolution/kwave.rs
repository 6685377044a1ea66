//! Residual of the wave-type equation for the second fundamental form,
//! evaluated term by term on a 5-snapshot stencil:
//! `g^{μν} ∇_μ∇_ν k^Ā_{αβ} = −R_{μα}{}^{γμ} k^Ā_{γβ} − R^μ{}_α{}^γ{}_β k^Ā_{μγ}
//!  + (R⊥)^μ{}_α{}^Ā{}_{B̄} k^B̄_{μβ}`.
//!
//! The orientation of the curvature couplings is fixed against the
//! coordinate Riemann convention used throughout this crate; on evolved
//! minimal immersions the residual sits at the discretization floor only
//! with these signs (wrong orientations leave an O(‖k‖³) defect).

use crate::error::Result;
use crate::geometry::stencil::fd_time_derivative;
use crate::geometry::{GeometrySnapshot, SnapshotStencil};
use crate::spectral::SpectralField;

/// First covariant derivative of `k` on one snapshot, with the time
/// derivative of `k` supplied by the caller (stencil FD at that slice).
fn nabla_k_slice(
    snap: &GeometrySnapshot,
    dt_k: &[Vec<Vec<SpectralField>>],
    abar: usize,
    mu: usize,
    al: usize,
    be: usize,
) -> SpectralField {
    let mut r = if mu == 0 {
        dt_k[abar][al][be].clone()
    } else {
        snap.k[abar][al][be].derivative(mu - 1)
    };
    for la in 0..snap.dd {
        r = r
            .sub(&snap.gamma_up[la][mu][al].mul(&snap.k[abar][la][be]))
            .sub(&snap.gamma_up[la][mu][be].mul(&snap.k[abar][al][la]));
    }
    for bbar in 0..snap.codim {
        r = r.add(&snap.omega[mu][abar][bbar].mul(&snap.k[bbar][al][be]));
    }
    r
}

/// Max-norm residual per `(Ā, α, β)` and the overall max.
pub fn k_wave_residual(stencil: &SnapshotStencil) -> Result<(Vec<SpectralField>, f64)> {
    let snaps = &stencil.snaps;
    let n = snaps.len();
    let c = stencil.center;
    let dt = stencil.dt;
    let center = stencil.center();
    let dd = center.dd;
    let cd = center.codim;

    // ∂₀k on every slice (5-point FD within the stencil)
    let mut dt_k_all: Vec<Vec<Vec<Vec<SpectralField>>>> = Vec::with_capacity(n);
    for s in 0..n {
        let mut per = vec![vec![vec![SpectralField::zeros(center.grid.clone()); dd]; dd]; cd];
        for abar in 0..cd {
            for al in 0..dd {
                for be in 0..dd {
                    let series: Vec<SpectralField> =
                        snaps.iter().map(|sn| sn.k[abar][al][be].clone()).collect();
                    per[abar][al][be] = fd_time_derivative(&series, dt, s, 1)?;
                }
            }
        }
        dt_k_all.push(per);
    }

    // T[s][abar][mu][al][be] = ∇_μ k^Ā_{αβ} on slice s
    let mut t_all: Vec<Vec<Vec<Vec<Vec<SpectralField>>>>> = Vec::with_capacity(n);
    for s in 0..n {
        let snap = &snaps[s];
        let mut per =
            vec![vec![vec![vec![SpectralField::zeros(center.grid.clone()); dd]; dd]; dd]; cd];
        for abar in 0..cd {
            for mu in 0..dd {
                for al in 0..dd {
                    for be in 0..dd {
                        per[abar][mu][al][be] =
                            nabla_k_slice(snap, &dt_k_all[s], abar, mu, al, be);
                    }
                }
            }
        }
        t_all.push(per);
    }

    // second covariant derivative at the center, contracted with g^{μν}
    let riemann = center.riemann_from_gamma();
    let rperp = center.normal_curvature_from_k();

    let mut fields = Vec::new();
    let mut worst = 0.0f64;
    for abar in 0..cd {
        for al in 0..dd {
            for be in 0..dd {
                let mut lhs = SpectralField::zeros(center.grid.clone());
                for mu in 0..dd {
                    for nu in 0..dd {
                        // ∇_μ T_ν with T = ∇k: tensor of type NΣ ⊗ (T*)³
                        let mut term = if mu == 0 {
                            let series: Vec<SpectralField> = (0..n)
                                .map(|s| t_all[s][abar][nu][al][be].clone())
                                .collect();
                            fd_time_derivative(&series, dt, c, 1)?
                        } else {
                            t_all[c][abar][nu][al][be].derivative(mu - 1)
                        };
                        for la in 0..dd {
                            term = term
                                .sub(&center.gamma_up[la][mu][nu].mul(&t_all[c][abar][la][al][be]))
                                .sub(&center.gamma_up[la][mu][al].mul(&t_all[c][abar][nu][la][be]))
                                .sub(&center.gamma_up[la][mu][be].mul(&t_all[c][abar][nu][al][la]));
                        }
                        for bbar in 0..cd {
                            term = term
                                .add(&center.omega[mu][abar][bbar].mul(&t_all[c][bbar][nu][al][be]));
                        }
                        lhs = lhs.add(&center.ginv[mu][nu].mul(&term));
                    }
                }

                // right-hand side couplings
                let mut rhs = SpectralField::zeros(center.grid.clone());
                // −R_{μα}{}^{γμ} k^Ā_{γβ} with R_{μα}{}^{γμ} = g^{γc} g^{μd} R_{μαcd}
                for ga in 0..dd {
                    let mut coef = SpectralField::zeros(center.grid.clone());
                    for cc in 0..dd {
                        for mu in 0..dd {
                            for ddx in 0..dd {
                                coef = coef.add(
                                    &center.ginv[ga][cc]
                                        .mul(&center.ginv[mu][ddx])
                                        .mul(&riemann[mu][al][cc][ddx]),
                                );
                            }
                        }
                    }
                    rhs = rhs.sub(&coef.mul(&center.k[abar][ga][be]));
                }
                // −R^μ{}_α{}^γ{}_β k^Ā_{μγ} with R^μ{}_α{}^γ{}_β = g^{μa} g^{γc} R_{aαcβ}
                for mu in 0..dd {
                    for ga in 0..dd {
                        let mut coef = SpectralField::zeros(center.grid.clone());
                        for aa in 0..dd {
                            for cc in 0..dd {
                                coef = coef.add(
                                    &center.ginv[mu][aa]
                                        .mul(&center.ginv[ga][cc])
                                        .mul(&riemann[aa][al][cc][be]),
                                );
                            }
                        }
                        rhs = rhs.sub(&coef.mul(&center.k[abar][mu][ga]));
                    }
                }
                // (R⊥)^μ{}_α{}^Ā{}_B̄ k^B̄_{μβ}
                //   = g^{μν} (R⊥^ĀC̄)_{να} m̄_{C̄B̄} k^B̄_{μβ}
                for mu in 0..dd {
                    for bbar in 0..cd {
                        let mut coef = SpectralField::zeros(center.grid.clone());
                        for nu in 0..dd {
                            for cbar in 0..cd {
                                coef = coef.add(
                                    &center.ginv[mu][nu]
                                        .mul(&rperp[abar][cbar][nu][al])
                                        .mul(&center.gram[cbar][bbar]),
                                );
                            }
                        }
                        rhs = rhs.add(&coef.mul(&center.k[bbar][mu][be]));
                    }
                }

                let res = lhs.sub(&rhs);
                worst = worst.max(res.max_abs());
                fields.push(res);
            }
        }
    }
    Ok((fields, worst))
}
