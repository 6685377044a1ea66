//! The gauge source functions and the low-high-high curvature parts:
//!
//! `F♮_{αβ} = Σ_{l,Ā,B̄} ℙ♮[ m(e)_{ĀB̄}, k^B̄_{αβ}, 𝒯^{(l)} k^Ā_{0l} ]`,
//! `F⊥^{ĀB̄} = −Σ_{i,j,γ,δ} ∂_i( ḡ^{ij} ℙ♮[ g^{γδ}, k^B̄_{jγ}, 𝒯^{(b)} k^Ā_{bδ} ] )`,
//! `R♮ = ℙ♮[m(e), k, k]`-antisymmetrized, `R⊥♮ = ℙ♮[g⁻¹, k, k]`-antisymmetrized.

use crate::geometry::{Foliation31, GeometrySnapshot};
use crate::spectral::{lhh_project, SpectralField};

/// `F♮` and `F⊥` on one slice.
pub struct GaugeSources {
    /// `fnat[α][β]`
    pub fnat: Vec<Vec<SpectralField>>,
    /// `fperp[abar][bbar]` (indices `Ā B̄` in that order)
    pub fperp: Vec<Vec<SpectralField>>,
}

/// `𝒯^{(l)} k^Ā_{0l}` summed over `l` for each frame index.
fn riesz_k0(snap: &GeometrySnapshot) -> Vec<SpectralField> {
    let d = snap.dd - 1;
    (0..snap.codim)
        .map(|abar| {
            let mut acc = SpectralField::zeros(snap.grid.clone());
            for l in 0..d {
                acc = acc.add(&snap.k[abar][0][l + 1].riesz_t_sum(l));
            }
            acc
        })
        .collect()
}

/// `F♮_{αβ}` on one slice.
pub fn f_natural(snap: &GeometrySnapshot) -> Vec<Vec<SpectralField>> {
    let dd = snap.dd;
    let cd = snap.codim;
    let tk = riesz_k0(snap);
    let mut out = vec![vec![SpectralField::zeros(snap.grid.clone()); dd]; dd];
    for al in 0..dd {
        for be in al..dd {
            let mut acc = SpectralField::zeros(snap.grid.clone());
            for abar in 0..cd {
                for bbar in 0..cd {
                    acc = acc.add(&lhh_project(
                        &snap.gram[abar][bbar],
                        &snap.k[bbar][al][be],
                        &tk[abar],
                    ));
                }
            }
            out[al][be] = acc.clone();
            out[be][al] = acc;
        }
    }
    out
}

/// `F⊥^{ĀB̄}` on one slice.
pub fn f_perp(snap: &GeometrySnapshot, fol: &Foliation31) -> Vec<Vec<SpectralField>> {
    let dd = snap.dd;
    let cd = snap.codim;
    let d = dd - 1;
    // 𝒯^{(b)} k^Ā_{bδ} summed over b, per (Ā, δ)
    let mut tk = vec![vec![SpectralField::zeros(snap.grid.clone()); dd]; cd];
    for abar in 0..cd {
        for de in 0..dd {
            let mut acc = SpectralField::zeros(snap.grid.clone());
            for b in 0..d {
                acc = acc.add(&snap.k[abar][b + 1][de].riesz_t_sum(b));
            }
            tk[abar][de] = acc;
        }
    }
    let mut out = vec![vec![SpectralField::zeros(snap.grid.clone()); cd]; cd];
    for abar in 0..cd {
        for bbar in 0..cd {
            let mut total = SpectralField::zeros(snap.grid.clone());
            for i in 0..d {
                for j in 0..d {
                    // inner LHH sum over γ, δ
                    let mut inner = SpectralField::zeros(snap.grid.clone());
                    for ga in 0..dd {
                        for de in 0..dd {
                            inner = inner.add(&lhh_project(
                                &snap.ginv[ga][de],
                                &snap.k[bbar][j + 1][ga],
                                &tk[abar][de],
                            ));
                        }
                    }
                    total = total.add(&fol.gbar_inv[i][j].mul(&inner).derivative(i));
                }
            }
            out[abar][bbar] = total.scale(-1.0);
        }
    }
    out
}

impl GaugeSources {
    pub fn compute(snap: &GeometrySnapshot, fol: &Foliation31) -> Self {
        GaugeSources { fnat: f_natural(snap), fperp: f_perp(snap, fol) }
    }
}

/// The low-high-high interaction parts of the curvature tensors.
pub struct LhhCurvature {
    /// `rnat[α][β][γ][δ]`
    pub rnat: Vec<Vec<Vec<Vec<SpectralField>>>>,
    /// `rperp_nat[abar][bbar][α][β]`
    pub rperp_nat: Vec<Vec<Vec<Vec<SpectralField>>>>,
}

/// `R♮_{αβγδ} = Σ_{Ā,B̄} ( ℙ♮[m̄_{ĀB̄}, k^B̄_{αγ}, k^Ā_{βδ}]
///              − ℙ♮[m̄_{ĀB̄}, k^Ā_{αδ}, k^B̄_{βγ}] )`
/// and the analogous `R⊥♮` with `g^{γδ}` weights.
pub fn lhh_curvature(snap: &GeometrySnapshot) -> LhhCurvature {
    let dd = snap.dd;
    let cd = snap.codim;
    let zero = || SpectralField::zeros(snap.grid.clone());
    let mut rnat = vec![vec![vec![vec![zero(); dd]; dd]; dd]; dd];
    for al in 0..dd {
        for be in 0..dd {
            for ga in 0..dd {
                for de in 0..dd {
                    let mut acc = zero();
                    for abar in 0..cd {
                        for bbar in 0..cd {
                            acc = acc
                                .add(&lhh_project(
                                    &snap.gram[abar][bbar],
                                    &snap.k[bbar][al][ga],
                                    &snap.k[abar][be][de],
                                ))
                                .sub(&lhh_project(
                                    &snap.gram[abar][bbar],
                                    &snap.k[abar][al][de],
                                    &snap.k[bbar][be][ga],
                                ));
                        }
                    }
                    rnat[al][be][ga][de] = acc;
                }
            }
        }
    }
    let mut rperp_nat = vec![vec![vec![vec![zero(); dd]; dd]; cd]; cd];
    for abar in 0..cd {
        for bbar in 0..cd {
            for al in 0..dd {
                for be in 0..dd {
                    let mut acc = zero();
                    for ga in 0..dd {
                        for de in 0..dd {
                            acc = acc
                                .add(&lhh_project(
                                    &snap.ginv[ga][de],
                                    &snap.k[bbar][al][ga],
                                    &snap.k[abar][be][de],
                                ))
                                .sub(&lhh_project(
                                    &snap.ginv[ga][de],
                                    &snap.k[abar][al][ga],
                                    &snap.k[bbar][be][de],
                                ));
                        }
                    }
                    rperp_nat[abar][bbar][al][be] = acc;
                }
            }
        }
    }
    LhhCurvature { rnat, rperp_nat }
}
