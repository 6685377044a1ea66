//! Frequency-projected Codazzi relations for the localized inverse
//! divergence, and the exact paired-index cancellation of the wedge middle
//! terms.

use crate::error::Result;
use crate::geometry::SnapshotStencil;
use crate::spectral::{lhh_project_ranged, SpectralField};

/// Result of the projected-relation check.
#[derive(Clone, Debug, serde::Serialize)]
pub struct WedgeCheck {
    /// max mismatch of the projected Codazzi relation
    pub projected_codazzi: f64,
    /// the raw Codazzi residual of the same snapshot (upper-bound scale)
    pub codazzi_scale: f64,
    /// max of the exactly-cancelling paired sum
    pub swap_cancellation: f64,
}

/// Evaluate both sides of
/// `∂_κ(𝒯^{(i)}_{j'} P_{j'} k_{λμ}) − ∂_λ(𝒯^{(i)}_{j'} P_{j'} k_{κμ})
///   = 𝒯^{(i)}_{j'} P_{j'}(Codazzi right side)`,
/// where the right side is the exact commutator from the Codazzi identity
/// `∂_κ k_{λμ} − ∂_λ k_{κμ} = Γ^ν_{κμ} k_{λν} − Γ^ν_{λμ} k_{κν}
///   − ω_{κ} k_{λμ} + ω_{λ} k_{κμ}` (frame indices contracted), spatial
/// `κ, λ`. The mismatch is bounded by the multiplier norm times the raw
/// Codazzi residual of the snapshot.
pub fn wedge_divergence_check(stencil: &SnapshotStencil, jp: usize, jpp: usize) -> Result<WedgeCheck> {
    let snap = stencil.center();
    let dd = snap.dd;
    let cd = snap.codim;
    let d = dd - 1;

    let codazzi_rhs = |abar: usize, ka: usize, la: usize, mu: usize| -> SpectralField {
        let mut r = SpectralField::zeros(snap.grid.clone());
        for nu in 0..dd {
            r = r
                .add(&snap.gamma_up[nu][ka][mu].mul(&snap.k[abar][la][nu]))
                .sub(&snap.gamma_up[nu][la][mu].mul(&snap.k[abar][ka][nu]));
        }
        for bbar in 0..cd {
            r = r
                .sub(&snap.omega[ka][abar][bbar].mul(&snap.k[bbar][la][mu]))
                .add(&snap.omega[la][abar][bbar].mul(&snap.k[bbar][ka][mu]));
        }
        r
    };

    let mut projected = 0.0f64;
    for abar in 0..cd {
        for ka in 1..dd {
            for la in (ka + 1)..dd {
                for mu in 0..dd {
                    for axis in 0..d {
                        let tk_l = snap.k[abar][la][mu].lp_project(jp)?.riesz_t(axis, jp)?;
                        let tk_k = snap.k[abar][ka][mu].lp_project(jp)?.riesz_t(axis, jp)?;
                        let lhs = tk_l.derivative(ka - 1).sub(&tk_k.derivative(la - 1));
                        let rhs =
                            codazzi_rhs(abar, ka, la, mu).lp_project(jp)?.riesz_t(axis, jp)?;
                        projected = projected.max(lhs.sub(&rhs).max_abs());
                    }
                }
            }
        }
    }

    let (_, codazzi_scale) = stencil.codazzi_residual();

    // exact swap cancellation of the antisymmetric wedge middle terms:
    // Σ_{(j₁,j₂) ∈ {(j',j''),(j'',j')}} ℙ-ranged[m̄, −k^Ā_{c0} , k^B̄_{d0}]
    //   + ℙ-ranged[m̄, k^B̄_{0d}, k^Ā_{0c}] = 0 (k symmetric, range symmetric)
    let mut swap = 0.0f64;
    for cidx in 1..dd {
        for didx in 1..dd {
            let mut acc = SpectralField::zeros(snap.grid.clone());
            for (j1, j2) in [(jp, jpp), (jpp, jp)] {
                for abar in 0..cd {
                    for bbar in 0..cd {
                        acc = acc.sub(&lhh_project_ranged(
                            &snap.gram[abar][bbar],
                            &snap.k[abar][cidx][0],
                            &snap.k[bbar][didx][0],
                            j1,
                            j2,
                        ));
                        acc = acc.add(&lhh_project_ranged(
                            &snap.gram[abar][bbar],
                            &snap.k[bbar][0][didx],
                            &snap.k[abar][0][cidx],
                            j1,
                            j2,
                        ));
                    }
                }
            }
            swap = swap.max(acc.max_abs());
        }
    }

    Ok(WedgeCheck { projected_codazzi: projected, codazzi_scale, swap_cancellation: swap })
}

/// The symmetric-pair cancellation in isolation: for any fields and any
/// index pair, summing the ranged projector over `{(j₁,j₂),(j₂,j₁)}` of an
/// antisymmetrized product vanishes identically.
pub fn lhh_swap_cancellation(
    h: &SpectralField,
    f1: &SpectralField,
    f2: &SpectralField,
    j1: usize,
    j2: usize,
) -> f64 {
    let mut acc = SpectralField::zeros(h.grid().clone());
    for (a, b) in [(j1, j2), (j2, j1)] {
        acc = acc
            .add(&lhh_project_ranged(h, f1, f2, a, b))
            .sub(&lhh_project_ranged(h, f2, f1, a, b));
    }
    acc.max_abs()
}
