//! Residuals of the three balanced-gauge conditions on one slice.

use crate::geometry::{Foliation31, GeometrySnapshot};
use crate::solvers::SliceMetric;
use crate::spectral::SpectralField;

/// `Δ_ḡ |D|^{−1}` on scalars:
/// `(1/√ḡ) ∂_i ( ḡ^{ij} √ḡ · ∂_j |D|^{−1} f )` with the `ξ = 0` mode of
/// `|D|^{−1}` dropped. Reduces to `−|D|` on the flat metric, which is what
/// the decaying parabolic structure of the derived equations requires.
pub fn laplace_absd_inv_scalar(fol: &Foliation31, f: &SpectralField) -> SpectralField {
    let d = fol.d;
    let w = f.abs_d_inv();
    let sqrt_det = sqrt_det_gbar(fol);
    let mut acc = SpectralField::zeros(f.grid().clone());
    for i in 0..d {
        let mut flux = SpectralField::zeros(f.grid().clone());
        for j in 0..d {
            flux = flux.add(&fol.gbar_inv[i][j].mul(&sqrt_det).mul(&w.derivative(j)));
        }
        acc = acc.add(&flux.derivative(i));
    }
    acc.zip(&sqrt_det, |a, s| a / s)
}

/// `Δ_ḡ |D|^{−1}` on vector fields: componentwise `|D|^{−1}` followed by the
/// tensorial Laplacian `ḡ^{ij} ∇̄_i ∇̄_j`.
pub fn laplace_absd_inv_vector(fol: &Foliation31, v: &[SpectralField]) -> Vec<SpectralField> {
    let d = fol.d;
    let w: Vec<SpectralField> = v.iter().map(|f| f.abs_d_inv()).collect();
    // ∇̄_j w^k
    let grad: Vec<Vec<SpectralField>> = (0..d)
        .map(|j| (0..d).map(|k| fol.nabla_bar_vector(&w, j, k)).collect())
        .collect();
    (0..d)
        .map(|k| {
            let mut acc = SpectralField::zeros(v[0].grid().clone());
            for i in 0..d {
                for j in 0..d {
                    let mut term = grad[j][k].derivative(i);
                    for l in 0..d {
                        term = term
                            .sub(&fol.gammabar_up[l][i][j].mul(&grad[l][k]))
                            .add(&fol.gammabar_up[k][i][l].mul(&grad[j][l]));
                    }
                    acc = acc.add(&fol.gbar_inv[i][j].mul(&term));
                }
            }
            acc
        })
        .collect()
}

pub(crate) fn sqrt_det_gbar(fol: &Foliation31) -> SpectralField {
    let d = fol.d;
    let grid = fol.grid.clone();
    let vals: Vec<Vec<&[f64]>> = fol
        .gbar
        .iter()
        .map(|row| row.iter().map(|f| f.values()).collect())
        .collect();
    let npts = grid.len();
    let mut out = vec![0.0; npts];
    for (p, o) in out.iter_mut().enumerate() {
        let det = match d {
            1 => vals[0][0][p],
            2 => vals[0][0][p] * vals[1][1][p] - vals[0][1][p] * vals[1][0][p],
            _ => {
                let m = |i: usize, j: usize| vals[i][j][p];
                m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                    - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                    + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
            }
        };
        *o = det.sqrt();
    }
    SpectralField::from_values(grid, out)
}

/// `⨍_{(·,ḡ)} f` — the ḡ-volume-weighted average.
pub fn weighted_mean(fol: &Foliation31, f: &SpectralField) -> f64 {
    let s = sqrt_det_gbar(fol);
    f.mul(&s).mean() / s.mean()
}

/// Residual report of the three conditions: per condition the max norm of
/// the residual field and of the mean constraint.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BalancedResiduals {
    pub lapse: f64,
    pub lapse_mean: f64,
    pub shift: f64,
    pub shift_mean: f64,
    pub frame: f64,
    pub frame_mean: f64,
}

impl BalancedResiduals {
    pub fn total(&self) -> f64 {
        self.lapse + self.lapse_mean + self.shift + self.shift_mean + self.frame + self.frame_mean
    }
}

/// Evaluate the three balanced-gauge conditions as residual fields:
///
/// 1. `tr_ḡ h − Δ_ḡ|D|^{−1}(N−1) + N^{−1} ḡ^{ij} F̃♮_{ij} − ⨍_ḡ(tr_ḡ h + N^{−1} ḡ^{ij} F̃♮_{ij})`
///    together with `⨍ N − 1`;
/// 2. `ḡ^{ij} Γ̄^k_{ij} + Δ_ḡ|D|^{−1} β^k` together with `⨍ β^k`;
/// 3. `δ_ḡ ω^Ā_{B̄} + Δ_ḡ|D|^{−1} ω^Ā_{0B̄} − (m(e)_{B̄C̄} F̃⊥^{ĀC̄} − ⨍_ḡ(…))`
///    together with `⨍ ω^Ā_{0B̄}`.
pub fn balanced_residuals(
    snap: &GeometrySnapshot,
    fol: &Foliation31,
    fnat_tilde: &[Vec<SpectralField>],
    fperp_tilde: &[Vec<SpectralField>],
) -> BalancedResiduals {
    let d = fol.d;
    let cd = snap.codim;

    // ---- lapse condition ----
    let trace = fol.mean_curvature();
    let n_minus_one = fol.lapse.map(|v| v - 1.0);
    let source = {
        let mut acc = SpectralField::zeros(fol.grid.clone());
        for i in 0..d {
            for j in 0..d {
                acc = acc.add(&fol.gbar_inv[i][j].mul(&fnat_tilde[i + 1][j + 1]));
            }
        }
        acc.zip(&fol.lapse, |a, n| a / n)
    };
    let combo = trace.add(&source);
    let mean = weighted_mean(fol, &combo);
    let lapse_res = combo
        .sub(&laplace_absd_inv_scalar(fol, &n_minus_one.mean_free()))
        .map(move |v| v - mean);
    let lapse_mean = (fol.lapse.mean() - 1.0).abs();

    // ---- harmonic condition ----
    let lap_beta = laplace_absd_inv_vector(fol, &fol.shift);
    let mut shift_res = 0.0f64;
    let mut shift_mean = 0.0f64;
    for kk in 0..d {
        let mut contracted = SpectralField::zeros(fol.grid.clone());
        for i in 0..d {
            for j in 0..d {
                contracted = contracted.add(&fol.gbar_inv[i][j].mul(&fol.gammabar_up[kk][i][j]));
            }
        }
        shift_res = shift_res.max(contracted.add(&lap_beta[kk]).max_abs());
        shift_mean = shift_mean.max(fol.shift[kk].mean().abs());
    }

    // ---- frame condition ----
    let mut frame_res = 0.0f64;
    let mut frame_mean = 0.0f64;
    for abar in 0..cd {
        for bbar in 0..cd {
            // δ_ḡ ω: covariant divergence of the spatial 1-form
            let omega_form: Vec<SpectralField> =
                (0..d).map(|i| snap.omega[i + 1][abar][bbar].clone()).collect();
            let mut div = SpectralField::zeros(fol.grid.clone());
            for i in 0..d {
                for j in 0..d {
                    div = div.add(&fol.gbar_inv[i][j].mul(&fol.nabla_bar_oneform(&omega_form, i, j)));
                }
            }
            let omega0 = &snap.omega[0][abar][bbar];
            let parab = laplace_absd_inv_scalar(fol, &omega0.mean_free());
            let mut rhs = SpectralField::zeros(fol.grid.clone());
            for cbar in 0..cd {
                rhs = rhs.add(&snap.gram[bbar][cbar].mul(&fperp_tilde[abar][cbar]));
            }
            let rhs_mean = weighted_mean(fol, &rhs);
            let res = div.add(&parab).sub(&rhs).map(move |v| v + rhs_mean);
            frame_res = frame_res.max(res.max_abs());
            frame_mean = frame_mean.max(omega0.mean().abs());
        }
    }

    BalancedResiduals {
        lapse: lapse_res.max_abs(),
        lapse_mean,
        shift: shift_res,
        shift_mean,
        frame: frame_res,
        frame_mean,
    }
}

/// Slice metric assembled from a foliation (for the perturbative solver).
pub fn fol_metric(fol: &Foliation31) -> crate::error::Result<SliceMetric> {
    SliceMetric::from_components(fol.gbar.clone())
}
