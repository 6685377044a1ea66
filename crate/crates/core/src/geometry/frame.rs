//! Normal frames for the immersion, and the near-flat reference
//! construction.

use crate::error::{CoreError, Result};
use crate::linalg::SmallMat;
use crate::spectral::SpectralField;

use super::immersion::ImmersionHistory;

/// A frame `{e_Ā}` for the normal bundle on one slice: `e[abar][A]` are the
/// ambient Cartesian components. Frames need not be orthonormal; the Gram
/// matrix `m(e_Ā, e_B̄)` only has to stay invertible.
#[derive(Clone, Debug)]
pub struct NormalFrame {
    pub e: Vec<Vec<SpectralField>>,
}

impl NormalFrame {
    pub fn codim(&self) -> usize {
        self.e.len()
    }

    /// Constant reference frame `e_Ā = δ_Ā` (unit vectors along the extra
    /// target directions).
    pub fn reference(history: &ImmersionHistory) -> NormalFrame {
        let grid = &history.grid;
        let na = history.target.ambient_dim;
        let d = grid.dim;
        let e = (0..history.codim)
            .map(|abar| {
                (0..na)
                    .map(|a| {
                        if a == d + 1 + abar {
                            SpectralField::constant(grid.clone(), 1.0)
                        } else {
                            SpectralField::zeros(grid.clone())
                        }
                    })
                    .collect()
            })
            .collect();
        NormalFrame { e }
    }
}

/// Build the near-flat normal frame on slice `s` by projecting the constant
/// reference vectors off the tangent space:
/// `e_Ā = δ_Ā + m(δ_Ā, n̂) n̂ − ḡ^{ij} m(δ_Ā, ∂_i Y) ∂_j Y`,
/// with `n̂` the unit timelike normal of the slice inside the surface.
///
/// (The sign of the `n̂` term is the one that actually achieves
/// `m(e_Ā, n̂) = 0` for a timelike `n̂`.)
///
/// Errors when the construction degenerates (Gram matrix of the produced
/// frame near-singular), which happens away from the near-flat regime.
pub fn frame_from_reference(history: &ImmersionHistory, s: usize) -> Result<NormalFrame> {
    let grid = history.grid.clone();
    let target = history.target;
    let na = target.ambient_dim;
    let d = grid.dim;
    let codim = history.codim;
    let npts = grid.len();

    // gather pointwise values of ∂_α Y
    let dy0: Vec<&[f64]> = (0..na).map(|a| history.slice(s).dy0[a].values()).collect();
    let dysp: Vec<Vec<SpectralField>> = (0..d)
        .map(|i| (0..na).map(|a| history.dy_spatial(s, i, a)).collect())
        .collect();
    let dysp_vals: Vec<Vec<&[f64]>> =
        dysp.iter().map(|row| row.iter().map(|f| f.values()).collect()).collect();

    let mut e_vals: Vec<Vec<Vec<f64>>> =
        vec![vec![vec![0.0; npts]; na]; codim];

    let mut tang = vec![vec![0.0; na]; d + 1];
    for p in 0..npts {
        for a in 0..na {
            tang[0][a] = dy0[a][p];
            for i in 0..d {
                tang[i + 1][a] = dysp_vals[i][a][p];
            }
        }
        // spatial Gram ḡ_ij and inverse
        let mut gbar = SmallMat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                gbar.set(i, j, target.inner(&tang[i + 1], &tang[j + 1]));
            }
        }
        let gbar_inv = gbar
            .inverse()
            .ok_or(CoreError::FrameDegenerate { point: p, det: gbar.det() })?;
        // unit timelike normal of the slice inside the surface:
        // n_raw = ∂₀Y − ḡ^{ij} m(∂₀Y, ∂_i Y) ∂_j Y
        let mut n_raw = tang[0].clone();
        for i in 0..d {
            let mi = target.inner(&tang[0], &tang[i + 1]);
            for j in 0..d {
                let c = gbar_inv.at(j, i) * mi;
                for a in 0..na {
                    n_raw[a] -= c * tang[j + 1][a];
                }
            }
        }
        let nn = target.inner(&n_raw, &n_raw);
        if nn >= 0.0 {
            return Err(CoreError::NonSpacelikeSlice { point: p });
        }
        let inv_norm = 1.0 / (-nn).sqrt();
        let nhat: Vec<f64> = n_raw.iter().map(|v| v * inv_norm).collect();

        for abar in 0..codim {
            let aa = d + 1 + abar;
            // delta_Ā has a single unit entry at component `aa`
            let mut e = vec![0.0; na];
            e[aa] = 1.0;
            // + m(δ, n̂) n̂
            let mdn = target.eta(aa) * nhat[aa];
            for a in 0..na {
                e[a] += mdn * nhat[a];
            }
            // − ḡ^{ij} m(δ, ∂_i Y) ∂_j Y
            for i in 0..d {
                let mdi = target.eta(aa) * tang[i + 1][aa];
                for j in 0..d {
                    let c = gbar_inv.at(j, i) * mdi;
                    for a in 0..na {
                        e[a] -= c * tang[j + 1][a];
                    }
                }
            }
            for a in 0..na {
                e_vals[abar][a][p] = e[a];
            }
        }
    }

    let e: Vec<Vec<SpectralField>> = e_vals
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|vals| SpectralField::from_values(grid.clone(), vals))
                .collect()
        })
        .collect();
    let frame = NormalFrame { e };
    check_gram(history, s, &frame)?;
    Ok(frame)
}

/// Reject frames whose Gram matrix degenerates anywhere on the slice.
fn check_gram(history: &ImmersionHistory, _s: usize, frame: &NormalFrame) -> Result<()> {
    let target = history.target;
    let codim = frame.codim();
    let na = target.ambient_dim;
    let npts = history.grid.len();
    let vals: Vec<Vec<&[f64]>> = frame
        .e
        .iter()
        .map(|row| row.iter().map(|f| f.values()).collect())
        .collect();
    let mut u = vec![0.0; na];
    let mut v = vec![0.0; na];
    for p in 0..npts {
        let mut gram = SmallMat::zeros(codim);
        for i in 0..codim {
            for j in 0..codim {
                for a in 0..na {
                    u[a] = vals[i][a][p];
                    v[a] = vals[j][a][p];
                }
                gram.set(i, j, target.inner(&u, &v));
            }
        }
        let det = gram.det();
        if det.abs() < 1e-8 {
            return Err(CoreError::FrameDegenerate { point: p, det });
        }
    }
    Ok(())
}

/// Frame history matching the immersion history slice for slice.
#[derive(Clone, Debug)]
pub struct FrameHistory {
    pub slices: Vec<NormalFrame>,
}

impl FrameHistory {
    /// Slice-wise reference construction over the whole history.
    pub fn from_reference(history: &ImmersionHistory) -> Result<Self> {
        let slices = (0..history.len())
            .map(|s| frame_from_reference(history, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(FrameHistory { slices })
    }

    /// The constant frame `δ_Ā` on every slice.
    pub fn constant_reference(history: &ImmersionHistory) -> Self {
        let f = NormalFrame::reference(history);
        FrameHistory { slices: vec![f; history.len()] }
    }
}
