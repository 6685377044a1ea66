//! Balanced-gauge machinery: the trilinear sources and their
//! extension-subtracted versions, the low-high-high curvature parts, the
//! residuals of the three balanced-gauge conditions, the exact derived
//! parabolic-elliptic equations, the frequency-projected divergence checks
//! and the gauge-fixing flow.

mod sources;
mod balanced;
mod derived;
mod wedge;
mod background;
mod flow;

pub use sources::{f_natural, f_perp, lhh_curvature, GaugeSources, LhhCurvature};
pub use balanced::{balanced_residuals, laplace_absd_inv_scalar, laplace_absd_inv_vector,
                   BalancedResiduals};
pub use derived::{derived_gauge_equation_residuals, gbar_elliptic_identity_residual,
                  h_elliptic_identity_residual, omega_elliptic_identity_residual,
                  shift_identity_residual, DerivedEquationResiduals};
pub use wedge::{lhh_swap_cancellation, wedge_divergence_check, WedgeCheck};
pub use background::Background;
pub use flow::{read_checkpoint, resume_gauge_flow, run_gauge_flow, transformed_history,
              write_checkpoint, FlowConfig, FlowState, GaugeFlowOutput};

use crate::error::Result;
use crate::geometry::{Foliation31, FrameHistory, GeometrySnapshot, ImmersionHistory};
use crate::spectral::SpectralField;

/// Snapshots, foliations and gauge sources assembled over a stored history:
/// the shared substrate of the residual evaluations.
pub struct GaugeHistory<'a> {
    pub hist: &'a ImmersionHistory,
    pub frames: &'a FrameHistory,
    pub snaps: Vec<GeometrySnapshot>,
    pub fols: Vec<Foliation31>,
    /// `F♮_{αβ}` per slice: `fnat[s][α][β]`
    pub fnat: Vec<Vec<Vec<SpectralField>>>,
    /// `F̃♮ = F♮ − 𝔼[F♮|₀]`
    pub fnat_tilde: Vec<Vec<Vec<SpectralField>>>,
    /// `F⊥^{ĀB̄}` per slice: `fperp[s][abar][bbar]`
    pub fperp: Vec<Vec<Vec<SpectralField>>>,
    pub fperp_tilde: Vec<Vec<Vec<SpectralField>>>,
}

impl<'a> GaugeHistory<'a> {
    pub fn build(hist: &'a ImmersionHistory, frames: &'a FrameHistory) -> Result<Self> {
        Self::build_window(hist, frames, 0, hist.len())
    }

    /// Assemble only the slices `start..start+len` (the initial-slice
    /// sources for the 𝔼-subtraction are computed regardless). Slice
    /// indices on the result are window-relative.
    pub fn build_window(
        hist: &'a ImmersionHistory,
        frames: &'a FrameHistory,
        start: usize,
        len: usize,
    ) -> Result<Self> {
        let end = (start + len).min(hist.len());
        let window: Vec<usize> = (start..end).collect();
        let snaps: Vec<GeometrySnapshot> = window
            .iter()
            .map(|&s| GeometrySnapshot::compute(hist, frames, s))
            .collect::<Result<Vec<_>>>()?;
        let fols: Vec<Foliation31> =
            snaps.iter().map(Foliation31::from_snapshot).collect::<Result<Vec<_>>>()?;
        let mut fnat = Vec::with_capacity(snaps.len());
        let mut fperp = Vec::with_capacity(snaps.len());
        for (snap, fol) in snaps.iter().zip(&fols) {
            let src = GaugeSources::compute(snap, fol);
            fnat.push(src.fnat);
            fperp.push(src.fperp);
        }
        // initial-slice sources (window may not contain slice 0)
        let (fnat0, fperp0) = if start == 0 {
            (fnat[0].clone(), fperp[0].clone())
        } else {
            let snap0 = GeometrySnapshot::compute(hist, frames, 0)?;
            let fol0 = Foliation31::from_snapshot(&snap0)?;
            let src0 = GaugeSources::compute(&snap0, &fol0);
            (src0.fnat, src0.fperp)
        };
        // tilde versions subtract the extension of the initial slice
        let times: Vec<f64> = window.iter().map(|&s| hist.times[s]).collect();
        let dd = snaps[0].dd;
        let cd = snaps[0].codim;
        let mut fnat_tilde = fnat.clone();
        for al in 0..dd {
            for be in 0..dd {
                let ext = crate::spectral::extend_at_times(&fnat0[al][be], &times);
                for (s, e) in ext.iter().enumerate() {
                    fnat_tilde[s][al][be] = fnat[s][al][be].sub(e);
                }
            }
        }
        let mut fperp_tilde = fperp.clone();
        for i in 0..cd {
            for j in 0..cd {
                let ext = crate::spectral::extend_at_times(&fperp0[i][j], &times);
                for (s, e) in ext.iter().enumerate() {
                    fperp_tilde[s][i][j] = fperp[s][i][j].sub(e);
                }
            }
        }
        Ok(GaugeHistory { hist, frames, snaps, fols, fnat, fnat_tilde, fperp, fperp_tilde })
    }
}

#[cfg(test)]
mod tests;
