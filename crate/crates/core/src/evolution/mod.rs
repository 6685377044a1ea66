//! Time integration of the minimal-surface problem in both formulations.
//!
//! The scalar graph equation is integrated directly; the parametric system
//! is closed with the full wave gauge `g^{αβ}(∂Y) ∂_α∂_β Y^A = 0`, whose
//! normal projection is the minimal surface equation and whose tangential
//! part fixes the reparametrization freedom. The balanced gauge is reached
//! afterwards by the gauge-fixing flow, not during evolution.

mod scalar;
mod parametric;
mod data;
mod lift;
mod kwave;

pub use scalar::{scalar_rhs, ScalarRun, ScalarState};
pub use parametric::{parametric_jet3, parametric_rhs, ParametricState};
pub use data::{initial_data_from_pair, InitialData, InitialDataReport};
pub use lift::lift_graph;
pub use kwave::k_wave_residual;


use crate::error::{CoreError, Result};

/// CFL guard shared by both steppers: `dt ≤ cfl · dx / c_max`.
pub(crate) fn check_cfl(dt: f64, dx: f64, c_max: f64, cfl: f64) -> Result<()> {
    let limit = cfl * dx / c_max.max(1e-12);
    if dt > limit {
        return Err(CoreError::CflViolated { dt, limit });
    }
    Ok(())
}

#[cfg(test)]
mod tests;
