//! Periodic pseudospectral layer: torus grids with period `2π` per axis,
//! real fields with lazily cached Fourier coefficients, dyadic cutoff
//! profiles, multiplier operators and the trilinear/extension operators.
//!
//! Conventions fixed once for the whole crate:
//!
//! * period `2π` per axis, so the coordinate derivative `∂_j` acts on
//!   coefficients as multiplication by `i ξ_j` with integer `ξ_j`;
//! * Fourier coefficients are the interpolation coefficients
//!   `f(x) = Σ_ξ f̂(ξ) e^{i⟨x,ξ⟩}`;
//! * spatial `L^q` norms use the normalized measure (`‖1‖_{L^q} = 1`), so
//!   Parseval reads `‖f‖_{L²}² = Σ_ξ |f̂(ξ)|²`;
//! * all fields are real-valued; multiplier symbols are chosen so that
//!   realness is preserved exactly (odd symbols carry the factor `i` of an
//!   honest derivative).

mod grid;
mod field;
mod bump;
mod multiplier;
mod paraproduct;

pub use grid::TorusGrid;
pub use field::{SpectralField, TimeSeries};
pub use bump::{smoothstep, smoothstep_d1, smoothstep_d2, phi_lp, phi_tilde, chi_tilde, psi_time,
               psi_time_d1, psi_time_d2};
pub use multiplier::{FractionalKind, MultiplierBank};
pub use paraproduct::{extend_at_times, extend_time_derivative, extend_to_time_grid, hl_decompose,
                      lhh_project, lhh_project_ranged};
