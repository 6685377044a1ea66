//! Pseudospectral simulation and verification toolkit for the Lorentzian
//! timelike minimal surface equation in parametric form.
//!
//! The crate is organized around a small number of layers:
//!
//! * [`spectral`] — periodic grids with period `2π` per axis, Fourier
//!   transforms, dyadic Littlewood–Paley projections and the special
//!   multiplier operators (frequency-localized inverse divergences, the
//!   low-high-high trilinear projector, the slice extension operator).
//! * [`geometry`] — the extrinsic geometry stack of an immersion into
//!   Minkowski space: induced metric, Christoffel symbols, second
//!   fundamental form, normal connection, curvature tensors, the 3+1
//!   decomposition of a spacelike foliation, and residual evaluation of the
//!   Gauss/Codazzi/Ricci identities.
//! * [`solvers`] — the model half-heat (exponential integrator) and
//!   perturbation-of-flat elliptic solvers used by the gauge machinery.
//! * [`gauge`] — balanced-gauge sources and residuals, the derived
//!   parabolic-elliptic equations, and the gauge-fixing flow that transforms
//!   an immersion into (approximate) balanced gauge.
//! * [`evolution`] — method-of-lines integration of the scalar graph
//!   equation and of the parametric system, initial data construction, and
//!   the wave-equation residual for the second fundamental form.
//! * [`norms`] — mixed space-time norms, Besov norms, the bootstrap
//!   quantities and measured functional-inequality constants.
//! * [`io`] — flat binary field blocks with JSON sidecars for snapshots and
//!   checkpoints.
//!
//! Fields are immutable after construction and all operations are pure
//! functions; reductions run in a fixed deterministic order so results do
//! not depend on call that order or thread count.

pub mod error;
pub mod linalg;
pub mod spectral;
pub mod geometry;
pub mod solvers;
pub mod gauge;
pub mod evolution;
pub mod norms;
pub mod io;

pub use error::CoreError;
pub use spectral::{SpectralField, TorusGrid};
