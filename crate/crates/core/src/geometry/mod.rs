//! Extrinsic geometry of immersions into Minkowski space and the 3+1
//! decomposition of spacelike foliations.

pub mod stencil;
mod analytic;
mod immersion;
mod frame;
mod snapshot;
mod foliation;

pub use analytic::{AnalyticImmersion, Mode};
pub use immersion::{Immersion, ImmersionHistory, MinkowskiTarget};
pub use frame::{frame_from_reference, FrameHistory, NormalFrame};
pub use snapshot::{GeometrySnapshot, SnapshotStencil};
pub use foliation::{variation_residuals, Foliation31, VariationResiduals};

#[cfg(test)]
mod tests;
