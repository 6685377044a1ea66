//! Mixed space-time norms, Besov norms, the bootstrap quantities and the
//! data-size functional, plus measured-constant checks for the model
//! functional inequalities.

mod constants;
mod mixed;
mod besov;
mod bootstrap;
mod inequalities;

pub use constants::SmallConstants;
pub use mixed::{mixed_norm, sobolev_norm, MixedExponents};
pub use besov::besov_norm;
pub use bootstrap::{bootstrap_quantities, data_size, NormEntry, NormReport, RunArtifacts};
pub use inequalities::{functional_inequality_ratios, InequalityRanges, InequalityReport};

#[cfg(test)]
mod tests;
