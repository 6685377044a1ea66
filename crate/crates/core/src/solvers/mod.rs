//! Model parabolic and elliptic solvers backing the gauge machinery.

mod halfheat;
mod elliptic;

pub use halfheat::HalfHeatSolver;
pub use elliptic::{
    apply_vector_laplacian, solve_elliptic_perturbative, solve_vector_laplacian, EllipticKind,
    SliceMetric, ELLIPTIC_SMALLNESS_C0,
};
