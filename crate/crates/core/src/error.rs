use thiserror::Error;

/// Errors surfaced by the toolkit.
///
/// Numerical breakdowns carry enough context to name the violated
/// precondition; callers in the harness map these onto exit codes.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dyadic index {j} outside resolvable range 0..={jmax} for this grid")]
    DyadicRange { j: usize, jmax: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{op}: negative power of |D| applied to a field with nonzero mean (|mean| = {mean:.3e})")]
    NonzeroMean { op: &'static str, mean: f64 },

    #[error("induced metric is not Lorentzian at grid point {point}: det g = {det:.3e}")]
    DegenerateSurface { point: usize, det: f64 },

    #[error("normal frame Gram matrix near-singular at grid point {point} (|det| = {det:.3e})")]
    FrameDegenerate { point: usize, det: f64 },

    #[error("slice x0 = const is not spacelike at grid point {point}")]
    NonSpacelikeSlice { point: usize },

    #[error("time stencil needs {needed} stored slices, only {available} available")]
    StencilDepth { needed: usize, available: usize },

    #[error("elliptic fixed point is not contracting (residual ratio {ratio:.3} over 3 iterations); smallness condition violated")]
    SmallnessViolated { ratio: f64 },

    #[error("elliptic fixed point failed to reach tol {tol:.3e} in {iters} iterations (residual {residual:.3e})")]
    EllipticNoConvergence { tol: f64, iters: usize, residual: f64 },

    #[error("timelike margin non-positive at grid point {point}: 1 + Q = {margin:.3e}")]
    TimelikeBreakdown { point: usize, margin: f64 },

    #[error("|g^00| below threshold at grid point {point}: {value:.3e}")]
    DegenerateG00 { point: usize, value: f64 },

    #[error("NaN/Inf detected in {context}")]
    NonFinite { context: String },

    #[error("initial data constraint violated: {0}")]
    DataConstraint(String),

    #[error("CFL violated: dt = {dt:.3e} exceeds limit {limit:.3e}")]
    CflViolated { dt: f64, limit: f64 },

    #[error("gauge flow aborted at flow time {t:.4}: {reason}")]
    FlowAborted { t: f64, reason: String },

    #[error("exponent outside the lemma range: {0}")]
    ExponentRange(String),

    #[error("requested data size unreachable on this grid: {0}")]
    DataGeneration(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("sidecar: {0}")]
    Sidecar(#[from] serde_json::Error),

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
