use thiserror::Error;

/// Failures raised by chart evaluation, integration, shooting and the
/// certification routines built on top of them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("point {0:?} lies outside the chart domain")]
    OutOfDomain(Vec<f64>),
    #[error("finite-difference stencil around {0:?} leaves the chart domain")]
    StencilExitsDomain(Vec<f64>),
    #[error("degenerate plane section (|Q| = {0:e})")]
    DegeneratePlane(f64),
    #[error("geodesic left the chart domain at t = {t_exit}")]
    LeftDomain { t_exit: f64 },
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),
    #[error("Newton shooting did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("shooting Jacobian is singular (condition number {condition:e})")]
    SingularJacobian { condition: f64 },
    #[error("initial velocity of norm {norm} exceeds the star region radius {radius}")]
    OutsideRegion { norm: f64, radius: f64 },
    #[error("stencil geodesic left the comparison region")]
    DomainTooTight,
    #[error("conjugate point along the arc near t = {t}")]
    ConjugatePoint { t: f64 },
    #[error("sampler starved: {accepted} accepted out of {attempts} attempts")]
    SamplerStarved { accepted: usize, attempts: usize },
    #[error("sampler exhausted after {0} samples")]
    SamplerExhausted(usize),
    #[error("grid point {0} lies outside the warping interval")]
    GridExitsInterval(f64),
    #[error("model energy is beyond the principal branch (K f = {kf})")]
    BranchAmbiguity { kf: f64 },
    #[error("no model surface realizes the side energies {0:?}")]
    NotRealizable([f64; 3]),
    #[error("degenerate triangle (Gram determinant {0:e})")]
    DegenerateTriangle(f64),
    #[error("induced metric is not positive definite (min eigenvalue {0:e})")]
    SpacelikeViolation(f64),
    #[error("unknown chart id `{0}`")]
    UnknownChart(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = GeomError> = std::result::Result<T, E>;
