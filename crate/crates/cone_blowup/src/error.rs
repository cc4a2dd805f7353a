use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("step size underflow at x = {x:e} (h = {h:e})")]
    StepUnderflow { x: f64, h: f64 },
    #[error("singular endpoint: {0}")]
    SingularEndpoint(String),
    #[error("ill-conditioned fit: condition number {cond:e} exceeds bound {bound:e}")]
    IllConditioned { cond: f64, bound: f64 },
    #[error("too few nodes: need {need}, got {got}")]
    TooFewNodes { need: usize, got: usize },
    #[error("curves are sampled on different grids")]
    GridMismatch,
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("missing layer {0}")]
    MissingLayer(usize),
    #[error("singular matching system for order {0}")]
    SingularMatchingSystem(usize),
    #[error("insufficient smoothness: {0}")]
    InsufficientSmoothness(String),
    #[error("missing tail coefficient d[{n},{k},{l}]")]
    MissingTailCoefficient { n: i32, k: usize, l: usize },
    #[error("division near zero: {0}")]
    DivisionNearZero(String),
    #[error("cutoff regions do not overlap: {0}")]
    RegionGap(String),
    #[error("hyperbolicity lost at t = {t}, rho = {rho}: 1 + u_rho^2 - u_t^2 = {value:e}")]
    HyperbolicityLoss { t: f64, rho: f64, value: f64 },
    #[error("positivity lost at t = {t}, rho = {rho}: u = {value:e}")]
    PositivityLoss { t: f64, rho: f64, value: f64 },
    #[error("CFL violation at t = {t}: Courant number {courant} exceeds {limit}")]
    CflViolation { t: f64, courant: f64, limit: f64 },
    #[error("non-positive u at rho = {rho}")]
    NonPositiveU { rho: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
