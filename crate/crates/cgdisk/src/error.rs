use crate::C64;

/// Errors raised by grid construction, operators, norms and solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("disk radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("n_r = {0} is below the minimum of 4 radial cells")]
    TooFewRadialCells(usize),
    #[error("n_t = {0} is below the minimum of 8 angular cells")]
    TooFewAngularCells(usize),
    #[error("n_t = {0} must be even")]
    OddAngularCount(usize),
    #[error("evaluator failed at z = {z}: {reason}")]
    Evaluator { z: C64, reason: String },
    #[error("field arrays do not match the grid: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("boundary quadrature rejected at z = {z}: |z| exceeds {limit}")]
    NearBoundary { z: C64, limit: f64 },
    #[error("jet stack has {got} levels, {needed} required")]
    MissingJetLevel { needed: usize, got: usize },
    #[error("derivative order (k, l) = ({k}, {l}) exceeds the composite order {m}")]
    OrderTooHigh { k: usize, l: usize, m: usize },
    #[error("operator word leaves {pending} pending derivative(s) on the innermost argument")]
    PendingDerivative { pending: usize },
    #[error("Hölder exponent must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("level {level} exceeds jet depth {depth}")]
    LevelExceedsDepth { level: usize, depth: usize },
    #[error("iterate escaped envelope at node z = {z}: {what}")]
    EnvelopeEscape { z: C64, what: String },
    #[error("sample outside the domain box: {0}")]
    OutsideDomain(String),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid jet specification: {0}")]
    InvalidJetSpec(String),
    #[error("holomorphic defect {defect:e} exceeds {limit:e}")]
    HolomorphicDefect { defect: f64, limit: f64 },
    #[error("metric is singular or ill-conditioned at w = {w:?} (condition number {cond:e})")]
    SingularMetric { w: Vec<f64>, cond: f64 },
    #[error("chart table: {0}")]
    ChartTable(String),
    #[error("unknown builtin system `{0}`")]
    UnknownSystem(String),
    #[error("no converged disk at the smallest ladder radius {0}")]
    NoCertifiedDisk(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
