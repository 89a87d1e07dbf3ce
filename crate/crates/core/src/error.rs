use thiserror::Error;

/// Errors raised by the analysis modules.
///
/// Variants carry enough context to tell a caller which constraint failed; the
/// CLI maps them onto exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid slopes: {0}")]
    InvalidSlopes(String),
    #[error("parameter interval [{lo}, {hi}] is empty or degenerate")]
    EmptyParameterInterval { lo: f64, hi: f64 },
    #[error("branch is not monotone: {0}")]
    NonMonotoneBranch(String),
    #[error("base map has too few pieces: {0}")]
    InsufficientPieces(String),
    #[error("invalid family specification: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parameter {a} outside [{lo}, {hi}]")]
    ParamOutOfRange { a: f64, lo: f64, hi: f64 },
    #[error("point {x} outside the domain [{lo}, {hi}]")]
    DomainViolation { x: f64, lo: f64, hi: f64 },
    #[error("point {x} is a breakpoint; query a one-sided neighbour instead")]
    AtBreakpoint { x: f64 },
    #[error("orbit hits a breakpoint at step {step}")]
    HitsBreakpoint { step: usize },
    #[error("cylinder count exceeds the cap of {cap} at depth {depth}")]
    DepthTooLarge { depth: usize, cap: usize },
    #[error("{unmatched} cylinder(s) of depth {depth} have no same-word partner")]
    UnmatchedCylinder { depth: usize, unmatched: usize },
    #[error("orbit left the invariant interval at step {step} (x = {x})")]
    DomainEscape { step: usize, x: f64 },
    #[error("combinatorics change inside the difference stencil at step {step}")]
    CylinderCrossing { step: usize },
    #[error("family is not unimodal")]
    NotUnimodal,
    #[error("turning point orbit hits the turning point at step {step}")]
    TurningPointHit { step: usize },
    #[error("need at least 2 bins, got {0}")]
    BinsTooSmall(usize),
    #[error("power iteration did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("expansion too weak: lambda^tau = {0} <= 3")]
    ExpansionTooWeak(f64),
    #[error("support estimates disagree: density {density:?} vs orbit closure {orbit:?}")]
    SupportMismatch {
        density: (f64, f64),
        orbit: (f64, f64),
    },
    #[error("empty orbit after burn-in")]
    EmptyOrbit,
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
