use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vector norm drifted from 1 by {0:.3e}")]
    NormDrift(f64),

    #[error("zero-length vector cannot be normalized")]
    ZeroVector,

    #[error("skew generator does not satisfy S^3 = -S (residual {0:.3e})")]
    MalformedGenerator(f64),

    #[error("jacobi eigensolver did not converge after {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("basic potential assumption violated: {0}")]
    Assumption(String),

    #[error("gain k = {0} outside the open interval (0, pi/4)")]
    InvalidGain(f64),

    #[error("delta fraction {0} outside the open interval (0, 1)")]
    InvalidFraction(f64),

    #[error("warp angle bound {0} outside the open interval (0, pi/4)")]
    InvalidAngleBound(f64),

    #[error("index q = {q} not in 1..={max}")]
    InvalidIndex { q: usize, max: usize },

    #[error("fixed-point bisection did not converge in {0} steps")]
    RootFinder(usize),

    #[error("zeno cap of {cap} consecutive jumps exceeded at t = {t}")]
    ZenoCap { cap: usize, t: f64 },

    #[error("projection drift {drift:.3e} exceeds tolerance at t = {t}")]
    ProjectionDrift { drift: f64, t: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("reference profile exceeds bound {bound} at t = {t} ({which} = {value})")]
    ReferenceBound {
        which: &'static str,
        bound: f64,
        value: f64,
        t: f64,
    },

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("arcs do not share a time grid: {0}")]
    GridMismatch(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
