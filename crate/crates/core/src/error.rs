use thiserror::Error;

use crate::ephemeris::Planet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the trajectory and search machinery can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Kepler solver did not converge for {body} at MJD {epoch}")]
    KeplerNonConvergence { body: Planet, epoch: f64 },

    #[error("epoch MJD {0} outside the supported range [0, 200000]")]
    EpochOutOfRange(f64),

    #[error("body {0} is not part of the loaded planet set")]
    UnknownBody(Planet),

    #[error("degenerate state: {0}")]
    DegenerateFrame(&'static str),

    #[error("singular radius (r = 0) in cylindrical conversion")]
    SingularRadius,

    #[error("shaping system for the {axis} axis is singular (condition {condition:e})")]
    ShapingSingular { axis: &'static str, condition: f64 },

    #[error("no shaping solution: {0}")]
    NoSolution(&'static str),

    #[error("time {t} s outside leg span [0, {tof}] s")]
    TimeOutOfRange { t: f64, tof: f64 },

    #[error("trajectory passes within {radius_au:.4} AU of the central body")]
    NearSingularity { radius_au: f64 },

    #[error("unsupported free parameter count {0} (expected 0, 1 or 2)")]
    UnsupportedFreeCount(usize),

    #[error("deflection undefined for zero hyperbolic excess speed")]
    UndefinedDeflection,

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("decision vector has {got} genes, layout expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("complexity overflows for m = {m}, n = {n}")]
    ComplexityOverflow { m: u64, n: u32 },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("elements file: {0}")]
    Elements(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
