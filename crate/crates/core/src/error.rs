use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::dynamics::Trajectory;

/// Errors produced by the numerical engine.
#[derive(Debug, Clone)]
pub enum Error {
    InvalidParameter(String),
    /// Step size fell below the representable minimum; carries what was
    /// integrated up to that point.
    IntegrationFailure {
        time: f64,
        partial: Option<Box<Trajectory>>,
    },
    InsufficientData(String),
    UnsupportedRange(String),
    NoSteadyState(String),
    InstabilityDomain { g_sq: f64, bound: f64 },
    HeatingRegime { net_damping: f64 },
    Numeric(String),
    UnsupportedConfiguration(String),
    TruncationViolation { mode: Mode, population: f64 },
}

/// Which bosonic mode an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Optical,
    Mechanical,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Optical => f.write_str("optical"),
            Mode::Mechanical => f.write_str("mechanical"),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::IntegrationFailure { time, .. } => {
                write!(f, "integration failed: step size underflow at t = {time}")
            }
            Error::InsufficientData(msg) => write!(f, "insufficient data: {msg}"),
            Error::UnsupportedRange(msg) => write!(f, "unsupported range: {msg}"),
            Error::NoSteadyState(msg) => write!(f, "no steady state: {msg}"),
            Error::InstabilityDomain { g_sq, bound } => write!(
                f,
                "outside the stable domain: |G|^2 = {g_sq} >= {bound}"
            ),
            Error::HeatingRegime { net_damping } => write!(
                f,
                "heating regime: net damping {net_damping} is not positive"
            ),
            Error::Numeric(msg) => write!(f, "numeric failure: {msg}"),
            Error::UnsupportedConfiguration(msg) => {
                write!(f, "unsupported configuration: {msg}")
            }
            Error::TruncationViolation { mode, population } => write!(
                f,
                "Fock truncation violated in the {mode} mode: top-level population {population:e}"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
