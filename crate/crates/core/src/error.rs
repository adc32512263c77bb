use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the numerical modules can report.
///
/// The variant name (see [`Error::kind`]) is the machine-readable tag the CLI
/// writes into its error JSON.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate denominator: {0} vanishes")]
    DegenerateDenominator(&'static str),
    #[error("negative argument {value} passed to {what}")]
    NegativeArgument { what: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("weight exponent {0} is not integrable at the origin (needs > -1)")]
    NonIntegrableWeight(f64),
    #[error("radius {r} outside [{lo}, {hi}]")]
    OutOfDomain { r: f64, lo: f64, hi: f64 },
    #[error("outer integrand is not integrable at r = 0 (beta - alpha + m = {0} <= 0)")]
    OriginSingularity(f64),
    #[error("profile has no derivative channel and only {0} cells (need >= 32)")]
    MissingDerivative(usize),
    #[error("series startup impossible: beta - alpha + 1 = {0} <= 0")]
    StartupFailure(f64),
    #[error("step size underflow at r = {0}")]
    StepFailure(f64),
    #[error("u never reaches 1/d = {level} before r_max = {r_max}")]
    NoCrossing { level: f64, r_max: f64 },
    #[error("profile is not positive on the requested window (u({r}) = {u})")]
    PositivityViolated { r: f64, u: f64 },
    #[error("sigma = {sigma} outside ({lo}, {hi}]")]
    SigmaOutOfRange { sigma: f64, lo: f64, hi: f64 },
    #[error("gamma = {gamma} must lie in [0, m - 1 = {limit})")]
    GammaOutOfRange { gamma: f64, limit: f64 },
    #[error("u(s0) = {found} differs from 1/d = {expected}")]
    ThresholdMismatch { expected: f64, found: f64 },
    #[error("profile is identically zero")]
    TrivialProfile,
    #[error("scan grid incomplete: expected {expected} cells, got {found}")]
    IncompleteGrid { expected: usize, found: usize },
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateDenominator(_) => "DegenerateDenominator",
            Error::NegativeArgument { .. } => "NegativeArgument",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::BadGrid(_) => "BadGrid",
            Error::NonIntegrableWeight(_) => "NonIntegrableWeight",
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::OriginSingularity(_) => "OriginSingularity",
            Error::MissingDerivative(_) => "MissingDerivative",
            Error::StartupFailure(_) => "StartupFailure",
            Error::StepFailure(_) => "StepFailure",
            Error::NoCrossing { .. } => "NoCrossing",
            Error::PositivityViolated { .. } => "PositivityViolated",
            Error::SigmaOutOfRange { .. } => "SigmaOutOfRange",
            Error::GammaOutOfRange { .. } => "GammaOutOfRange",
            Error::ThresholdMismatch { .. } => "ThresholdMismatch",
            Error::TrivialProfile => "TrivialProfile",
            Error::IncompleteGrid { .. } => "IncompleteGrid",
        }
    }
}
