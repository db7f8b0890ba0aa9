use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Reason a quantile forecast was refused at ingestion.
#[derive(Debug, Clone, PartialEq)]
pub enum Rejection {
    /// Equal quantile values at two adjacent levels.
    Atom { lower_level: f64, upper_level: f64 },
    /// Quantile values out of order at two adjacent levels.
    Crossing { lower_level: f64, upper_level: f64 },
    TooFewLevels(usize),
    /// Levels outside (0, 1), repeated, or not finite.
    InvalidLevels,
    NonFiniteValue,
    LengthMismatch,
}

impl Rejection {
    /// Short machine-readable code written to the rejected-record sidecar.
    pub fn code(&self) -> &'static str {
        match self {
            Rejection::Atom { .. } => "atom",
            Rejection::Crossing { .. } => "crossing",
            Rejection::TooFewLevels(_) => "too_few_levels",
            Rejection::InvalidLevels => "invalid_levels",
            Rejection::NonFiniteValue => "non_finite_value",
            Rejection::LengthMismatch => "length_mismatch",
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Atom {
                lower_level,
                upper_level,
            } => write!(f, "atom between levels {lower_level} and {upper_level}"),
            Rejection::Crossing {
                lower_level,
                upper_level,
            } => write!(f, "quantile crossing between levels {lower_level} and {upper_level}"),
            Rejection::TooFewLevels(n) => write!(f, "{n} levels given, at least 4 required"),
            Rejection::InvalidLevels => f.write_str("levels must be distinct and lie in (0, 1)"),
            Rejection::NonFiniteValue => f.write_str("non-finite quantile value"),
            Rejection::LengthMismatch => f.write_str("levels and values differ in length"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("family `{family}` expects {expected} parameter(s), got {found}")]
    ParameterCount {
        family: String,
        expected: usize,
        found: usize,
    },
    #[error("parameter `{name}` = {value} is outside its domain ({domain})")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("`{0}` is not an exponential-family catalog entry")]
    NotInCatalog(String),
    #[error("natural parameter {0} lies outside the natural parameter space")]
    OutsideOmega(f64),
    #[error("forecast representation lacks a {0}")]
    MissingCapability(&'static str),
    #[error("loss requires a forecast with finite first moment")]
    MomentRequired,
    #[error("distribution has infinite mean or variance")]
    InfiniteMoments,
    #[error("weight function is not integrable against this forecast")]
    NonIntegrableWeight,
    #[error("power weight with exponent {0} requires a nonnegative outcome space")]
    NegativeSupportPowerWeight(f64),
    #[error("invalid weight function: {0}")]
    InvalidWeight(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("energy exponent beta must lie in (0, 2), got {0}")]
    BetaOutOfRange(f64),
    #[error("quantile forecast rejected: {0}")]
    Rejected(Rejection),
    #[error("adjacent quantiles {lower} and {upper} are closer than 1e-12")]
    DegenerateSpacing { lower: f64, upper: f64 },
    #[error("{found} samples given, at least {required} required")]
    TooFewSamples { required: usize, found: usize },
    #[error("samples have zero variance")]
    ZeroVariance,
    #[error("numerical integration did not converge ({what}: value {value}, error estimate {error})")]
    NonConvergence {
        what: &'static str,
        value: f64,
        error: f64,
    },
    #[error("integrand is not integrable: {0}")]
    NonIntegrable(&'static str),
    #[error("shift law is almost surely constant")]
    NotAShift,
    #[error("loss `{0}` does not induce a symmetric rescalable divergence")]
    NotSymmetricRescalable(String),
    #[error("expected mean parameter {0} lies outside the image of A'")]
    ExpectationOutsideRange(f64),
    #[error("minimizer {at} hit the search bracket boundary [{lower}, {upper}]")]
    MinimizerAtBoundary { at: f64, lower: f64, upper: f64 },
    #[error("log-partition function is not affine in log(eta)")]
    NotLogAffinePartition,
    #[error("loss `{0}` has no scaling function")]
    NotRescalable(String),
    #[error("no (forecast, outcome) pairs supplied")]
    EmptyPairs,
    #[error("series of length {length} is shorter than window {window}")]
    SeriesTooShort { length: usize, window: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<Rejection> for Error {
    fn from(r: Rejection) -> Self {
        Error::Rejected(r)
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Data(e.to_string())
    }
}

impl Error {
    /// True for failures of an iterative or quadrature routine, as opposed to
    /// bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::NonIntegrable(_)
                | Error::MinimizerAtBoundary { .. }
                | Error::ExpectationOutsideRange(_)
        )
    }
}
