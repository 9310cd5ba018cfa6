use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Every failure the kernel can report.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A numeric input was NaN or infinite.
    NonFinite(&'static str),
    /// An input fell outside its documented domain.
    OutOfRange { what: &'static str, value: f64 },
    /// Explicit Euler would be unstable for this step size.
    UnstableStep { dt: f64, limit: f64 },
    /// Series or plans that must be aligned were not.
    Misaligned { expected: usize, found: usize },
    /// Two series disagree on start time or step.
    ClockMismatch,
    /// An operation needs at least one sample.
    Empty(&'static str),
    /// Metric denominator was zero.
    ZeroDenominator(&'static str),
    /// Events or clock indices arrived out of order.
    OutOfOrder { previous: i64, found: i64 },
    /// Normal equations stayed singular after jitter.
    RankDeficient,
    /// Not enough samples to fit the requested recipe.
    InsufficientData { needed: usize, found: usize },
    /// The query time is not bracketed by schedule events.
    OutsideSchedule(i64),
    /// Fixed-point iteration failed to converge.
    NoConvergence(&'static str),
    /// PMV inversion found no temperature inside the comfort band.
    EmptyComfortBand,
    /// The hard comfort constraint cannot be met; first violating step.
    Infeasible { step: usize },
    /// Heating was requested from a cooling-only plant.
    HeatingRequested(f64),
    /// A configured limit was exceeded.
    LimitExceeded { what: &'static str, limit: usize, found: usize },
    /// Strategy name that exists but has no algorithm.
    Unimplemented(&'static str),
    /// Invalid configuration value.
    Invalid(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite(what) => write!(f, "non-finite value for {what}"),
            Error::OutOfRange { what, value } => write!(f, "{what} out of range: {value}"),
            Error::UnstableStep { dt, limit } => {
                write!(f, "time step {dt} s violates explicit Euler bound {limit} s")
            }
            Error::Misaligned { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
            Error::ClockMismatch => f.write_str("series do not share start time and step"),
            Error::Empty(what) => write!(f, "{what} is empty"),
            Error::ZeroDenominator(what) => write!(f, "{what} is undefined (zero denominator)"),
            Error::OutOfOrder { previous, found } => {
                write!(f, "out-of-order timestamp {found} after {previous}")
            }
            Error::RankDeficient => f.write_str("design matrix is rank deficient"),
            Error::InsufficientData { needed, found } => {
                write!(f, "insufficient data: need {needed} samples, found {found}")
            }
            Error::OutsideSchedule(t) => write!(f, "time {t} is outside the event schedule"),
            Error::NoConvergence(what) => write!(f, "{what} did not converge"),
            Error::EmptyComfortBand => f.write_str("comfort band is empty"),
            Error::Infeasible { step } => write!(f, "comfort constraint infeasible at step {step}"),
            Error::HeatingRequested(q) => write!(f, "cooling-only plant cannot deliver {q} W"),
            Error::LimitExceeded { what, limit, found } => {
                write!(f, "{what} {found} exceeds limit {limit}")
            }
            Error::Unimplemented(what) => write!(f, "{what} is unimplemented"),
            Error::Invalid(what) => write!(f, "invalid {what}"),
        }
    }
}

impl core::error::Error for Error {}
