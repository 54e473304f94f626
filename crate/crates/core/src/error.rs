use thiserror::Error;

/// Errors raised by the generator, the detector and the IO layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("domain error at t = {t} min: {message}")]
    Domain { t: f64, message: String },

    #[error("sampling time {t} min lies outside the simulated range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("unknown scenario `{0}` (expected one of A, B, C, D, E, F)")]
    UnknownScenario(String),

    #[error("series too short: {len} samples, at least {required} required")]
    SeriesTooShort { len: usize, required: usize },

    #[error("too few pulses: {found} found, at least {required} required")]
    TooFewPulses { found: usize, required: usize },

    #[error("empty window between samples {left} and {right}")]
    EmptyWindow { left: usize, right: usize },

    #[error("sample {index} lies below its surrounding minimum; not a local peak")]
    NotAPeak { index: usize },

    #[error("resonant clearance: clearance rate equals the spike decay rate")]
    Resonant,

    #[error("line {line}: malformed row: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("line {line}: non-uniform sampling grid (step {step} min, expected {expected} min)")]
    NonUniformGrid { line: u64, step: f64, expected: f64 },

    #[error("line {line}: time {time} min does not increase")]
    NonMonotoneTime { line: u64, time: f64 },

    #[error("line {line}: negative value {value}")]
    NegativeValue { line: u64, value: f64 },

    #[error("invalid header: expected `time_min,lh_ng_ml`, found `{0}`")]
    BadHeader(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable code, used in service error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Domain { .. } => "domain_error",
            Error::OutOfRange { .. } => "out_of_range",
            Error::UnknownScenario(_) => "unknown_scenario",
            Error::SeriesTooShort { .. } => "series_too_short",
            Error::TooFewPulses { .. } => "too_few_pulses",
            Error::EmptyWindow { .. } => "empty_window",
            Error::NotAPeak { .. } => "not_a_peak",
            Error::Resonant => "resonant",
            Error::MalformedRow { .. } => "malformed_row",
            Error::NonUniformGrid { .. } => "non_uniform_grid",
            Error::NonMonotoneTime { .. } => "non_monotone_time",
            Error::NegativeValue { .. } => "negative_value",
            Error::BadHeader(_) => "bad_header",
            Error::Io(_) => "io_error",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
