use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid measurement: non-finite sample {0}")]
    InvalidMeasurement(f64),

    #[error("controller not warmed up: {have} of {need} samples")]
    NotWarmedUp { have: usize, need: usize },

    #[error("duty-cycle out of range: {0}")]
    DutyOutOfRange(f64),

    #[error("no such signal `{0}`")]
    NoSuchSignal(String),

    #[error("no such input slot `{0}`")]
    NoSuchSlot(String),

    #[error("event `{event}` not applicable to {plant} plant")]
    EventNotApplicable { event: String, plant: &'static str },

    #[error("simulation diverged at t = {t} s")]
    Diverged { t: f64 },

    #[error("no stable tuning found over {candidates} grid points")]
    NoStableTuning { candidates: usize },

    #[error("empty trace")]
    EmptyTrace,

    #[error("zero reference amplitude")]
    ZeroReferenceAmplitude,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown scenario `{name}` (available: {available})")]
    UnknownScenario { name: String, available: String },

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
