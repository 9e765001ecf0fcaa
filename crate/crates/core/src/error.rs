use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Allan-deviation noise regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    AngleRandomWalk,
    BiasInstability,
    RateRandomWalk,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::AngleRandomWalk => "angle random walk",
            Regime::BiasInstability => "bias instability",
            Regime::RateRandomWalk => "rate random walk",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate attitude: |T31| = {0} is inside the gimbal-lock region")]
    DegenerateAttitude(f64),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("indeterminate heading: both heading components are zero")]
    IndeterminateHeading,
    #[error("latitude {latitude_deg} deg is too close to the pole")]
    PoleSingularity { latitude_deg: f64 },
    #[error("window of {requested} samples exceeds recording length {available}")]
    WindowTooLong { requested: usize, available: usize },
    #[error("sample rate {sample_rate} Hz is not an integer multiple of model rate {model_rate} Hz")]
    IndivisibleRate { sample_rate: f64, model_rate: f64 },
    #[error("cluster size {m} is out of range for a series of {n} samples")]
    TauOutOfRange { m: usize, n: usize },
    #[error("no identifiable {0} region in the Allan deviation curve")]
    RegimeNotFound(Regime),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("too few recordings: {available} available, at least {required} required")]
    TooFewRecordings { available: usize, required: usize },
    #[error("training diverged at epoch {epoch}: non-finite loss or parameters")]
    Divergence { epoch: usize, report: Box<crate::learn::TrainReport> },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
