use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("no-data cell at row {row}, column {col}")]
    NoData { row: usize, col: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("point ({x}, {y}) lies outside the grid")]
    OutOfDomain { x: f64, y: f64 },

    #[error("degenerate momentum at ({x}, {y})")]
    DegenerateMomentum { x: f64, y: f64 },

    #[error("level set has no interface (field is single-signed)")]
    NoInterface,

    #[error("numerical blow-up at step {step} (t = {time}): {detail}")]
    BlowUp { step: usize, time: f64, detail: String },

    #[error("step budget of {steps} exhausted at t = {time}; {covered:.1}% of nodes reached")]
    Timeout { steps: usize, time: f64, covered: f64 },

    #[error("time {t} outside stored range [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("no arrival time at ({x}, {y})")]
    NoArrival { x: f64, y: f64 },

    #[error("sample counts differ: {0} vs {1}")]
    SampleMismatch(usize, usize),

    #[error("need at least {need} successful paths, have {have}")]
    TooFewPaths { need: usize, have: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
