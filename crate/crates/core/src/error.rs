use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("unknown frame `{0}`")]
    UnknownFrame(String),

    #[error("track generation failed after {attempts} attempts: {reason}")]
    TrackGeneration { attempts: usize, reason: String },

    #[error("invalid plan")]
    InvalidPlan,

    #[error("empty depth history")]
    EmptyHistory,

    #[error("covariance is not positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("singular innovation covariance")]
    SingularInnovation,

    #[error("geodetic datum not initialised")]
    DatumUninitialized,

    #[error("zero total fusion weight")]
    ZeroWeight,

    #[error("empty telemetry")]
    EmptyTelemetry,

    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("tick {tick}, stage `{stage}`: {source}")]
    Runtime {
        tick: u64,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("telemetry parse error: {0}")]
    Parse(String),
}

pub(crate) fn ensure_finite(value: f64, what: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
