use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integration diverged at step {step}: non-finite state")]
    IntegrationDivergence { step: usize },

    #[error("no dominant period: spectral peak {peak:.3e} below 3x median {median:.3e}")]
    NoDominantPeriod { peak: f64, median: f64 },

    #[error("orbit escaped at step {step} (|x| = {value:.3e} > 10); bad initial condition")]
    OrbitEscape { step: usize, value: f64 },

    #[error("NARMA-10 recurrence diverged at step {step} (|y| = {value:.3e} > 10)")]
    NarmaDivergence { step: usize, value: f64 },

    #[error("band too narrow: Weyl law gives {modes} modes, need at least 10")]
    BandTooNarrow { modes: usize },

    #[error("waveform dt {dt:.3e} s exceeds stability limit {limit:.3e} s (1/(20 f_max))")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("echo-state violation: port difference not below tolerance within {horizon:.3e} s")]
    EchoStateViolation { horizon: f64 },

    #[error("normal matrix is rank deficient (pivot {pivot} <= tolerance); use ridge lambda > 0")]
    RankDeficient { pivot: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: String, right: String },

    #[error("undefined NMSE normalization: channel {channel} has zero power")]
    ZeroPower { channel: usize },

    #[error("ensemble member (boundary {boundary}, frequency {frequency}) failed: {source}")]
    Member {
        boundary: usize,
        frequency: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Tags an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
