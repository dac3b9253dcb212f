use std::fmt;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    Alphabet(String),

    #[error("empty support: {0}")]
    EmptySupport(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("decode failed: {0}")]
    Decode(String),

    #[error("sequence is not in the encoder image")]
    OutOfImage,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("phase is undefined for a zero-energy input")]
    UndefinedPhase,

    #[error("series too short: need more than {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("unsupported link: {0}")]
    UnsupportedLink(String),

    #[error("quadrature did not converge: achieved relative error {achieved:.3e}, requested {requested:.3e}")]
    Accuracy { achieved: f64, requested: f64 },

    #[error("correlation undefined: zero variance")]
    ZeroVariance,

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Pipeline stage tag attached to errors raised inside an experiment run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Shaping,
    Mapping,
    Transmitter,
    Channel,
    Receiver,
    Cpr,
    Metrics,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Shaping => "shaping",
            Stage::Mapping => "mapping",
            Stage::Transmitter => "transmitter",
            Stage::Channel => "channel",
            Stage::Receiver => "receiver",
            Stage::Cpr => "cpr",
            Stage::Metrics => "metrics",
        };
        f.write_str(s)
    }
}

impl Error {
    pub(crate) fn at(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
