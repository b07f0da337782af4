use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input file is empty")]
    EmptyFile,
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("time column is not strictly increasing at line {line}")]
    NonMonotoneTime { line: usize },
    #[error("non-finite sample in column `{column}` at line {line}")]
    NonFiniteSample { line: usize, column: String },
    #[error("cannot parse `{value}` in column `{column}` at line {line}")]
    BadCell {
        line: usize,
        column: String,
        value: String,
    },
    #[error("sample rate unknown: no time column and no --fs given")]
    MissingSampleRate,
    #[error("sample rate must be positive and finite, got {0}")]
    InvalidSampleRate(f64),
    #[error("sample rate {hz} Hz is below the {min} Hz minimum")]
    RateTooLow { hz: f64, min: f64 },
    #[error("channel has no samples")]
    EmptyChannel,
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("cutoff {cutoff} Hz must lie in (0, {nyquist}) Hz")]
    CutoffAboveNyquist { cutoff: f64, nyquist: f64 },
    #[error("slope-sum window covers less than one sample")]
    WindowTooShort,
    #[error("recording lasts {have_s:.3} s, need at least {need_s:.3} s")]
    RecordingTooShort { have_s: f64, need_s: f64 },
    #[error("onsets are not strictly increasing")]
    UnsortedOnsets,
    #[error("onset {onset} lies outside a channel of {len} samples")]
    OnsetOutOfRange { onset: usize, len: usize },
    #[error("need at least {need} samples, got {have}")]
    TooFewSamples { need: usize, have: usize },
    #[error("PSD frequency grids differ")]
    GridMismatch,
    #[error("band [{lo}, {hi}] Hz holds {bins} bins, need at least 3")]
    BandTooNarrow { lo: f64, hi: f64, bins: usize },
    #[error("band power is constant in at least one spectrum")]
    DegenerateBand,
    #[error("beat has {0} samples, need at least 2")]
    BeatTooShort(usize),
    #[error("no accepted beats to build a template from")]
    NoAcceptedBeats,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid pulse model: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("predicted and ground-truth beats do not overlap")]
    NoOverlap,
    #[error("malformed annotation line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
