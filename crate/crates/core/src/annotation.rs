//! Labeled classifier output and its JSON-lines encoding.
//!
//! Line 1 is a `config` record holding every parameter of the run, followed
//! by one `beat` record per beat and one `window` record per spectral window.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::beats::OnsetConfig;
use crate::error::{Error, Result};
use crate::quality::PipelineConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Good,
    Artifact,
}

/// Classifier stage that rejected a beat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Amplitude = 1,
    Spectral = 2,
    Template = 3,
}

impl Stage {
    pub fn number(self) -> u8 {
        self as u8
    }

    fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Stage::Amplitude),
            2 => Some(Stage::Spectral),
            3 => Some(Stage::Template),
            _ => None,
        }
    }
}

/// Per-beat outcome of the hierarchical classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeatLabel {
    Good,
    /// Outside full spectral-window coverage ("stage 0"); never evaluated.
    Unclassified,
    /// First failing stage and the value that failed it: the violating
    /// extremum (cm/s), the window correlation, or the template NMSE.
    Artifact { stage: Stage, metric: f64 },
}

impl BeatLabel {
    pub fn verdict(&self) -> Verdict {
        match self {
            BeatLabel::Artifact { .. } => Verdict::Artifact,
            _ => Verdict::Good,
        }
    }

    pub fn is_good(&self) -> bool {
        matches!(self, BeatLabel::Good)
    }

    pub fn is_artifact(&self) -> bool {
        matches!(self, BeatLabel::Artifact { .. })
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            BeatLabel::Artifact { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    pub fn metric(&self) -> Option<f64> {
        match self {
            BeatLabel::Artifact { metric, .. } => Some(*metric),
            _ => None,
        }
    }
}

impl fmt::Display for BeatLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BeatLabel::Good => f.write_str("good"),
            BeatLabel::Unclassified => f.write_str("unclassified"),
            BeatLabel::Artifact { .. } => f.write_str("artifact"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnotatedBeat {
    pub onset: usize,
    pub end: usize,
    pub label: BeatLabel,
}

/// Spectral-coupling verdict for one full window `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralWindow {
    pub start: usize,
    pub end: usize,
    pub r: f64,
    pub verdict: Verdict,
}

/// Every parameter that shaped a run, written as the header line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub fs: f64,
    #[serde(flatten)]
    pub onset: OnsetConfig,
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    pub config: ConfigSnapshot,
    pub beats: Vec<AnnotatedBeat>,
    pub windows: Vec<SpectralWindow>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Line {
    Config(ConfigSnapshot),
    Beat(BeatLine),
    Window(SpectralWindow),
}

#[derive(Serialize, Deserialize)]
struct BeatLine {
    onset: usize,
    end: usize,
    label: Verdict,
    #[serde(default)]
    stage: Option<u8>,
    #[serde(default)]
    metric: Option<f64>,
}

impl From<&AnnotatedBeat> for BeatLine {
    fn from(b: &AnnotatedBeat) -> Self {
        let (stage, metric) = match b.label {
            BeatLabel::Good => (None, None),
            BeatLabel::Unclassified => (Some(0), None),
            BeatLabel::Artifact { stage, metric } => (Some(stage.number()), Some(metric)),
        };
        BeatLine {
            onset: b.onset,
            end: b.end,
            label: b.label.verdict(),
            stage,
            metric,
        }
    }
}

impl BeatLine {
    fn into_beat(self, line: usize) -> Result<AnnotatedBeat> {
        let bad = |reason: &str| Error::MalformedLine {
            line,
            reason: reason.to_string(),
        };
        let label = match (self.label, self.stage) {
            (Verdict::Good, None) => BeatLabel::Good,
            (Verdict::Good, Some(0)) => BeatLabel::Unclassified,
            (Verdict::Good, Some(_)) => return Err(bad("good beat with a rejecting stage")),
            (Verdict::Artifact, Some(n)) => BeatLabel::Artifact {
                stage: Stage::from_number(n).ok_or_else(|| bad("artifact stage must be 1..=3"))?,
                metric: self.metric.ok_or_else(|| bad("artifact beat without metric"))?,
            },
            (Verdict::Artifact, None) => return Err(bad("artifact beat without stage")),
        };
        if self.end <= self.onset {
            return Err(bad("beat end must follow onset"));
        }
        Ok(AnnotatedBeat {
            onset: self.onset,
            end: self.end,
            label,
        })
    }
}

impl AnnotationSet {
    pub fn empty(config: ConfigSnapshot) -> Self {
        Self {
            config,
            beats: Vec::new(),
            windows: Vec::new(),
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut emit = |line: &Line| -> std::io::Result<()> {
            serde_json::to_writer(&mut out, line)?;
            out.write_all(b"\n")
        };
        emit(&Line::Config(self.config))?;
        for b in &self.beats {
            emit(&Line::Beat(b.into()))?;
        }
        for w in &self.windows {
            emit(&Line::Window(*w))?;
        }
        out.flush()
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Parses the JSON-lines format. The config line must come first; blank
    /// lines are ignored.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut config = None;
        let mut beats = Vec::new();
        let mut windows = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::MalformedLine {
                line: lineno,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                line: lineno,
                reason: e.to_string(),
            })?;
            match (parsed, config.is_some()) {
                (Line::Config(c), false) => config = Some(c),
                (Line::Config(_), true) => {
                    return Err(Error::MalformedLine {
                        line: lineno,
                        reason: "duplicate config line".into(),
                    })
                }
                (_, false) => {
                    return Err(Error::MalformedLine {
                        line: lineno,
                        reason: "config line must come first".into(),
                    })
                }
                (Line::Beat(b), true) => beats.push(b.into_beat(lineno)?),
                (Line::Window(w), true) => windows.push(w),
            }
        }
        let config = config.ok_or(Error::EmptyFile)?;
        Ok(Self {
            config,
            beats,
            windows,
        })
    }

    /// Fraction of classifiable beats marked Good.
    pub fn good_fraction(&self) -> f64 {
        let classified: Vec<_> = self
            .beats
            .iter()
            .filter(|b| b.label != BeatLabel::Unclassified)
            .collect();
        if classified.is_empty() {
            return 0.0;
        }
        classified.iter().filter(|b| b.label.is_good()).count() as f64 / classified.len() as f64
    }

    pub fn count_stage(&self, stage: Stage) -> usize {
        self.beats
            .iter()
            .filter(|b| b.label.stage() == Some(stage))
            .count()
    }
}
