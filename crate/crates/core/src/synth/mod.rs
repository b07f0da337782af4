//! Ground-truth-labeled synthetic recordings.
//!
//! Each CBFV beat is `baseline` plus a systolic and a dicrotic Gaussian bump.
//! ABP is an affine copy of the clean CBFV pulse train with independent
//! Gaussian noise, so the two channels stay spectrally coupled.

mod eval;
mod inject;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use eval::{evaluate, match_predictions, stage_hit_rate, ConfusionStats};
pub use inject::{inject, ArtifactKind, ArtifactSpec};

use crate::annotation::{AnnotatedBeat, AnnotationSet, BeatLabel, ConfigSnapshot, Stage, Verdict};
use crate::error::{Error, Result};
use crate::signal::{Channel, ChannelKind, Recording, SampleRate};

/// ABP = `ABP_OFFSET + ABP_GAIN * (cbfv - baseline)` + noise.
pub const ABP_OFFSET: f64 = 80.0;
pub const ABP_GAIN: f64 = 0.5;
/// Standard deviation of the additive ABP noise, mmHg.
pub const ABP_NOISE_SD: f64 = 0.5;

/// Systolic peak sits this many systolic widths after the beat start.
const SYSTOLIC_LEAD: f64 = 2.5;
/// Dicrotic bump width relative to the systolic width.
const DICROTIC_WIDTH_RATIO: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseModel {
    /// Height of the systolic bump above baseline, cm/s.
    pub systolic_amp: f64,
    /// Standard deviation of the systolic bump, s.
    pub systolic_width_s: f64,
    pub dicrotic_amp: f64,
    /// Dicrotic peak delay after the systolic peak, s.
    pub dicrotic_delay_s: f64,
    pub baseline: f64,
    pub hr_bpm: f64,
    /// Each period is `60 / hr_bpm * (1 + hr_jitter * u)`, `u ~ U(-1, 1)`.
    pub hr_jitter: f64,
}

impl Default for PulseModel {
    fn default() -> Self {
        Self {
            systolic_amp: 45.0,
            systolic_width_s: 0.06,
            dicrotic_amp: 15.0,
            dicrotic_delay_s: 0.25,
            baseline: 40.0,
            hr_bpm: 72.0,
            hr_jitter: 0.03,
        }
    }
}

impl PulseModel {
    /// Named parameter sets: `default`, `slow` (55 bpm), `fast` (100 bpm).
    pub fn preset(name: &str) -> Option<Self> {
        let base = Self::default();
        match name {
            "default" | "clean" => Some(base),
            "slow" => Some(Self { hr_bpm: 55.0, ..base }),
            "fast" => Some(Self {
                hr_bpm: 100.0,
                dicrotic_delay_s: 0.2,
                ..base
            }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("systolic_amp", self.systolic_amp),
            ("systolic_width_s", self.systolic_width_s),
            ("dicrotic_amp", self.dicrotic_amp),
            ("dicrotic_delay_s", self.dicrotic_delay_s),
            ("baseline", self.baseline),
            ("hr_bpm", self.hr_bpm),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidModel(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.hr_jitter) {
            return Err(Error::InvalidModel(format!(
                "hr_jitter must lie in [0, 1), got {}",
                self.hr_jitter
            )));
        }
        Ok(())
    }

    fn systolic_center(&self) -> f64 {
        SYSTOLIC_LEAD * self.systolic_width_s
    }

    fn dicrotic_center(&self) -> f64 {
        self.systolic_center() + self.dicrotic_delay_s
    }

    fn dicrotic_width(&self) -> f64 {
        DICROTIC_WIDTH_RATIO * self.systolic_width_s
    }

    /// Velocity of the noise-free pulse train at time `t` given sorted beat
    /// start times.
    pub fn velocity(&self, beat_times: &[f64], t: f64) -> f64 {
        let reach = self.dicrotic_center() + 6.0 * self.dicrotic_width();
        let first = beat_times.partition_point(|&b| b < t - reach);
        let mut v = self.baseline;
        for &b in &beat_times[first..] {
            if b > t + 1.0 {
                break;
            }
            v += self.systolic_amp * gauss(t - b - self.systolic_center(), self.systolic_width_s);
            v += self.dicrotic_amp * gauss(t - b - self.dicrotic_center(), self.dicrotic_width());
        }
        v
    }

    /// Dicrotic bump of the beat starting at `b`, evaluated at `t`.
    pub(crate) fn dicrotic_at(&self, b: f64, t: f64) -> f64 {
        self.dicrotic_amp * gauss(t - b - self.dicrotic_center(), self.dicrotic_width())
    }
}

fn gauss(x: f64, sd: f64) -> f64 {
    (-0.5 * (x / sd).powi(2)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthBeat {
    pub onset: usize,
    pub end: usize,
    pub label: Verdict,
    /// Injector responsible for an artifact label.
    pub kind: Option<ArtifactKind>,
}

/// Per-beat labels aligned with the generator's beat boundaries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub beats: Vec<TruthBeat>,
    /// Sample spans replaced by decoupled noise.
    pub decoupled: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct TruthLine {
    onset: usize,
    end: usize,
    label: Verdict,
    #[serde(default)]
    artifact: Option<ArtifactKind>,
}

impl GroundTruth {
    pub fn artifact_count(&self) -> usize {
        self.beats.iter().filter(|b| b.label == Verdict::Artifact).count()
    }

    pub fn count_kind(&self, kind: ArtifactKind) -> usize {
        self.beats.iter().filter(|b| b.kind == Some(kind)).count()
    }

    pub fn write_jsonl<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for b in &self.beats {
            let line = TruthLine {
                onset: b.onset,
                end: b.end,
                label: b.label,
                artifact: b.kind,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn read_jsonl<R: std::io::BufRead>(input: R) -> Result<Self> {
        let mut beats = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let malformed = |reason: String| Error::MalformedLine { line: i + 1, reason };
            let line = line.map_err(|e| malformed(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let t: TruthLine = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
            if t.end <= t.onset {
                return Err(malformed("beat end must follow onset".into()));
            }
            beats.push(TruthBeat {
                onset: t.onset,
                end: t.end,
                label: t.label,
                kind: t.artifact,
            });
        }
        Ok(Self {
            beats,
            decoupled: Vec::new(),
        })
    }

    /// Presents the truth as classifier output. Artifacts are attributed to
    /// the stage their injector targets, with a zero metric.
    pub fn to_annotations(&self, config: ConfigSnapshot) -> AnnotationSet {
        let beats = self
            .beats
            .iter()
            .map(|b| AnnotatedBeat {
                onset: b.onset,
                end: b.end,
                label: match b.label {
                    Verdict::Good => BeatLabel::Good,
                    Verdict::Artifact => BeatLabel::Artifact {
                        stage: b.kind.map_or(Stage::Amplitude, ArtifactKind::target_stage),
                        metric: 0.0,
                    },
                },
            })
            .collect();
        AnnotationSet {
            config,
            beats,
            windows: Vec::new(),
        }
    }
}

/// A generated recording together with everything needed to score it.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub recording: Recording,
    pub truth: GroundTruth,
    /// Ground-truth onset sample indices, one per beat start.
    pub onsets: Vec<usize>,
    /// Beat start times, s.
    pub beat_times: Vec<f64>,
    pub model: PulseModel,
}

/// Generates `duration_s` seconds at `fs`, deterministic per `seed`.
pub fn gen_recording(model: &PulseModel, duration_s: f64, fs: f64, seed: u64) -> Result<Synthetic> {
    model.validate()?;
    if duration_s.is_nan() || duration_s < 10.0 {
        return Err(Error::InvalidModel(format!(
            "duration must be at least 10 s, got {duration_s}"
        )));
    }
    if fs.is_nan() || fs < 100.0 {
        return Err(Error::InvalidModel(format!("fs must be at least 100 Hz, got {fs}")));
    }
    let rate = SampleRate::new(fs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rate.samples_in(duration_s);

    let mean_period = 60.0 / model.hr_bpm;
    let mut beat_times = Vec::new();
    let mut t = 0.0;
    while t < duration_s {
        beat_times.push(t);
        let u: f64 = if model.hr_jitter > 0.0 { rng.random_range(-1.0..1.0) } else { 0.0 };
        t += mean_period * (1.0 + model.hr_jitter * u);
    }
    let mut onsets: Vec<usize> = beat_times.iter().map(|&b| (b * fs).round() as usize).collect();
    onsets.retain(|&o| o < n);
    onsets.dedup();

    let cbfv: Vec<f64> = (0..n)
        .map(|i| model.velocity(&beat_times, i as f64 / fs))
        .collect();
    let noise = Normal::new(0.0, ABP_NOISE_SD).expect("positive sd");
    let abp: Vec<f64> = cbfv
        .iter()
        .map(|v| ABP_OFFSET + ABP_GAIN * (v - model.baseline) + noise.sample(&mut rng))
        .collect();

    let truth = GroundTruth {
        beats: onsets
            .windows(2)
            .map(|p| TruthBeat {
                onset: p[0],
                end: p[1],
                label: Verdict::Good,
                kind: None,
            })
            .collect(),
        decoupled: Vec::new(),
    };
    let recording = Recording::new(
        Channel::new(ChannelKind::Cbfv, rate, cbfv)?,
        Channel::new(ChannelKind::Abp, rate, abp)?,
    )?;
    Ok(Synthetic {
        recording,
        truth,
        onsets,
        beat_times,
        model: *model,
    })
}

/// Share of beats (or windows, for decoupling) given each artifact kind.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ArtifactMix {
    pub decouple: f64,
    pub dropout: f64,
    pub spike: f64,
    pub distort: f64,
}

impl ArtifactMix {
    /// Mix of the standard corpus.
    pub const STANDARD: Self = Self {
        decouple: 0.10,
        dropout: 0.10,
        spike: 0.0,
        distort: 0.05,
    };

    /// Injection specs in application order. Each kind draws from its own
    /// stream derived from `seed`, so changing one fraction leaves the
    /// placement of the others untouched.
    pub fn specs(&self, seed: u64) -> Vec<ArtifactSpec> {
        [
            (ArtifactKind::Decouple, self.decouple, 1),
            (ArtifactKind::Dropout, self.dropout, 2),
            (ArtifactKind::MorphDistort, self.distort, 3),
            (ArtifactKind::Spike, self.spike, 4),
        ]
        .into_iter()
        .filter(|&(_, f, _)| f > 0.0)
        .map(|(kind, f, k)| ArtifactSpec::new(kind, f, seed.wrapping_mul(1000).wrapping_add(k)))
        .collect()
    }
}

/// [`gen_recording`] followed by every injection in `mix`.
pub fn synthesize(
    model: &PulseModel,
    duration_s: f64,
    fs: f64,
    seed: u64,
    mix: &ArtifactMix,
) -> Result<Synthetic> {
    for (name, f) in [
        ("decouple", mix.decouple),
        ("dropout", mix.dropout),
        ("spike", mix.spike),
        ("distort", mix.distort),
    ] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidModel(format!("{name} fraction must lie in [0, 1], got {f}")));
        }
    }
    let clean = gen_recording(model, duration_s, fs, seed)?;
    Ok(mix.specs(seed).iter().fold(clean, |s, spec| inject(&s, spec)))
}

/// Seeds of the fixed evaluation corpus.
pub const STANDARD_SEEDS: [u64; 5] = [11, 12, 13, 14, 15];

/// Five 5-minute 125 Hz recordings with 10% decoupled windows, then 10%
/// dropout and 5% morphology-distorted beats, all from fixed seeds.
pub fn standard_corpus() -> Result<Vec<Synthetic>> {
    STANDARD_SEEDS
        .iter()
        .map(|&seed| synthesize(&PulseModel::default(), 300.0, 125.0, seed, &ArtifactMix::STANDARD))
        .collect()
}
