use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::annotation::{Stage, Verdict};
use crate::filter::Biquad;
use crate::synth::Synthetic;

/// Window length used to place decoupled segments, s. Matches the default
/// spectral window so each injected segment covers exactly one window.
pub const DECOUPLE_WINDOW_S: f64 = 8.0;
/// Noise bandwidth of decoupled segments, Hz.
const DECOUPLE_NOISE_CUTOFF_HZ: f64 = 8.0;
/// Gaussian smoothing applied to distorted beats, s.
const DISTORT_SMOOTHING_S: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    /// Beat clamped to `U(0, 3)` cm/s.
    Dropout,
    /// Single-sample impulse above 300 cm/s.
    Spike,
    /// Whole window replaced by amplitude-matched noise.
    Decouple,
    /// Beat smoothed and its dicrotic bump halved.
    #[serde(rename = "morphdistort")]
    MorphDistort,
}

impl ArtifactKind {
    /// Stage expected to catch this artifact.
    pub fn target_stage(self) -> Stage {
        match self {
            ArtifactKind::Dropout | ArtifactKind::Spike => Stage::Amplitude,
            ArtifactKind::Decouple => Stage::Spectral,
            ArtifactKind::MorphDistort => Stage::Template,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArtifactSpec {
    pub kind: ArtifactKind,
    /// Share of all beats (or of all full windows, for `Decouple`) to corrupt.
    pub fraction: f64,
    pub rng_seed: u64,
}

impl ArtifactSpec {
    pub fn new(kind: ArtifactKind, fraction: f64, rng_seed: u64) -> Self {
        Self {
            kind,
            fraction: fraction.clamp(0.0, 1.0),
            rng_seed,
        }
    }
}

/// Returns a copy of `synth` with the artifact applied to CBFV and the truth
/// updated. Beats are drawn from those still labeled good; the count is
/// `round(fraction * total)`, capped by what is available.
pub fn inject(synth: &Synthetic, spec: &ArtifactSpec) -> Synthetic {
    let mut out = synth.clone();
    if spec.fraction <= 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let fs = out.recording.fs().hz();
    let mut cbfv = out.recording.cbfv.samples().to_vec();

    if spec.kind == ArtifactKind::Decouple {
        let w = (DECOUPLE_WINDOW_S * fs).round() as usize;
        let n_windows = cbfv.len() / w;
        let free: Vec<usize> = (0..n_windows)
            .filter(|k| !out.truth.decoupled.contains(&(k * w, (k + 1) * w)))
            .collect();
        let count = ((spec.fraction * n_windows as f64).round() as usize).min(free.len());
        let mut chosen: Vec<usize> = sample(&mut rng, free.len(), count)
            .into_iter()
            .map(|i| free[i])
            .collect();
        chosen.sort_unstable();
        for k in chosen {
            let (a, b) = (k * w, (k + 1) * w);
            decouple(&mut cbfv[a..b], fs, &mut rng);
            out.truth.decoupled.push((a, b));
            for beat in out.truth.beats.iter_mut() {
                if beat.onset < b && beat.end > a {
                    beat.label = Verdict::Artifact;
                    beat.kind = Some(ArtifactKind::Decouple);
                }
            }
        }
        out.truth.decoupled.sort_unstable();
    } else {
        let pool: Vec<usize> = (0..out.truth.beats.len())
            .filter(|&i| out.truth.beats[i].label == Verdict::Good)
            .collect();
        let total = out.truth.beats.len();
        let count = ((spec.fraction * total as f64).round() as usize).min(pool.len());
        let mut chosen: Vec<usize> = sample(&mut rng, pool.len(), count)
            .into_iter()
            .map(|i| pool[i])
            .collect();
        chosen.sort_unstable();
        for i in chosen {
            let (a, b) = (out.truth.beats[i].onset, out.truth.beats[i].end);
            match spec.kind {
                ArtifactKind::Dropout => {
                    for v in &mut cbfv[a..b] {
                        *v = rng.random_range(0.0..3.0);
                    }
                }
                ArtifactKind::Spike => {
                    let at = rng.random_range(a..b);
                    cbfv[at] = rng.random_range(320.0..400.0);
                }
                ArtifactKind::MorphDistort => distort(&mut cbfv, a, b, fs, synth),
                ArtifactKind::Decouple => unreachable!(),
            }
            out.truth.beats[i].label = Verdict::Artifact;
            out.truth.beats[i].kind = Some(spec.kind);
        }
    }
    out.recording.cbfv = out.recording.cbfv.with_samples(cbfv);
    out
}

/// Replaces `seg` by differenced, low-passed white noise with the segment's
/// own mean and standard deviation. The noise is filtered with margins on
/// both sides that are then cut off. Its power rises with frequency up to
/// the low-pass corner, unlike the falling harmonics of a pulse train.
fn decouple(seg: &mut [f64], fs: f64, rng: &mut ChaCha8Rng) {
    let n = seg.len() as f64;
    let mean = seg.iter().sum::<f64>() / n;
    let sd = (seg.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let margin = (fs / DECOUPLE_NOISE_CUTOFF_HZ).ceil() as usize * 4;
    let white: Vec<f64> = (0..=seg.len() + 2 * margin)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    let white: Vec<f64> = white.windows(2).map(|p| p[1] - p[0]).collect();
    let filtered = Biquad::butterworth_lowpass(DECOUPLE_NOISE_CUTOFF_HZ, fs).filtfilt(&white);
    let shaped = &filtered[margin..margin + seg.len()];
    let m = shaped.iter().sum::<f64>() / n;
    let s = (shaped.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
    for (dst, v) in seg.iter_mut().zip(shaped) {
        *dst = mean + sd * (v - m) / s;
    }
}

/// Halves the beat's own dicrotic bump, then smooths `[a, b)` with a
/// Gaussian kernel that replicates the edge samples.
fn distort(cbfv: &mut [f64], a: usize, b: usize, fs: f64, synth: &Synthetic) {
    let start_t = a as f64 / fs;
    let beat_t = synth
        .beat_times
        .iter()
        .copied()
        .min_by(|x, y| (x - start_t).abs().total_cmp(&(y - start_t).abs()))
        .unwrap_or(start_t);
    let halved: Vec<f64> = (a..b)
        .map(|i| cbfv[i] - 0.5 * synth.model.dicrotic_at(beat_t, i as f64 / fs))
        .collect();
    let sd = DISTORT_SMOOTHING_S * fs;
    let radius = (3.0 * sd).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-0.5 * (k as f64 / sd).powi(2)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    let last = halved.len() as isize - 1;
    for (j, dst) in cbfv[a..b].iter_mut().enumerate() {
        let acc: f64 = kernel
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let src = (j as isize + k as isize - radius).clamp(0, last);
                w * halved[src as usize]
            })
            .sum();
        *dst = acc / norm;
    }
}
