//! Windowed ABP/CBFV spectral coupling.
//!
//! Each full window is reduced to two Welch spectra (CBFV and ABP) computed
//! from the samples not already rejected by the amplitude gate. The window
//! is kept when the Pearson correlation of the two spectra inside the band
//! reaches `r_min`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::annotation::{BeatLabel, SpectralWindow, Stage, Verdict};
use crate::beats::Beat;
use crate::error::{Error, Result};
use crate::quality::PipelineConfig;
use crate::signal::Recording;

/// Correlation recorded for windows whose band power is constant or that
/// lack enough accepted samples for one Welch segment. It lies below every
/// admissible `r_min`, so such windows are always rejected.
pub const DEGENERATE_R: f64 = -1.0;

/// One-sided power spectral density on a uniform grid starting at 0 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl Psd {
    pub fn resolution(&self) -> f64 {
        self.freqs.get(1).copied().unwrap_or(0.0)
    }

    /// Indices of bins inside `[lo, hi]`, inclusive of edges.
    pub fn band_bins(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let eps = 1e-9 * hi.abs().max(1.0);
        let start = self.freqs.partition_point(|&f| f < lo - eps);
        let stop = self.freqs.partition_point(|&f| f <= hi + eps);
        start..stop.max(start)
    }
}

/// Reusable Welch estimator for a fixed segment length.
pub struct Welch {
    segment: usize,
    step: usize,
    fs: f64,
    window: Vec<f64>,
    window_power: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl Welch {
    pub fn new(fs: f64, segment_s: f64, overlap: f64) -> Result<Self> {
        let segment = (segment_s * fs).round() as usize;
        if segment < 2 {
            return Err(Error::TooFewSamples {
                need: 2,
                have: segment,
            });
        }
        if !(0.0..1.0).contains(&overlap) {
            return Err(Error::InvalidConfig(format!(
                "psd_overlap must lie in [0, 1), got {overlap}"
            )));
        }
        let step = (segment - (overlap * segment as f64).round() as usize).max(1);
        // Periodic Hann.
        let window: Vec<f64> = (0..segment)
            .map(|n| {
                0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / segment as f64).cos()
            })
            .collect();
        let window_power = window.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(segment);
        Ok(Self {
            segment,
            step,
            fs,
            window,
            window_power,
            fft,
        })
    }

    pub fn segment_len(&self) -> usize {
        self.segment
    }

    /// Averaged modified periodogram. Each segment has its mean removed
    /// before windowing.
    pub fn estimate(&self, samples: &[f64]) -> Result<Psd> {
        let l = self.segment;
        if samples.len() < l {
            return Err(Error::TooFewSamples {
                need: l,
                have: samples.len(),
            });
        }
        let n_bins = l / 2 + 1;
        let mut power = vec![0.0; n_bins];
        let mut buf = vec![Complex::new(0.0, 0.0); l];
        let mut count = 0usize;
        let mut start = 0;
        while start + l <= samples.len() {
            let seg = &samples[start..start + l];
            let mean = seg.iter().sum::<f64>() / l as f64;
            for ((slot, &x), &w) in buf.iter_mut().zip(seg).zip(&self.window) {
                *slot = Complex::new((x - mean) * w, 0.0);
            }
            self.fft.process(&mut buf);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p += c.norm_sqr();
            }
            count += 1;
            start += self.step;
        }
        let scale = 1.0 / (self.fs * self.window_power * count as f64);
        for (k, p) in power.iter_mut().enumerate() {
            let one_sided = if k == 0 || (l.is_multiple_of(2) && k == l / 2) { 1.0 } else { 2.0 };
            *p *= scale * one_sided;
        }
        let freqs = (0..n_bins).map(|k| k as f64 * self.fs / l as f64).collect();
        Ok(Psd { freqs, power })
    }
}

/// Welch PSD with a Hann window and `psd_overlap` fractional overlap.
/// The frequency resolution is `1 / psd_segment_s`.
pub fn welch_psd(samples: &[f64], fs: f64, psd_segment_s: f64, psd_overlap: f64) -> Result<Psd> {
    Welch::new(fs, psd_segment_s, psd_overlap)?.estimate(samples)
}

/// Pearson correlation of two spectra restricted to `[lo_hz, hi_hz]`.
pub fn band_correlation(a: &Psd, b: &Psd, lo_hz: f64, hi_hz: f64) -> Result<f64> {
    let same_grid = a.freqs.len() == b.freqs.len()
        && a.power.len() == a.freqs.len()
        && b.power.len() == b.freqs.len()
        && a
            .freqs
            .iter()
            .zip(&b.freqs)
            .all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(1.0));
    if !same_grid {
        return Err(Error::GridMismatch);
    }
    let bins = a.band_bins(lo_hz, hi_hz);
    if bins.len() < 3 {
        return Err(Error::BandTooNarrow {
            lo: lo_hz,
            hi: hi_hz,
            bins: bins.len(),
        });
    }
    pearson(&a.power[bins.clone()], &b.power[bins]).ok_or(Error::DegenerateBand)
}

/// `None` when either input has zero variance.
pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// "Below `r_min`" is strict: a window exactly at the threshold is kept.
pub fn window_verdict(r: f64, r_min: f64) -> Verdict {
    if r < r_min {
        Verdict::Artifact
    } else {
        Verdict::Good
    }
}

/// Samples per window under `cfg` at rate `fs`.
pub fn window_len(fs: f64, cfg: &PipelineConfig) -> usize {
    (cfg.window_s * fs).round() as usize
}

/// Full windows `[k*w, (k+1)*w)` tiling the first `floor(n / w)` windows.
pub fn tile_windows(n: usize, w: usize) -> Vec<(usize, usize)> {
    if w == 0 {
        return Vec::new();
    }
    (0..n / w).map(|k| (k * w, (k + 1) * w)).collect()
}

/// Result of the spectral stage.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOutcome {
    pub windows: Vec<SpectralWindow>,
    pub labels: Vec<BeatLabel>,
}

/// Scores every full window and rejects the still-good beats whose onset
/// falls in a rejected window. Good beats with an onset past the last full
/// window become [`BeatLabel::Unclassified`]. Amplitude rejections are kept
/// and their samples are left out of the spectra.
pub fn stage_spectral(
    rec: &Recording,
    beats: &[Beat<'_>],
    labels: &[BeatLabel],
    cfg: &PipelineConfig,
) -> Result<SpectralOutcome> {
    debug_assert_eq!(beats.len(), labels.len());
    let fs = rec.fs().hz();
    let welch = Welch::new(fs, cfg.psd_segment_s, cfg.psd_overlap)?;
    let n = rec.len();

    let mut accepted = vec![true; n];
    for (beat, label) in beats.iter().zip(labels) {
        if label.stage() == Some(Stage::Amplitude) {
            accepted[beat.onset..beat.end].fill(false);
        }
    }

    let spans = tile_windows(n, window_len(fs, cfg));
    let mut windows = Vec::with_capacity(spans.len());
    for &(start, end) in &spans {
        let r = window_correlation(rec, &accepted, start, end, &welch, cfg)?;
        windows.push(SpectralWindow {
            start,
            end,
            r,
            verdict: window_verdict(r, cfg.r_min),
        });
    }

    let covered_end = spans.last().map_or(0, |w| w.1);
    let w = window_len(fs, cfg);
    let labels = beats
        .iter()
        .zip(labels)
        .map(|(beat, &label)| {
            if !label.is_good() {
                return label;
            }
            if beat.onset >= covered_end {
                return BeatLabel::Unclassified;
            }
            let win = &windows[beat.onset / w];
            match win.verdict {
                Verdict::Good => label,
                Verdict::Artifact => BeatLabel::Artifact {
                    stage: Stage::Spectral,
                    metric: win.r,
                },
            }
        })
        .collect();
    Ok(SpectralOutcome { windows, labels })
}

fn window_correlation(
    rec: &Recording,
    accepted: &[bool],
    start: usize,
    end: usize,
    welch: &Welch,
    cfg: &PipelineConfig,
) -> Result<f64> {
    let keep = &accepted[start..end];
    let gather = |x: &[f64]| -> Vec<f64> {
        x[start..end]
            .iter()
            .zip(keep)
            .filter_map(|(&v, &k)| k.then_some(v))
            .collect()
    };
    let cbfv = gather(rec.cbfv.samples());
    if cbfv.len() < welch.segment_len() {
        return Ok(DEGENERATE_R);
    }
    let abp = gather(rec.abp.samples());
    let a = welch.estimate(&cbfv)?;
    let b = welch.estimate(&abp)?;
    match band_correlation(&a, &b, cfg.band_lo_hz, cfg.band_hi_hz) {
        Ok(r) => Ok(r),
        Err(Error::DegenerateBand) => Ok(DEGENERATE_R),
        Err(e) => Err(e),
    }
}
