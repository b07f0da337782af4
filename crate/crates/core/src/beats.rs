//! Beat-onset detection on CBFV with a slope-sum-function detector.
//!
//! The CBFV channel is multiplied by a fixed factor, causally low-pass
//! filtered and turned into a slope-sum function (SSF). A beat is detected
//! where the SSF rises through an adaptive threshold set to a fraction of the
//! mean SSF peak amplitude seen over the trailing learning horizon. Its onset
//! is the foot of that SSF upstroke: walking back from the crossing, the
//! first sample whose predecessor lies below [`FOOT_FRACTION`] of the
//! threshold.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::Biquad;
use crate::signal::Channel;

/// Share of the detection threshold that delimits the foot of an SSF upstroke.
pub const FOOT_FRACTION: f64 = 0.1;

/// Parameters of the onset detector. All values are positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetConfig {
    pub lowpass_cutoff_hz: f64,
    pub ssf_window_s: f64,
    pub refractory_s: f64,
    pub learn_s: f64,
    /// Multiplier applied to CBFV before detection.
    pub cbfv_scale: f64,
    /// Fraction of the mean recent SSF peak used as threshold, in (0, 1).
    pub threshold_fraction: f64,
}

impl Default for OnsetConfig {
    fn default() -> Self {
        Self {
            lowpass_cutoff_hz: 16.0,
            ssf_window_s: 0.128,
            refractory_s: 0.25,
            learn_s: 8.0,
            cbfv_scale: 2.0,
            threshold_fraction: 0.6,
        }
    }
}

impl OnsetConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lowpass_cutoff_hz", self.lowpass_cutoff_hz),
            ("ssf_window_s", self.ssf_window_s),
            ("refractory_s", self.refractory_s),
            ("learn_s", self.learn_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.cbfv_scale.is_finite() && self.cbfv_scale > 0.0) {
            return Err(Error::NonPositiveScale(self.cbfv_scale));
        }
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold_fraction must lie in (0, 1), got {}",
                self.threshold_fraction
            )));
        }
        Ok(())
    }
}

/// Half-open sample interval `[onset, end)` over a CBFV channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beat<'a> {
    pub onset: usize,
    pub end: usize,
    pub samples: &'a [f64],
}

impl Beat<'_> {
    pub fn len(&self) -> usize {
        self.end - self.onset
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.onset
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn scale_cbfv(ch: &Channel, k: f64) -> Result<Channel> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::NonPositiveScale(k));
    }
    Ok(ch.with_samples(ch.samples().iter().map(|v| v * k).collect()))
}

fn check_cutoff(ch: &Channel, cutoff_hz: f64) -> Result<()> {
    let nyquist = ch.fs().nyquist();
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(Error::CutoffAboveNyquist {
            cutoff: cutoff_hz,
            nyquist,
        });
    }
    Ok(())
}

/// Zero-phase second-order Butterworth low-pass.
pub fn lowpass(ch: &Channel, cutoff_hz: f64) -> Result<Channel> {
    check_cutoff(ch, cutoff_hz)?;
    let filter = Biquad::butterworth_lowpass(cutoff_hz, ch.fs().hz());
    Ok(ch.with_samples(filter.filtfilt(ch.samples())))
}

/// Single-pass version of [`lowpass`]. The detector uses it so that no
/// output sample is influenced by later input.
pub fn causal_lowpass(ch: &Channel, cutoff_hz: f64) -> Result<Channel> {
    check_cutoff(ch, cutoff_hz)?;
    let filter = Biquad::butterworth_lowpass(cutoff_hz, ch.fs().hz());
    Ok(ch.with_samples(filter.filter(ch.samples())))
}

/// `ssf[n] = sum over k in (n-w, n] of max(0, x[k] - x[k-1])`, using only
/// the history available near the start.
pub fn slope_sum(ch: &Channel, window_s: f64) -> Result<Channel> {
    let w = ch.fs().samples_in(window_s);
    if w < 1 {
        return Err(Error::WindowTooShort);
    }
    Ok(ch.with_samples(slope_sum_raw(ch.samples(), w)))
}

fn slope_sum_raw(x: &[f64], w: usize) -> Vec<f64> {
    let rises: Vec<f64> = std::iter::once(0.0)
        .chain(x.windows(2).map(|p| (p[1] - p[0]).max(0.0)))
        .collect();
    (0..x.len())
        .map(|n| rises[(n + 1).saturating_sub(w)..=n].iter().sum())
        .collect()
}

/// Detects beat onsets on a CBFV channel.
pub fn detect_onsets(ch: &Channel, cfg: &OnsetConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    let fs = ch.fs();
    if ch.duration_s() < cfg.learn_s {
        return Err(Error::RecordingTooShort {
            have_s: ch.duration_s(),
            need_s: cfg.learn_s,
        });
    }
    let scaled = scale_cbfv(ch, cfg.cbfv_scale)?;
    let smooth = causal_lowpass(&scaled, cfg.lowpass_cutoff_hz)?;
    let ssf = slope_sum(&smooth, cfg.ssf_window_s)?;
    Ok(OnsetTracker::new(ssf.samples(), fs.samples_in(cfg.learn_s), cfg).run(
        fs.samples_in(cfg.refractory_s),
    ))
}

/// Left-to-right adaptive-threshold state over a precomputed SSF.
struct OnsetTracker<'a> {
    ssf: &'a [f64],
    prefix: Vec<f64>,
    learn: usize,
    fraction: f64,
    peaks: VecDeque<(usize, f64)>,
    peak_sum: f64,
}

impl<'a> OnsetTracker<'a> {
    fn new(ssf: &'a [f64], learn: usize, cfg: &OnsetConfig) -> Self {
        let mut prefix = Vec::with_capacity(ssf.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in ssf {
            acc += v;
            prefix.push(acc);
        }
        Self {
            ssf,
            prefix,
            learn: learn.clamp(1, ssf.len()),
            fraction: cfg.threshold_fraction,
            peaks: VecDeque::new(),
            peak_sum: 0.0,
        }
    }

    /// Threshold at sample `i`. Falls back to three times the mean SSF of
    /// the learning window (leading window while `i < learn`) when no peak
    /// was recorded within the horizon.
    fn threshold(&mut self, i: usize) -> f64 {
        while let Some(&(idx, amp)) = self.peaks.front() {
            if idx + self.learn <= i {
                self.peaks.pop_front();
                self.peak_sum -= amp;
            } else {
                break;
            }
        }
        if self.peaks.is_empty() {
            self.peak_sum = 0.0;
            let hi = i.max(self.learn);
            let lo = hi - self.learn;
            let mean = (self.prefix[hi] - self.prefix[lo]) / self.learn as f64;
            self.fraction * 3.0 * mean
        } else {
            self.fraction * self.peak_sum / self.peaks.len() as f64
        }
    }

    fn run(mut self, refractory: usize) -> Vec<usize> {
        let n = self.ssf.len();
        let search = refractory.max(1);
        let mut onsets: Vec<usize> = Vec::new();
        let mut i = 1;
        while i < n {
            let thr = self.threshold(i);
            let crossed = thr > 0.0 && self.ssf[i - 1] < thr && self.ssf[i] >= thr;
            let rested = onsets.last().is_none_or(|&o| i - o >= refractory);
            if !(crossed && rested) {
                i += 1;
                continue;
            }
            let stop = (i + search).min(n);
            let (peak_idx, peak) = self.ssf[i..stop]
                .iter()
                .enumerate()
                .fold((i, f64::NEG_INFINITY), |best, (j, &v)| {
                    if v > best.1 {
                        (i + j, v)
                    } else {
                        best
                    }
                });
            let floor = onsets.last().map_or(0, |&o| o + refractory);
            let mut k = i;
            while k > floor && self.ssf[k - 1] >= FOOT_FRACTION * thr {
                k -= 1;
            }
            onsets.push(k);
            self.peaks.push_back((peak_idx, peak));
            self.peak_sum += peak;
            i = peak_idx + 1;
        }
        onsets
    }
}

/// Splits `ch` into beats between consecutive onsets. The tail after the
/// last onset is dropped, so `n` onsets give `n - 1` beats.
pub fn segment_beats<'a>(ch: &'a Channel, onsets: &[usize]) -> Result<Vec<Beat<'a>>> {
    segment_slice(ch.samples(), onsets)
}

pub(crate) fn segment_slice<'a>(x: &'a [f64], onsets: &[usize]) -> Result<Vec<Beat<'a>>> {
    if onsets.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::UnsortedOnsets);
    }
    if let Some(&o) = onsets.iter().find(|&&o| o > x.len()) {
        return Err(Error::OnsetOutOfRange {
            onset: o,
            len: x.len(),
        });
    }
    Ok(onsets
        .windows(2)
        .map(|p| Beat {
            onset: p[0],
            end: p[1],
            samples: &x[p[0]..p[1]],
        })
        .collect())
}
