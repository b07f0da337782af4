//! Oracles and property checks shared by the integration test targets.

#![allow(dead_code)]

use std::f64::consts::PI;

use cbfv_seg::quality::{nmse, resample_beat, tile_windows, window_len};
use cbfv_seg::{
    analyze, classify, segment_beats, BeatLabel, Channel, ChannelKind, Classification, OnsetConfig,
    PipelineConfig, PulseModel, Recording, SampleRate, Stage, Synthetic, Verdict,
};
use proptest::prelude::*;

pub fn clean(duration_s: f64, seed: u64) -> Synthetic {
    cbfv_seg::gen_recording(&PulseModel::default(), duration_s, 125.0, seed).unwrap()
}

pub fn channel(kind: ChannelKind, fs: f64, samples: Vec<f64>) -> Channel {
    Channel::new(kind, SampleRate::new(fs).unwrap(), samples).unwrap()
}

pub fn map_channel(ch: &Channel, f: impl Fn(f64) -> f64) -> Channel {
    Channel::new(ch.kind(), ch.fs(), ch.samples().iter().map(|&v| f(v)).collect()).unwrap()
}

pub fn recording(fs: f64, cbfv: Vec<f64>, abp: Vec<f64>) -> Recording {
    Recording::new(channel(ChannelKind::Cbfv, fs, cbfv), channel(ChannelKind::Abp, fs, abp)).unwrap()
}

/// One-sided density periodogram of a single window by direct DFT.
/// `window` of `None` means rectangular.
pub fn dft_periodogram(x: &[f64], fs: f64, window: Option<&[f64]>) -> Vec<f64> {
    let n = x.len();
    let w: Vec<f64> = window.map_or_else(|| vec![1.0; n], <[f64]>::to_vec);
    let mean = x.iter().sum::<f64>() / n as f64;
    let u: f64 = w.iter().map(|v| v * v).sum();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, (&xj, &wj)) in x.iter().zip(&w).enumerate() {
                let phase = -2.0 * PI * (k * j) as f64 / n as f64;
                re += (xj - mean) * wj * phase.cos();
                im += (xj - mean) * wj * phase.sin();
            }
            let edge = k == 0 || (n.is_multiple_of(2) && k == n / 2);
            (re * re + im * im) / (fs * u) * if edge { 1.0 } else { 2.0 }
        })
        .collect()
}

pub fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|j| 0.5 - 0.5 * (2.0 * PI * j as f64 / n as f64).cos()).collect()
}

/// Welch estimate assembled from direct-DFT periodograms.
pub fn welch_oracle(x: &[f64], fs: f64, segment: usize, step: usize) -> Vec<f64> {
    let w = hann(segment);
    let mut acc = vec![0.0; segment / 2 + 1];
    let mut count = 0;
    let mut start = 0;
    while start + segment <= x.len() {
        for (a, p) in acc.iter_mut().zip(dft_periodogram(&x[start..start + segment], fs, Some(&w))) {
            *a += p;
        }
        count += 1;
        start += step;
    }
    acc.iter().map(|a| a / count as f64).collect()
}

/// Mean density over bins with `lo <= f <= hi` times the band width, so
/// grids of different resolution integrate the same band.
pub fn band_power(power: &[f64], df: f64, lo: f64, hi: f64) -> f64 {
    let inside: Vec<f64> = power
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * df;
            f >= lo - 1e-9 && f <= hi + 1e-9
        })
        .map(|(_, p)| *p)
        .collect();
    inside.iter().sum::<f64>() / inside.len() as f64 * (hi - lo)
}

pub fn defaults() -> (OnsetConfig, PipelineConfig) {
    (OnsetConfig::default(), PipelineConfig::default())
}

/// Recomputes every label from scratch and checks it names the first stage
/// the beat fails, with that stage's metric.
pub fn check_hierarchy(rec: &Recording, c: &Classification, cfg: &PipelineConfig) -> Result<(), TestCaseError> {
    let beats = segment_beats(&rec.cbfv, &c.onsets).unwrap();
    let ann = &c.annotations;
    prop_assert_eq!(beats.len(), ann.beats.len());
    let w = window_len(rec.fs().hz(), cfg);
    let covered = tile_windows(rec.len(), w).last().map_or(0, |s| s.1);
    for (beat, got) in beats.iter().zip(&ann.beats) {
        let (lo, hi) = (beat.min(), beat.max());
        let expected_stage = if lo < cfg.v_min || hi > cfg.v_max {
            Some(Stage::Amplitude)
        } else if beat.onset >= covered {
            prop_assert_eq!(got.label, BeatLabel::Unclassified);
            continue;
        } else if ann.windows[beat.onset / w].verdict == Verdict::Artifact {
            prop_assert_eq!(got.label.metric(), Some(ann.windows[beat.onset / w].r));
            Some(Stage::Spectral)
        } else {
            match &c.template {
                Some(t) if !t.is_flat() => {
                    let e = nmse(&resample_beat(beat.samples, t.len()).unwrap(), &t.values).unwrap();
                    if e > cfg.nmse_max {
                        prop_assert_eq!(got.label.metric(), Some(e));
                        Some(Stage::Template)
                    } else {
                        None
                    }
                }
                _ => None,
            }
        };
        prop_assert_eq!(got.label.stage(), expected_stage, "beat {:?}", got);
        if expected_stage.is_none() {
            prop_assert_eq!(got.label, BeatLabel::Good);
        }
    }
    Ok(())
}

pub fn check_tiling(n: usize, w: usize) -> Result<(), TestCaseError> {
    let spans = tile_windows(n, w);
    prop_assert_eq!(spans.len(), n / w);
    let mut next = 0;
    for (a, b) in spans {
        prop_assert_eq!(a, next);
        prop_assert_eq!(b - a, w);
        next = b;
    }
    prop_assert!(n - next < w);
    Ok(())
}

/// Scaling CBFV by `k` together with the amplitude limits leaves every
/// verdict, stage and correlation unchanged.
pub fn check_scale_covariance(rec: &Recording, k: f64) -> Result<(), TestCaseError> {
    let (onset, cfg) = defaults();
    let base = classify(rec, &onset, &cfg).unwrap();
    let scaled_rec = Recording::new(
        map_channel(&rec.cbfv, |v| v * k),
        rec.abp.clone(),
    )
    .unwrap();
    let scaled_cfg = PipelineConfig {
        v_min: cfg.v_min * k,
        v_max: cfg.v_max * k,
        ..cfg
    };
    let scaled = classify(&scaled_rec, &onset, &scaled_cfg).unwrap();
    prop_assert_eq!(base.beats.len(), scaled.beats.len());
    for (a, b) in base.beats.iter().zip(&scaled.beats) {
        prop_assert_eq!((a.onset, a.end), (b.onset, b.end));
        prop_assert_eq!(a.label.stage(), b.label.stage());
        prop_assert_eq!(a.label.verdict(), b.label.verdict());
        if let (Some(x), Some(y)) = (a.label.metric(), b.label.metric()) {
            let expect = if a.label.stage() == Some(Stage::Amplitude) { x * k } else { x };
            prop_assert!((expect - y).abs() <= 1e-6 * expect.abs().max(1.0), "{} vs {}", expect, y);
        }
    }
    for (a, b) in base.windows.iter().zip(&scaled.windows) {
        prop_assert_eq!(a.verdict, b.verdict);
        prop_assert!((a.r - b.r).abs() < 1e-9);
    }
    Ok(())
}

pub fn check_determinism(rec: &Recording) -> Result<(), TestCaseError> {
    let (onset, cfg) = defaults();
    let a = classify(rec, &onset, &cfg).unwrap().to_jsonl_string();
    let b = classify(rec, &onset, &cfg).unwrap().to_jsonl_string();
    prop_assert_eq!(&a, &b);
    let aligned = cbfv_seg::align(rec).unwrap();
    let c = classify(&aligned, &onset, &cfg).unwrap().to_jsonl_string();
    prop_assert_eq!(a, c);
    Ok(())
}

pub fn check_template_order(rec: &Recording, rotate: usize) -> Result<(), TestCaseError> {
    let (onset, cfg) = defaults();
    let c = analyze(rec, &onset, &cfg).unwrap();
    let beats = segment_beats(&rec.cbfv, &c.onsets).unwrap();
    let mut resampled: Vec<Vec<f64>> =
        beats.iter().map(|b| resample_beat(b.samples, cfg.template_len).unwrap()).collect();
    let forward = cbfv_seg::quality::median_template(&resampled);
    let r = rotate % resampled.len();
    resampled.rotate_left(r);
    resampled.reverse();
    let shuffled = cbfv_seg::quality::median_template(&resampled);
    prop_assert_eq!(forward.values, shuffled.values);
    Ok(())
}

/// Pearson invariance of the spectral stage: an affine map of ABP leaves
/// every window correlation unchanged.
pub fn check_spectral_affine(rec: &Recording, gain: f64, offset: f64) -> Result<(), TestCaseError> {
    let (onset, cfg) = defaults();
    let base = classify(rec, &onset, &cfg).unwrap();
    let abp = map_channel(&rec.abp, |v| gain * v + offset);
    let moved = classify(&Recording::new(rec.cbfv.clone(), abp).unwrap(), &onset, &cfg).unwrap();
    for (a, b) in base.windows.iter().zip(&moved.windows) {
        prop_assert!((a.r - b.r).abs() < 1e-9, "{} vs {}", a.r, b.r);
        prop_assert_eq!(a.verdict, b.verdict);
    }
    Ok(())
}
