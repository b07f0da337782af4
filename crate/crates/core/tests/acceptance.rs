//! End-to-end conformance checks. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cbfv_seg::quality::{nmse, stage_amplitude, welch_psd, Welch};
use cbfv_seg::{
    classify, evaluate, gen_recording, inject, segment_beats, standard_corpus, synthesize, ArtifactKind,
    ArtifactMix, ArtifactSpec, BeatLabel, ChannelKind, PulseModel, Stage, Verdict,
};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let took = start.elapsed();
    out.detail = format!("{} [{:.2} s]", out.detail, took.as_secs_f64());
    if let Some(limit) = limit {
        if took > limit {
            out.pass = false;
            out.detail = format!("{} exceeds {:.0} s", out.detail, limit.as_secs_f64());
        }
    }
    out
}

/// 1000 beats whose extrema sit on, just inside and just outside both
/// amplitude limits. Every label must match the strict inequalities.
fn amplitude_gate() -> Outcome {
    let (_, cfg) = defaults();
    let lows = [4.0, 4.999, 4.999_999, 5.0, 5.000_001, 5.001, 6.0];
    let highs = [299.0, 299.999, 299.999_999, 300.0, 300.000_001, 300.001, 301.0];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let len = 100;
    let mut samples = Vec::with_capacity(1000 * len);
    let mut expected = Vec::with_capacity(1000);
    for i in 0..1000 {
        let lo = lows[i % lows.len()];
        let hi = highs[(i / lows.len()) % highs.len()];
        let lo_at = rng.random_range(0..len);
        let hi_at = (lo_at + rng.random_range(1..len)) % len;
        for j in 0..len {
            samples.push(if j == lo_at {
                lo
            } else if j == hi_at {
                hi
            } else {
                rng.random_range(lo..hi)
            });
        }
        expected.push(if lo < 5.0 {
            Some(lo)
        } else if hi > 300.0 {
            Some(hi)
        } else {
            None
        });
    }
    let ch = channel(ChannelKind::Cbfv, 125.0, samples);
    let onsets: Vec<usize> = (0..=1000).map(|i| i * len).collect();
    let mut padded = ch.samples().to_vec();
    padded.push(50.0);
    let ch = channel(ChannelKind::Cbfv, 125.0, padded);
    let beats = segment_beats(&ch, &onsets).unwrap();
    let mut wrong = 0;
    let mut flagged = 0;
    for (beat, want) in beats.iter().zip(&expected) {
        let got = stage_amplitude(beat, &cfg);
        let ok = match want {
            Some(m) => got == BeatLabel::Artifact { stage: Stage::Amplitude, metric: *m },
            None => got == BeatLabel::Good,
        };
        flagged += usize::from(got.is_artifact());
        wrong += usize::from(!ok);
    }
    outcome(
        wrong == 0 && beats.len() == 1000,
        format!("{} beats, {flagged} flagged, {wrong} mismatches", beats.len()),
    )
}

/// Decoupled windows must be rejected and clean coupled windows kept.
fn spectral_stage() -> Outcome {
    let (onset, cfg) = defaults();
    let (mut dec_total, mut dec_hit) = (0, 0);
    let (mut clean_total, mut clean_hit) = (0, 0);
    let mut min_clean_r = f64::INFINITY;
    let mut max_dec_r = f64::NEG_INFINITY;
    for seed in 1..=3u64 {
        let base = gen_recording(&PulseModel::default(), 300.0, 125.0, seed).unwrap();
        let ann = classify(&base.recording, &onset, &cfg).unwrap();
        for w in &ann.windows {
            clean_total += 1;
            min_clean_r = min_clean_r.min(w.r);
            clean_hit += usize::from(w.r >= 0.9 && w.verdict == Verdict::Good);
        }
        let dec = inject(&base, &ArtifactSpec::new(ArtifactKind::Decouple, 0.25, 100 + seed));
        let ann = classify(&dec.recording, &onset, &cfg).unwrap();
        for &(a, b) in &dec.truth.decoupled {
            let w = ann.windows.iter().find(|w| w.start == a && w.end == b).expect("decoupled window scored");
            dec_total += 1;
            max_dec_r = max_dec_r.max(w.r);
            dec_hit += usize::from(w.r < 0.5 && w.verdict == Verdict::Artifact);
        }
    }
    let dec_share = dec_hit as f64 / dec_total as f64;
    outcome(
        dec_share >= 0.9 && clean_hit == clean_total,
        format!(
            "decoupled rejected {dec_hit}/{dec_total} ({:.1}%, max r {max_dec_r:.3}); clean kept {clean_hit}/{clean_total} (min r {min_clean_r:.4})",
            100.0 * dec_share
        ),
    )
}

fn nmse_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let len = rng.random_range(2..300);
        let scale = 10f64.powf(rng.random_range(-2.0..3.0));
        let offset = rng.random_range(-100.0..200.0);
        let t: Vec<f64> = (0..len).map(|_| offset + scale * rng.random_range(-1.0..1.0)).collect();
        let mean = t.iter().sum::<f64>() / len as f64;
        let mirror: Vec<f64> = t.iter().map(|v| 2.0 * mean - v).collect();
        let same = nmse(&t, &t).unwrap();
        let flipped = nmse(&mirror, &t).unwrap();
        worst = worst.max(same.abs()).max((flipped - 4.0).abs());
    }
    outcome(worst <= 1e-9, format!("100 templates, worst deviation {worst:.2e}"))
}

fn standard_corpus_agreement() -> Outcome {
    let (onset, cfg) = defaults();
    let corpus = standard_corpus().unwrap();
    let mut parts = Vec::new();
    let (mut bad, mut total) = (0, 0);
    let mut worst: f64 = 0.0;
    for s in &corpus {
        let ann = classify(&s.recording, &onset, &cfg).unwrap();
        let stats = evaluate(&ann, &s.truth).unwrap();
        bad += stats.fp + stats.fn_;
        total += stats.total();
        worst = worst.max(stats.disagreement);
        parts.push(format!("{:.4}", stats.disagreement));
    }
    let pooled = bad as f64 / total as f64;
    outcome(
        worst <= 0.05,
        format!("disagreement per recording [{}], pooled {pooled:.4}", parts.join(", ")),
    )
}

fn property_suites() -> Outcome {
    let runner = || {
        TestRunner::new_with_rng(
            Config { cases: 12, failure_persistence: None, ..Config::default() },
            TestRng::from_seed(RngAlgorithm::ChaCha, &[7; 32]),
        )
    };
    let mixed = |seed: u64| {
        let mix = ArtifactMix { spike: 0.03, ..ArtifactMix::STANDARD };
        synthesize(&PulseModel::default(), 60.0, 125.0, seed, &mix).unwrap().recording
    };
    let seeds = 0u64..1000;
    let results: [(&str, Result<(), String>); 6] = [
        (
            "hierarchy",
            runner()
                .run(&seeds, |seed| {
                    let rec = mixed(seed);
                    let (onset, cfg) = defaults();
                    let c = cbfv_seg::analyze(&rec, &onset, &cfg).unwrap();
                    check_hierarchy(&rec, &c, &cfg)
                })
                .map_err(|e| e.to_string()),
        ),
        (
            "tiling",
            runner()
                .run(&(0usize..100_000, 1usize..5000), |(n, w)| check_tiling(n, w))
                .map_err(|e| e.to_string()),
        ),
        (
            "template order",
            runner()
                .run(&(seeds.clone(), 0usize..1000), |(seed, rot)| check_template_order(&mixed(seed), rot))
                .map_err(|e| e.to_string()),
        ),
        (
            "spectral affine",
            runner()
                .run(&(seeds.clone(), 0.01f64..100.0, -500.0f64..500.0), |(seed, g, o)| {
                    check_spectral_affine(&mixed(seed), g, o)
                })
                .map_err(|e| e.to_string()),
        ),
        (
            "scale covariance",
            runner()
                .run(&(seeds.clone(), 0.05f64..20.0), |(seed, k)| check_scale_covariance(&mixed(seed), k))
                .map_err(|e| e.to_string()),
        ),
        (
            "determinism",
            runner()
                .run(&seeds, |seed| check_determinism(&mixed(seed)))
                .map_err(|e| e.to_string()),
        ),
    ];
    let names: Vec<&str> = results.iter().map(|r| r.0).collect();
    let failures: Vec<String> = results
        .iter()
        .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}")))
        .collect();
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} x 12 cases", names.join(", "))
        } else {
            failures.join("; ")
        },
    )
}

fn welch_oracle_agreement() -> Outcome {
    let fs = 125.0;
    let n = 1000;
    let (seg, overlap) = (2.0, 0.5);
    let welch = Welch::new(fs, seg, overlap).unwrap();
    let l = welch.segment_len();
    let mut notes = Vec::new();
    let mut pass = true;

    let argmax = |p: &[f64]| p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    for &f0 in &[0.5, 1.0, 1.2, 2.5, 3.3, 4.0, 5.0] {
        let x: Vec<f64> = (0..n)
            .map(|i| 3.0 + 2.0 * (2.0 * std::f64::consts::PI * f0 * i as f64 / fs + 0.3).sin())
            .collect();
        let psd = welch_psd(&x, fs, seg, overlap).unwrap();
        let oracle = welch_oracle(&x, fs, l, l / 2);
        let (got, want) = (argmax(&psd.power), argmax(&oracle));
        let on_grid = (f0 / psd.resolution()).fract() == 0.0;
        if got != want || (on_grid && psd.freqs[got] != f0) {
            pass = false;
            notes.push(format!("peak bin {got} vs oracle {want} for {f0} Hz"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let noise: Vec<f64> = (0..30_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let psd = welch_psd(&noise, fs, seg, overlap).unwrap();
    let direct = 6000;
    let oracle = dft_periodogram(&noise[..direct], fs, None);
    let averaged = welch_oracle(&noise, fs, l, l / 2);
    let got = band_power(&psd.power, psd.resolution(), 0.5, 5.0);
    let single = band_power(&oracle, fs / direct as f64, 0.5, 5.0);
    let exact = band_power(&averaged, psd.resolution(), 0.5, 5.0);
    let rel = (got - single).abs() / single;
    let rel_avg = (got - exact).abs() / exact;
    if rel > 0.2 || rel_avg > 1e-9 {
        pass = false;
    }
    notes.push(format!(
        "sinusoid peaks exact; noise band power {got:.4} vs periodogram {single:.4} ({:.1}%), vs averaged oracle {:.1e}",
        100.0 * rel,
        rel_avg
    ));
    outcome(pass, notes.join("; "))
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 6] = [
        ("amplitude gate on 1000 threshold beats", Some(Duration::from_secs(1)), amplitude_gate),
        ("spectral stage on decoupled and clean windows", Some(Duration::from_secs(5)), spectral_stage),
        ("NMSE identities", None, nmse_identities),
        ("standard corpus disagreement <= 0.05", Some(Duration::from_secs(30)), standard_corpus_agreement),
        ("property suites", None, property_suites),
        ("Welch vs direct-DFT oracle", None, welch_oracle_agreement),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let out = timed(limit, f);
        println!("[{}] {}. {name}: {}", if out.pass { "PASS" } else { "FAIL" }, i + 1, out.detail);
        failed += usize::from(!out.pass);
    }
    println!("acceptance: {} passed, {failed} failed", 6 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
