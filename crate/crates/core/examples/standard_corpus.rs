//! Runs the classifier over the five fixed-seed evaluation recordings and
//! reports agreement with the injected ground truth.

use cbfv_seg::synth::{stage_hit_rate, STANDARD_SEEDS};
use cbfv_seg::{classify, evaluate, standard_corpus, ArtifactKind, OnsetConfig, PipelineConfig, Stage};

fn main() -> cbfv_seg::Result<()> {
    let (onset, cfg) = (OnsetConfig::default(), PipelineConfig::default());
    println!("seed  beats  disagreement  dropout@1  decouple@2  distort@3");
    for (seed, s) in STANDARD_SEEDS.iter().zip(standard_corpus()?) {
        let ann = classify(&s.recording, &onset, &cfg)?;
        let stats = evaluate(&ann, &s.truth)?;
        let rate = |kind, stage| stage_hit_rate(&ann, &s.truth, kind, stage).unwrap_or(f64::NAN);
        println!(
            "{seed:>4}  {:>5}  {:>12.4}  {:>9.2}  {:>10.2}  {:>9.2}",
            ann.beats.len(),
            stats.disagreement,
            rate(ArtifactKind::Dropout, Stage::Amplitude),
            rate(ArtifactKind::Decouple, Stage::Spectral),
            rate(ArtifactKind::MorphDistort, Stage::Template),
        );
    }
    Ok(())
}
