//! Generate a recording with artifacts, label it and score the labels.
//!
//! ```bash
//! cargo run --example quickstart
//! ```

use cbfv_seg::{classify, evaluate, synthesize, ArtifactMix, OnsetConfig, PipelineConfig, PulseModel, Stage};

fn main() -> cbfv_seg::Result<()> {
    let synth = synthesize(&PulseModel::default(), 120.0, 125.0, 42, &ArtifactMix::STANDARD)?;
    let ann = classify(&synth.recording, &OnsetConfig::default(), &PipelineConfig::default())?;

    println!("{} beats, {:.1}% good", ann.beats.len(), 100.0 * ann.good_fraction());
    for stage in [Stage::Amplitude, Stage::Spectral, Stage::Template] {
        println!("  stage {}: {} rejected", stage.number(), ann.count_stage(stage));
    }

    let stats = evaluate(&ann, &synth.truth)?;
    println!(
        "vs truth: tp {} tn {} fp {} fn {}, disagreement {:.4}",
        stats.tp, stats.tn, stats.fp, stats.fn_, stats.disagreement
    );
    Ok(())
}
