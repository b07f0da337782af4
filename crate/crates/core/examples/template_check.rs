//! Median template and per-beat NMSE on a recording with distorted beats.

use cbfv_seg::quality::{nmse, resample_beat};
use cbfv_seg::{analyze, gen_recording, inject, segment_beats, ArtifactKind, ArtifactSpec, OnsetConfig, PipelineConfig, PulseModel};

fn main() -> cbfv_seg::Result<()> {
    let clean = gen_recording(&PulseModel::default(), 120.0, 125.0, 8)?;
    let synth = inject(&clean, &ArtifactSpec::new(ArtifactKind::MorphDistort, 0.1, 8));
    let cfg = PipelineConfig::default();
    let c = analyze(&synth.recording, &OnsetConfig::default(), &cfg)?;
    let Some(template) = &c.template else {
        println!("no beat survived the first two stages");
        return Ok(());
    };
    let peak = template.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("template from {} beats, mean {:.1} cm/s, peak {:.1} cm/s", template.n_beats, template.mean(), peak);

    let beats = segment_beats(&synth.recording.cbfv, &c.onsets)?;
    let mut scores: Vec<(usize, f64)> = beats
        .iter()
        .map(|b| Ok((b.onset, nmse(&resample_beat(b.samples, template.len())?, &template.values)?)))
        .collect::<cbfv_seg::Result<_>>()?;
    scores.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("largest NMSE (threshold {}):", cfg.nmse_max);
    for (onset, e) in scores.iter().take(8) {
        println!("  beat at {onset:>6}: {e:.3}");
    }
    Ok(())
}
