//! Window-by-window ABP/CBFV spectral correlation before and after
//! replacing some windows with decoupled noise.

use cbfv_seg::{classify, gen_recording, inject, ArtifactKind, ArtifactSpec, OnsetConfig, PipelineConfig, PulseModel};

fn main() -> cbfv_seg::Result<()> {
    let clean = gen_recording(&PulseModel::default(), 80.0, 125.0, 5)?;
    let decoupled = inject(&clean, &ArtifactSpec::new(ArtifactKind::Decouple, 0.3, 5));
    let (onset, cfg) = (OnsetConfig::default(), PipelineConfig::default());

    let before = classify(&clean.recording, &onset, &cfg)?;
    let after = classify(&decoupled.recording, &onset, &cfg)?;
    println!("window   start    r_clean  r_injected  verdict");
    for (i, (a, b)) in before.windows.iter().zip(&after.windows).enumerate() {
        let mark = if decoupled.truth.decoupled.contains(&(b.start, b.end)) { "*" } else { " " };
        println!("{i:>4}{mark} {:>8}  {:>8.4}  {:>10.4}  {:?}", b.start, a.r, b.r, b.verdict);
    }
    println!("* decoupled window");
    Ok(())
}
