//! Slope-sum onset detection compared with the generator's beat starts.

use cbfv_seg::{detect_onsets, gen_recording, slope_sum, OnsetConfig, PulseModel};

fn main() -> cbfv_seg::Result<()> {
    let model = PulseModel::preset("fast").expect("known preset");
    let synth = gen_recording(&model, 60.0, 125.0, 3)?;
    let cfg = OnsetConfig::default();
    let onsets = detect_onsets(&synth.recording.cbfv, &cfg)?;

    let offsets: Vec<i64> = synth
        .onsets
        .iter()
        .filter_map(|&t| {
            onsets
                .iter()
                .map(|&o| o as i64 - t as i64)
                .min_by_key(|d| d.abs())
        })
        .collect();
    let within = offsets.iter().filter(|d| d.abs() <= 6).count();
    println!("detected {} onsets, truth has {}", onsets.len(), synth.onsets.len());
    println!("{within} truth onsets have a detection within 6 samples");

    let ssf = slope_sum(&synth.recording.cbfv, cfg.ssf_window_s)?;
    let peak = ssf.samples().iter().copied().fold(0.0, f64::max);
    println!("SSF peak {peak:.1} cm/s over a {:.0} ms window", cfg.ssf_window_s * 1e3);

    let ibi: Vec<f64> = onsets.windows(2).map(|p| (p[1] - p[0]) as f64 / 125.0).collect();
    let mean = ibi.iter().sum::<f64>() / ibi.len() as f64;
    println!("mean inter-beat interval {mean:.3} s ({:.1} bpm)", 60.0 / mean);
    Ok(())
}
