//! Writes a recording and its annotations to disk and reads both back.

use cbfv_seg::{
    classify, gen_recording, load_recording, read_annotations, save_csv, write_annotations, InputFormat, OnsetConfig,
    PipelineConfig, PulseModel,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("cbfv-seg-example");
    std::fs::create_dir_all(&dir)?;
    let csv = dir.join("recording.csv");
    let jsonl = dir.join("recording.annotations.jsonl");

    let synth = gen_recording(&PulseModel::default(), 60.0, 125.0, 1)?;
    save_csv(&synth.recording, &csv)?;
    let loaded = load_recording(&csv, InputFormat::Csv, None)?;
    assert_eq!(loaded.cbfv, synth.recording.cbfv);
    println!("{}: {} samples at {} Hz", csv.display(), loaded.len(), loaded.fs().hz());

    let ann = classify(&loaded, &OnsetConfig::default(), &PipelineConfig::default())?;
    write_annotations(&ann, &jsonl)?;
    assert_eq!(read_annotations(&jsonl)?, ann);
    println!("{}: {} beats, {} windows", jsonl.display(), ann.beats.len(), ann.windows.len());
    Ok(())
}
