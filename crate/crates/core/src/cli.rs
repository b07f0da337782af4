//! Command-line front-end: `annotate`, `beats`, `synth`, `corpus`, `eval`.
//!
//! Exit codes are 0 on success, 2 for input or configuration errors, 3 when
//! predictions and truth do not overlap, and 1 for anything else.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::annotation::{AnnotationSet, BeatLabel, ConfigSnapshot};
use crate::beats::{detect_onsets, OnsetConfig};
use crate::error::Error;
use crate::io::{load_recording, save_csv, write_annotations, InputFormat};
use crate::quality::{classify, PipelineConfig};
use crate::signal::{align, Recording, SampleRate};
use crate::synth::{
    evaluate, standard_corpus, synthesize, ArtifactMix, GroundTruth, PulseModel, Synthetic,
    STANDARD_SEEDS,
};

#[derive(Debug, Parser)]
#[command(name = "cbfv-seg", version, about = "Beat-by-beat artifact labeling of TCD CBFV recordings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label every beat of a recording, or of every CSV in a directory.
    Annotate(AnnotateArgs),
    /// Print detected beat boundaries as `onset,end` rows.
    Beats(BeatsArgs),
    /// Generate a synthetic recording and its ground truth.
    Synth(SynthArgs),
    /// Write the five standard evaluation recordings.
    Corpus(CorpusArgs),
    /// Compare annotations with ground truth; prints statistics as JSON.
    Eval(EvalArgs),
}

/// Threshold flags. Unset flags fall back to `--config`, then to defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Reuse every parameter from the header of an annotation file.
    #[arg(long, value_name = "ANNOTATIONS")]
    pub config: Option<PathBuf>,
    /// Sample rate, Hz. Required when the CSV has no `t` column.
    #[arg(long)]
    pub fs: Option<f64>,
    #[arg(long)]
    pub v_min: Option<f64>,
    #[arg(long)]
    pub v_max: Option<f64>,
    #[arg(long)]
    pub window_sec: Option<f64>,
    /// Spectral band as `lo:hi` in Hz.
    #[arg(long, value_parser = parse_band)]
    pub band: Option<(f64, f64)>,
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub nmse_max: Option<f64>,
    #[arg(long)]
    pub template_len: Option<usize>,
    #[arg(long)]
    pub psd_segment_sec: Option<f64>,
    #[arg(long)]
    pub psd_overlap: Option<f64>,
    #[arg(long)]
    pub cbfv_scale: Option<f64>,
    #[arg(long)]
    pub lowpass_hz: Option<f64>,
    #[arg(long)]
    pub ssf_window_sec: Option<f64>,
    #[arg(long)]
    pub refractory_sec: Option<f64>,
    #[arg(long)]
    pub learn_sec: Option<f64>,
    #[arg(long)]
    pub threshold_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    /// CSV file, or a directory whose `*.csv` files are all annotated.
    pub input: PathBuf,
    /// Output file (default: stdout), or output directory for a directory input.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write `sample_index,cbfv,label` rows; a directory for directory input.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct BeatsArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Writes `<PREFIX>.csv` and `<PREFIX>.truth.jsonl`.
    pub prefix: PathBuf,
    /// Pulse model: `default`, `slow` or `fast`.
    #[arg(long, default_value = "default")]
    pub preset: String,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 300.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 125.0)]
    pub fs: f64,
    #[arg(long, default_value_t = 0.0)]
    pub dropout: f64,
    #[arg(long, default_value_t = 0.0)]
    pub spike: f64,
    /// Share of full 8 s windows replaced by decoupled noise.
    #[arg(long, default_value_t = 0.0)]
    pub decouple: f64,
    #[arg(long, default_value_t = 0.0)]
    pub distort: f64,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Directory receiving `standard_<seed>.csv` and `.truth.jsonl` files.
    pub dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Annotation file, or a truth file scored as if it were predictions.
    pub annotations: PathBuf,
    pub truth: PathBuf,
}

/// A failure together with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Self { code: 2, message: e.to_string() }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoOverlap => 3,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn parse_band(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower edge `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper edge `{hi}`"))?;
    Ok((lo, hi))
}

/// Effective parameters of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub fs: Option<f64>,
    pub onset: OnsetConfig,
    pub pipeline: PipelineConfig,
}

impl ConfigArgs {
    pub fn resolve(&self) -> CliResult<Resolved> {
        let base = match &self.config {
            Some(path) => Some(read_header(path)?),
            None => None,
        };
        let mut onset = base.map_or_else(OnsetConfig::default, |c| c.onset);
        let mut p = base.map_or_else(PipelineConfig::default, |c| c.pipeline);
        let fs = self.fs.or(base.map(|c| c.fs));
        fn set<T: Copy>(dst: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *dst = v;
            }
        }
        set(&mut p.v_min, self.v_min);
        set(&mut p.v_max, self.v_max);
        set(&mut p.window_s, self.window_sec);
        if let Some((lo, hi)) = self.band {
            p.band_lo_hz = lo;
            p.band_hi_hz = hi;
        }
        set(&mut p.r_min, self.r_min);
        set(&mut p.nmse_max, self.nmse_max);
        set(&mut p.template_len, self.template_len);
        set(&mut p.psd_segment_s, self.psd_segment_sec);
        set(&mut p.psd_overlap, self.psd_overlap);
        set(&mut onset.cbfv_scale, self.cbfv_scale);
        set(&mut onset.lowpass_cutoff_hz, self.lowpass_hz);
        set(&mut onset.ssf_window_s, self.ssf_window_sec);
        set(&mut onset.refractory_s, self.refractory_sec);
        set(&mut onset.learn_s, self.learn_sec);
        set(&mut onset.threshold_fraction, self.threshold_fraction);
        onset.validate()?;
        Ok(Resolved { fs, onset, pipeline: p })
    }
}

fn read_header(path: &Path) -> CliResult<ConfigSnapshot> {
    let file = File::open(path).map_err(|e| Failure::input(Error::io(path, e)))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| Failure::input(Error::io(path, e)))?;
    let ann = AnnotationSet::read_jsonl(first.as_bytes())
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(ann.config)
}

fn load(path: &Path, fs: Option<f64>) -> CliResult<Recording> {
    let fs = fs.map(SampleRate::new).transpose()?;
    load_recording(path, InputFormat::Csv, fs).map_err(|e| match e {
        Error::Io { .. } => Failure::from(e),
        other => Failure::input(format!("{}: {other}", path.display())),
    })
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::internal(Error::io(path, e)))
}

fn with_output(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
    match path {
        Some(p) => {
            let mut out = create(p)?;
            body(&mut out).and_then(|_| out.flush()).map_err(|e| Failure::internal(Error::io(p, e)))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            match body(&mut lock) {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Failure::internal(e)),
                _ => Ok(()),
            }
        }
    }
}

/// One `sample_index,cbfv,label` row per sample; samples outside every beat
/// are `unclassified`.
pub fn write_plot_data<W: Write>(rec: &Recording, ann: &AnnotationSet, mut out: W) -> io::Result<()> {
    let mut labels = vec![BeatLabel::Unclassified; rec.len()];
    for b in &ann.beats {
        for l in &mut labels[b.onset..b.end.min(rec.len())] {
            *l = b.label;
        }
    }
    writeln!(out, "sample_index,cbfv,label")?;
    for (i, (v, l)) in rec.cbfv.samples().iter().zip(&labels).enumerate() {
        writeln!(out, "{i},{v},{l}")?;
    }
    out.flush()
}

fn annotate_one(input: &Path, output: Option<&Path>, plot: Option<&Path>, cfg: &Resolved) -> CliResult<AnnotationSet> {
    let rec = align(&load(input, cfg.fs)?)?;
    let ann = classify(&rec, &cfg.onset, &cfg.pipeline)
        .map_err(|e| Failure::input(format!("{}: {e}", input.display())))?;
    match output {
        Some(p) => write_annotations(&ann, p).map_err(Failure::internal)?,
        None => with_output(None, |w| ann.write_jsonl(w))?,
    }
    if let Some(p) = plot {
        let mut out = create(p)?;
        write_plot_data(&rec, &ann, &mut out).map_err(|e| Failure::internal(Error::io(p, e)))?;
    }
    Ok(ann)
}

fn csv_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Failure::input(Error::io(dir, e)))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    Ok(files)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::internal(Error::io(dir, e)))
}

fn cmd_annotate(args: &AnnotateArgs) -> CliResult<()> {
    let cfg = args.config.resolve()?;
    if !args.input.is_dir() {
        annotate_one(&args.input, args.output.as_deref(), args.plot_data.as_deref(), &cfg)?;
        return Ok(());
    }
    let out_dir = args.output.clone().unwrap_or_else(|| args.input.clone());
    ensure_dir(&out_dir)?;
    if let Some(p) = &args.plot_data {
        ensure_dir(p)?;
    }
    for file in csv_files(&args.input)? {
        let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let out = out_dir.join(format!("{stem}.annotations.jsonl"));
        let plot = args.plot_data.as_ref().map(|d| d.join(format!("{stem}.plot.csv")));
        let ann = annotate_one(&file, Some(&out), plot.as_deref(), &cfg)?;
        eprintln!("{}: {} beats, {:.1}% good", file.display(), ann.beats.len(), 100.0 * ann.good_fraction());
    }
    Ok(())
}

fn cmd_beats(args: &BeatsArgs) -> CliResult<()> {
    let cfg = args.config.resolve()?;
    let rec = align(&load(&args.input, cfg.fs)?)?;
    let onsets = detect_onsets(&rec.cbfv, &cfg.onset)?;
    with_output(args.output.as_deref(), |w| {
        writeln!(w, "onset,end")?;
        for p in onsets.windows(2) {
            writeln!(w, "{},{}", p[0], p[1])?;
        }
        w.flush()
    })
}

fn write_synthetic(s: &Synthetic, prefix: &Path) -> CliResult<()> {
    let mut csv = prefix.as_os_str().to_owned();
    csv.push(".csv");
    let mut truth = prefix.as_os_str().to_owned();
    truth.push(".truth.jsonl");
    let (csv, truth) = (PathBuf::from(csv), PathBuf::from(truth));
    if let Some(parent) = csv.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    save_csv(&s.recording, &csv).map_err(Failure::internal)?;
    let mut out = create(&truth)?;
    s.truth
        .write_jsonl(&mut out)
        .map_err(|e| Failure::internal(Error::io(&truth, e)))
}

fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let model = PulseModel::preset(&args.preset)
        .ok_or_else(|| Failure::input(format!("unknown preset `{}`", args.preset)))?;
    let mix = ArtifactMix {
        decouple: args.decouple,
        dropout: args.dropout,
        spike: args.spike,
        distort: args.distort,
    };
    let s = synthesize(&model, args.duration, args.fs, args.seed, &mix)?;
    write_synthetic(&s, &args.prefix)
}

fn cmd_corpus(args: &CorpusArgs) -> CliResult<()> {
    ensure_dir(&args.dir)?;
    for (seed, s) in STANDARD_SEEDS.iter().zip(standard_corpus()?) {
        write_synthetic(&s, &args.dir.join(format!("standard_{seed}")))?;
    }
    Ok(())
}

/// Reads predictions from an annotation file or, failing that, a truth file.
fn read_predictions(path: &Path) -> CliResult<AnnotationSet> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(Error::io(path, e)))?;
    match AnnotationSet::read_jsonl(text.as_bytes()) {
        Ok(ann) => Ok(ann),
        Err(ann_err) => match GroundTruth::read_jsonl(text.as_bytes()) {
            Ok(t) if !t.beats.is_empty() => Ok(t.to_annotations(ConfigSnapshot {
                fs: 0.0,
                onset: OnsetConfig::default(),
                pipeline: PipelineConfig::default(),
            })),
            _ => Err(Failure::input(format!("{}: {ann_err}", path.display()))),
        },
    }
}

fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    let ann = read_predictions(&args.annotations)?;
    let file = File::open(&args.truth).map_err(|e| Failure::input(Error::io(&args.truth, e)))?;
    let truth = GroundTruth::read_jsonl(BufReader::new(file))
        .map_err(|e| Failure::input(format!("{}: {e}", args.truth.display())))?;
    let stats = evaluate(&ann, &truth)?;
    let json = serde_json::to_string(&stats).map_err(Failure::internal)?;
    println!("{json}");
    Ok(())
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Annotate(a) => cmd_annotate(a),
        Command::Beats(a) => cmd_beats(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Corpus(a) => cmd_corpus(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            i32::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_parsing() {
        assert_eq!(parse_band("0.5:5"), Ok((0.5, 5.0)));
        assert!(parse_band("0.5-5").is_err());
        assert!(parse_band("a:5").is_err());
    }

    #[test]
    fn flags_override_defaults() {
        let args = ConfigArgs {
            r_min: Some(0.9),
            band: Some((1.0, 4.0)),
            cbfv_scale: Some(3.0),
            ..Default::default()
        };
        let r = args.resolve().unwrap();
        assert_eq!(r.pipeline.r_min, 0.9);
        assert_eq!((r.pipeline.band_lo_hz, r.pipeline.band_hi_hz), (1.0, 4.0));
        assert_eq!(r.onset.cbfv_scale, 3.0);
        assert_eq!(r.pipeline.nmse_max, PipelineConfig::default().nmse_max);
        assert_eq!(r.fs, None);
    }

    #[test]
    fn error_codes() {
        assert_eq!(Failure::from(Error::NoOverlap).code, 3);
        assert_eq!(Failure::from(Error::EmptyFile).code, 2);
        let bad = ConfigArgs {
            threshold_fraction: Some(1.5),
            ..Default::default()
        };
        assert_eq!(bad.resolve().unwrap_err().code, 2);
    }
}
