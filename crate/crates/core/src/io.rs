//! CSV recordings and annotation files on disk.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::annotation::AnnotationSet;
use crate::error::{Error, Result};
use crate::signal::{Channel, ChannelKind, Recording, SampleRate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputFormat {
    /// Header `t,abp,cbfv`, or `abp,cbfv` together with an explicit rate.
    #[default]
    Csv,
}

/// Loads a recording. `fs` overrides the rate implied by the time column and
/// is required when there is none.
pub fn load_recording(
    path: impl AsRef<Path>,
    format: InputFormat,
    fs: Option<SampleRate>,
) -> Result<Recording> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        InputFormat::Csv => read_csv(BufReader::new(file), fs),
    }
}

pub fn read_csv<R: Read>(input: R, fs: Option<SampleRate>) -> Result<Recording> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::EmptyFile);
    }
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let t_col = find("t");
    let abp_col = find("abp").ok_or_else(|| Error::MissingColumn("abp".into()))?;
    let cbfv_col = find("cbfv").ok_or_else(|| Error::MissingColumn("cbfv".into()))?;

    let mut times = Vec::new();
    let mut abp = Vec::new();
    let mut cbfv = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let cell = |col: usize, name: &str| -> Result<f64> {
            let raw = record.get(col).ok_or_else(|| Error::MissingColumn(name.into()))?;
            let v: f64 = raw.parse().map_err(|_| Error::BadCell {
                line,
                column: name.into(),
                value: raw.into(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteSample {
                    line,
                    column: name.into(),
                });
            }
            Ok(v)
        };
        if let Some(col) = t_col {
            let t = cell(col, "t")?;
            if times.last().is_some_and(|&prev| t <= prev) {
                return Err(Error::NonMonotoneTime { line });
            }
            times.push(t);
        }
        abp.push(cell(abp_col, "abp")?);
        cbfv.push(cell(cbfv_col, "cbfv")?);
    }
    if cbfv.is_empty() {
        return Err(Error::EmptyFile);
    }
    let fs = match fs {
        Some(fs) => fs,
        None => rate_from_times(&times)?,
    };
    Recording::new(
        Channel::new(ChannelKind::Cbfv, fs, cbfv)?,
        Channel::new(ChannelKind::Abp, fs, abp)?,
    )
}

/// Mean rate implied by first and last time stamps, snapped to a whole
/// number of hertz when within 1 ppm of one.
fn rate_from_times(times: &[f64]) -> Result<SampleRate> {
    if times.len() < 2 {
        return Err(Error::MissingSampleRate);
    }
    let span = times[times.len() - 1] - times[0];
    let hz = (times.len() - 1) as f64 / span;
    let whole = hz.round();
    let hz = if (hz - whole).abs() <= 1e-6 * hz { whole } else { hz };
    SampleRate::new(hz)
}

/// Writes `t,abp,cbfv` rows; the output loads back to an equal recording.
pub fn write_csv<W: Write>(rec: &Recording, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    let io = |e| Error::io("<csv>", e);
    writeln!(out, "t,abp,cbfv").map_err(io)?;
    let fs = rec.fs().hz();
    for (i, (a, c)) in rec.abp.samples().iter().zip(rec.cbfv.samples()).enumerate() {
        writeln!(out, "{},{a},{c}", i as f64 / fs).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn save_csv(rec: &Recording, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(rec, file).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn write_annotations(ann: &AnnotationSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    ann.write_jsonl(BufWriter::new(file))
        .map_err(|e| Error::io(path, e))
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<AnnotationSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    AnnotationSet::read_jsonl(BufReader::new(file))
}
