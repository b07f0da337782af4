//! Sampled channels and two-channel recordings.
//!
//! Everything here is an immutable value: operations return new channels
//! rather than mutating in place.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest rate the quality pipeline accepts: twice the Nyquist rate of the
/// 5 Hz upper edge of the spectral band.
pub const MIN_PIPELINE_RATE_HZ: f64 = 20.0;

/// Samples per second. Always positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SampleRate(f64);

impl SampleRate {
    pub fn new(hz: f64) -> Result<Self> {
        if hz.is_finite() && hz > 0.0 {
            Ok(Self(hz))
        } else {
            Err(Error::InvalidSampleRate(hz))
        }
    }

    pub fn hz(self) -> f64 {
        self.0
    }

    /// Seconds between consecutive samples.
    pub fn period(self) -> f64 {
        1.0 / self.0
    }

    pub fn nyquist(self) -> f64 {
        self.0 / 2.0
    }

    /// Rejects rates the downstream spectral stage cannot use.
    pub fn check_pipeline_rate(self) -> Result<()> {
        if self.0 < MIN_PIPELINE_RATE_HZ {
            return Err(Error::RateTooLow {
                hz: self.0,
                min: MIN_PIPELINE_RATE_HZ,
            });
        }
        Ok(())
    }

    /// Number of whole samples spanning `seconds`, rounded to nearest.
    pub fn samples_in(self, seconds: f64) -> usize {
        (seconds * self.0).round().max(0.0) as usize
    }
}

impl TryFrom<f64> for SampleRate {
    type Error = Error;

    fn try_from(hz: f64) -> Result<Self> {
        Self::new(hz)
    }
}

impl From<SampleRate> for f64 {
    fn from(fs: SampleRate) -> f64 {
        fs.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    /// Cerebral blood flow velocity, cm/s.
    Cbfv,
    /// Arterial blood pressure, mmHg.
    Abp,
}

/// A uniformly sampled, finite, non-empty signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    samples: Vec<f64>,
    fs: SampleRate,
    kind: ChannelKind,
}

impl Channel {
    pub fn new(kind: ChannelKind, fs: SampleRate, samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyChannel);
        }
        if let Some(line) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                line,
                column: kind.column_name().to_string(),
            });
        }
        Ok(Self { samples, fs, kind })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn fs(&self) -> SampleRate {
        self.fs
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Length in seconds, counted as `len / fs`.
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs.hz()
    }

    /// Same kind and rate, new samples. The caller guarantees finiteness.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        debug_assert!(!samples.is_empty());
        Self {
            samples,
            fs: self.fs,
            kind: self.kind,
        }
    }

    fn truncated(&self, len: usize) -> Self {
        self.with_samples(self.samples[..len].to_vec())
    }
}

impl ChannelKind {
    pub fn column_name(self) -> &'static str {
        match self {
            ChannelKind::Cbfv => "cbfv",
            ChannelKind::Abp => "abp",
        }
    }
}

/// Simultaneously recorded ABP and CBFV.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub cbfv: Channel,
    pub abp: Channel,
    /// Free-form wall-clock stamp of the first sample, if known.
    pub start_time: Option<String>,
}

impl Recording {
    pub fn new(cbfv: Channel, abp: Channel) -> Result<Self> {
        if cbfv.kind() != ChannelKind::Cbfv || abp.kind() != ChannelKind::Abp {
            return Err(Error::InvalidConfig(
                "recording needs one CBFV and one ABP channel".into(),
            ));
        }
        Ok(Self {
            cbfv,
            abp,
            start_time: None,
        })
    }

    pub fn with_start_time(mut self, stamp: impl Into<String>) -> Self {
        self.start_time = Some(stamp.into());
        self
    }

    pub fn is_aligned(&self) -> bool {
        self.cbfv.fs() == self.abp.fs() && self.cbfv.len() == self.abp.len()
    }

    /// Shared sample rate. Meaningful once aligned; otherwise the CBFV rate.
    pub fn fs(&self) -> SampleRate {
        self.cbfv.fs()
    }

    pub fn len(&self) -> usize {
        self.cbfv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cbfv.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.cbfv.duration_s()
    }
}

/// Linearly interpolates `ch` onto a uniform grid at `target`, spanning the
/// same time range `[0, (n-1)/fs]`. The first sample is kept exactly.
pub fn resample_channel(ch: &Channel, target: SampleRate) -> Result<Channel> {
    if ch.is_empty() {
        return Err(Error::EmptyChannel);
    }
    if target == ch.fs() {
        return Ok(ch.clone());
    }
    let x = ch.samples();
    let ratio = ch.fs().hz() / target.hz();
    let span = (x.len() - 1) as f64 / ratio;
    // Tolerate rounding so an exact grid endpoint is not lost.
    let n_out = (span + 1e-9).floor() as usize + 1;
    let last = x.len() - 1;
    let out = (0..n_out)
        .map(|j| {
            let pos = j as f64 * ratio;
            let i = (pos.floor() as usize).min(last);
            if i == last {
                return x[last];
            }
            let frac = pos - i as f64;
            x[i] + (x[i + 1] - x[i]) * frac
        })
        .collect();
    Ok(Channel {
        samples: out,
        fs: target,
        kind: ch.kind(),
    })
}

/// Brings both channels onto the higher of the two rates and truncates them
/// to the shorter length.
pub fn align(rec: &Recording) -> Result<Recording> {
    let (cbfv, abp) = match rec.cbfv.fs().partial_cmp(&rec.abp.fs()) {
        Some(std::cmp::Ordering::Less) => (
            resample_channel(&rec.cbfv, rec.abp.fs())?,
            rec.abp.clone(),
        ),
        Some(std::cmp::Ordering::Greater) => (
            rec.cbfv.clone(),
            resample_channel(&rec.abp, rec.cbfv.fs())?,
        ),
        _ => (rec.cbfv.clone(), rec.abp.clone()),
    };
    let len = cbfv.len().min(abp.len());
    let cbfv = if cbfv.len() > len { cbfv.truncated(len) } else { cbfv };
    let abp = if abp.len() > len { abp.truncated(len) } else { abp };
    Ok(Recording {
        cbfv,
        abp,
        start_time: rec.start_time.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(kind: ChannelKind, hz: f64, v: Vec<f64>) -> Channel {
        Channel::new(kind, SampleRate::new(hz).unwrap(), v).unwrap()
    }

    #[test]
    fn sample_rate_rejects_nonpositive() {
        assert!(SampleRate::new(0.0).is_err());
        assert!(SampleRate::new(-3.0).is_err());
        assert!(SampleRate::new(f64::NAN).is_err());
        assert!(SampleRate::new(10.0).unwrap().check_pipeline_rate().is_err());
        assert!(SampleRate::new(20.0).unwrap().check_pipeline_rate().is_ok());
    }

    #[test]
    fn channel_rejects_nan_and_empty() {
        let fs = SampleRate::new(10.0).unwrap();
        assert!(matches!(
            Channel::new(ChannelKind::Cbfv, fs, vec![]),
            Err(Error::EmptyChannel)
        ));
        assert!(matches!(
            Channel::new(ChannelKind::Cbfv, fs, vec![1.0, f64::NAN]),
            Err(Error::NonFiniteSample { line: 1, .. })
        ));
    }

    #[test]
    fn resample_constant() {
        let c = ch(ChannelKind::Cbfv, 100.0, vec![50.0; 333]);
        for hz in [37.0, 125.0, 250.0, 1000.0] {
            let r = resample_channel(&c, SampleRate::new(hz).unwrap()).unwrap();
            assert!(r.samples().iter().all(|&v| v == 50.0));
        }
    }

    #[test]
    fn resample_midpoint() {
        let c = ch(ChannelKind::Cbfv, 1.0, vec![0.0, 1.0]);
        let r = resample_channel(&c, SampleRate::new(2.0).unwrap()).unwrap();
        assert_eq!(r.samples(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn resample_sine_against_closed_form() {
        let x: Vec<f64> = (0..1000)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / 100.0).sin())
            .collect();
        let c = ch(ChannelKind::Cbfv, 100.0, x);
        let r = resample_channel(&c, SampleRate::new(125.0).unwrap()).unwrap();
        let worst = r
            .samples()
            .iter()
            .enumerate()
            .map(|(j, v)| (v - (2.0 * std::f64::consts::PI * j as f64 / 125.0).sin()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "max deviation {worst}");
        assert_eq!(r.samples()[0], c.samples()[0]);
    }

    #[test]
    fn align_identity_and_truncation() {
        let rec = Recording::new(
            ch(ChannelKind::Cbfv, 125.0, vec![60.0; 1250]),
            ch(ChannelKind::Abp, 125.0, vec![80.0; 1250]),
        )
        .unwrap();
        assert_eq!(align(&rec).unwrap(), rec);

        let rec = Recording::new(
            ch(ChannelKind::Cbfv, 125.0, vec![60.0; 1250]),
            ch(ChannelKind::Abp, 125.0, vec![80.0; 1125]),
        )
        .unwrap();
        let a = align(&rec).unwrap();
        assert_eq!(a.cbfv.len(), 1125);
        assert_eq!(a.abp.len(), 1125);
        assert!((a.duration_s() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn align_upsamples_lower_rate() {
        let cb: Vec<f64> = (0..1000).map(|i| 60.0 + (i as f64 * 0.05).sin()).collect();
        let rec = Recording::new(
            ch(ChannelKind::Cbfv, 100.0, cb),
            ch(ChannelKind::Abp, 125.0, vec![80.0; 1250]),
        )
        .unwrap();
        let a = align(&rec).unwrap();
        assert!(a.is_aligned());
        assert_eq!(a.fs().hz(), 125.0);
        let oracle = resample_channel(&rec.cbfv, SampleRate::new(125.0).unwrap()).unwrap();
        assert_eq!(a.cbfv.samples(), &oracle.samples()[..a.len()]);
        assert_eq!(align(&a).unwrap(), a);
    }
}
