//! Three-stage hierarchical beat classifier.
//!
//! 1. amplitude gate on each beat's velocity range,
//! 2. ABP/CBFV spectral correlation over fixed non-overlapping windows,
//! 3. NMSE against the median template of the beats that survived 1 and 2.
//!
//! A beat rejected at one stage is never revisited by a later one.

mod amplitude;
mod spectral;
mod template;

use serde::{Deserialize, Serialize};

pub use amplitude::stage_amplitude;
pub use spectral::{
    band_correlation, stage_spectral, tile_windows, welch_psd, window_len, window_verdict, Psd,
    SpectralOutcome, Welch, DEGENERATE_R,
};
pub use template::{
    build_template, median_template, nmse, resample_beat, stage_template, Template,
};

pub use crate::annotation::{BeatLabel, Stage, Verdict};
use crate::annotation::{AnnotatedBeat, AnnotationSet, ConfigSnapshot};
use crate::beats::{detect_onsets, segment_beats, OnsetConfig};
use crate::error::{Error, Result};
use crate::signal::{align, Recording};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Lowest plausible CBFV, cm/s.
    pub v_min: f64,
    /// Highest plausible CBFV, cm/s.
    pub v_max: f64,
    pub window_s: f64,
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    pub r_min: f64,
    pub nmse_max: f64,
    pub template_len: usize,
    pub psd_segment_s: f64,
    pub psd_overlap: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            v_min: 5.0,
            v_max: 300.0,
            window_s: 8.0,
            band_lo_hz: 0.5,
            band_hi_hz: 5.0,
            r_min: 0.5,
            nmse_max: 0.2,
            template_len: 100,
            psd_segment_s: 2.0,
            psd_overlap: 0.5,
        }
    }
}

impl PipelineConfig {
    /// Checks internal consistency and compatibility with sample rate `fs`.
    pub fn validate(&self, fs: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let finite = [
            self.v_min,
            self.v_max,
            self.window_s,
            self.band_lo_hz,
            self.band_hi_hz,
            self.r_min,
            self.nmse_max,
            self.psd_segment_s,
            self.psd_overlap,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all thresholds must be finite".into());
        }
        if self.v_min >= self.v_max {
            return bad(format!("v_min {} must be below v_max {}", self.v_min, self.v_max));
        }
        if !(self.band_lo_hz >= 0.0 && self.band_lo_hz < self.band_hi_hz) {
            return bad(format!(
                "band {}:{} Hz is not an increasing range",
                self.band_lo_hz, self.band_hi_hz
            ));
        }
        if self.band_hi_hz >= fs / 2.0 {
            return Err(Error::CutoffAboveNyquist {
                cutoff: self.band_hi_hz,
                nyquist: fs / 2.0,
            });
        }
        if !(self.r_min > 0.0 && self.r_min < 1.0) {
            return bad(format!("r_min must lie in (0, 1), got {}", self.r_min));
        }
        if self.nmse_max <= 0.0 {
            return bad(format!("nmse_max must be positive, got {}", self.nmse_max));
        }
        if self.template_len < 2 {
            return bad(format!("template_len must be at least 2, got {}", self.template_len));
        }
        if !(0.0..1.0).contains(&self.psd_overlap) {
            return bad(format!("psd_overlap must lie in [0, 1), got {}", self.psd_overlap));
        }
        if self.psd_segment_s <= 0.0 || self.psd_segment_s > self.window_s {
            return bad(format!(
                "psd_segment_s {} must be positive and fit in window_s {}",
                self.psd_segment_s, self.window_s
            ));
        }
        Ok(())
    }
}

/// Full classifier output, including intermediate products.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub annotations: AnnotationSet,
    pub onsets: Vec<usize>,
    /// `None` when no beat survived stages 1 and 2.
    pub template: Option<Template>,
}

/// Runs detection, segmentation and the three stages on `rec`.
pub fn classify(rec: &Recording, onset_cfg: &OnsetConfig, cfg: &PipelineConfig) -> Result<AnnotationSet> {
    analyze(rec, onset_cfg, cfg).map(|c| c.annotations)
}

/// Like [`classify`] but also returns the onsets and the template.
pub fn analyze(rec: &Recording, onset_cfg: &OnsetConfig, cfg: &PipelineConfig) -> Result<Classification> {
    let rec = if rec.is_aligned() { rec.clone() } else { align(rec)? };
    let fs = rec.fs();
    fs.check_pipeline_rate()?;
    onset_cfg.validate()?;
    cfg.validate(fs.hz())?;
    let need_s = cfg.window_s.max(onset_cfg.learn_s);
    if rec.duration_s() < need_s {
        return Err(Error::RecordingTooShort {
            have_s: rec.duration_s(),
            need_s,
        });
    }

    let onsets = detect_onsets(&rec.cbfv, onset_cfg)?;
    let beats = segment_beats(&rec.cbfv, &onsets)?;

    let labels: Vec<BeatLabel> = beats.iter().map(|b| stage_amplitude(b, cfg)).collect();
    let SpectralOutcome { windows, labels } = stage_spectral(&rec, &beats, &labels, cfg)?;

    let accepted: Vec<_> = beats
        .iter()
        .zip(&labels)
        .filter(|(_, l)| l.is_good())
        .map(|(b, _)| *b)
        .collect();
    let (labels, template) = match build_template(&accepted, cfg.template_len) {
        Ok(t) => (stage_template(&beats, &labels, &t, cfg)?, Some(t)),
        Err(Error::NoAcceptedBeats) => (labels, None),
        Err(e) => return Err(e),
    };

    let annotations = AnnotationSet {
        config: ConfigSnapshot {
            fs: fs.hz(),
            onset: *onset_cfg,
            pipeline: *cfg,
        },
        beats: beats
            .iter()
            .zip(labels)
            .map(|(b, label)| AnnotatedBeat {
                onset: b.onset,
                end: b.end,
                label,
            })
            .collect(),
        windows,
    };
    Ok(Classification {
        annotations,
        onsets,
        template,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        PipelineConfig::default().validate(125.0).unwrap();
    }

    #[test]
    fn invalid_configs() {
        let base = PipelineConfig::default();
        let cases = [
            PipelineConfig { v_min: 300.0, ..base },
            PipelineConfig { band_lo_hz: 5.0, ..base },
            PipelineConfig { r_min: 1.0, ..base },
            PipelineConfig { r_min: 0.0, ..base },
            PipelineConfig { nmse_max: 0.0, ..base },
            PipelineConfig { template_len: 1, ..base },
            PipelineConfig { psd_overlap: 1.0, ..base },
            PipelineConfig { psd_segment_s: 9.0, ..base },
        ];
        for cfg in cases {
            assert!(cfg.validate(125.0).is_err(), "{cfg:?}");
        }
        assert!(matches!(
            base.validate(9.0),
            Err(Error::CutoffAboveNyquist { .. })
        ));
    }
}
