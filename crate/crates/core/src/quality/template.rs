//! Median beat template and per-beat self-similarity.

use crate::annotation::{BeatLabel, Stage};
use crate::beats::Beat;
use crate::error::{Error, Result};
use crate::quality::PipelineConfig;

/// Canonical CBFV pulse: pointwise median of accepted beats, each resampled
/// to the template length.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub values: Vec<f64>,
    pub n_beats: usize,
}

impl Template {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// True when the template has no variance, which makes NMSE undefined.
    pub fn is_flat(&self) -> bool {
        let m = self.mean();
        self.values.iter().all(|v| *v == m)
    }
}

/// Linear interpolation of `samples` onto `len` evenly spaced points that
/// include both endpoints.
pub fn resample_beat(samples: &[f64], len: usize) -> Result<Vec<f64>> {
    if samples.len() < 2 {
        return Err(Error::BeatTooShort(samples.len()));
    }
    if len < 2 {
        return Err(Error::InvalidConfig(format!(
            "template length must be at least 2, got {len}"
        )));
    }
    if samples.len() == len {
        return Ok(samples.to_vec());
    }
    let last = samples.len() - 1;
    let step = last as f64 / (len - 1) as f64;
    Ok((0..len)
        .map(|j| {
            if j == len - 1 {
                return samples[last];
            }
            let pos = j as f64 * step;
            let i = (pos.floor() as usize).min(last - 1);
            let frac = pos - i as f64;
            samples[i] + (samples[i + 1] - samples[i]) * frac
        })
        .collect())
}

pub fn build_template(beats: &[Beat<'_>], template_len: usize) -> Result<Template> {
    if beats.is_empty() {
        return Err(Error::NoAcceptedBeats);
    }
    let resampled = beats
        .iter()
        .map(|b| resample_beat(b.samples, template_len))
        .collect::<Result<Vec<_>>>()?;
    Ok(median_template(&resampled))
}

/// Pointwise median; the mean of the two middle values for even counts.
pub fn median_template(resampled: &[Vec<f64>]) -> Template {
    let len = resampled[0].len();
    let mut column = vec![0.0; resampled.len()];
    let values = (0..len)
        .map(|j| {
            for (slot, beat) in column.iter_mut().zip(resampled) {
                *slot = beat[j];
            }
            column.sort_by(f64::total_cmp);
            let mid = column.len() / 2;
            if column.len() % 2 == 1 {
                column[mid]
            } else {
                0.5 * (column[mid - 1] + column[mid])
            }
        })
        .collect();
    Template {
        values,
        n_beats: resampled.len(),
    }
}

/// Residual power over template variance:
/// `sum (b - t)^2 / sum (t - mean(t))^2`. Infinite for a flat template.
pub fn nmse(beat_resampled: &[f64], template: &[f64]) -> Result<f64> {
    if beat_resampled.len() != template.len() {
        return Err(Error::LengthMismatch {
            left: beat_resampled.len(),
            right: template.len(),
        });
    }
    let mean = template.iter().sum::<f64>() / template.len() as f64;
    let variance: f64 = template.iter().map(|t| (t - mean).powi(2)).sum();
    if variance == 0.0 {
        return Ok(f64::INFINITY);
    }
    let residual: f64 = beat_resampled
        .iter()
        .zip(template)
        .map(|(b, t)| (b - t).powi(2))
        .sum();
    Ok(residual / variance)
}

/// Rejects still-good beats whose NMSE against `template` exceeds
/// `nmse_max`. A flat template leaves all labels untouched.
pub fn stage_template(
    beats: &[Beat<'_>],
    labels: &[BeatLabel],
    template: &Template,
    cfg: &PipelineConfig,
) -> Result<Vec<BeatLabel>> {
    if template.is_flat() {
        return Ok(labels.to_vec());
    }
    beats
        .iter()
        .zip(labels)
        .map(|(beat, &label)| {
            if !label.is_good() {
                return Ok(label);
            }
            let resampled = resample_beat(beat.samples, template.len())?;
            let err = nmse(&resampled, &template.values)?;
            Ok(if err > cfg.nmse_max {
                BeatLabel::Artifact {
                    stage: Stage::Template,
                    metric: err,
                }
            } else {
                label
            })
        })
        .collect()
}
