use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotatedBeat, AnnotationSet, BeatLabel, Stage, Verdict};
use crate::error::{Error, Result};
use crate::synth::{ArtifactKind, GroundTruth, TruthBeat};

/// Agreement between predicted and true beat labels. Artifact is the
/// positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionStats {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// `(fp + fn) / (tp + tn + fp + fn)`.
    pub disagreement: f64,
    /// `None` when there are no true artifacts.
    pub sensitivity: Option<f64>,
    /// `None` when there are no true good beats.
    pub specificity: Option<f64>,
}

impl ConfusionStats {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    fn from_counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        let total = tp + tn + fp + fn_;
        Self {
            tp,
            tn,
            fp,
            fn_,
            disagreement: ratio(fp + fn_, total).unwrap_or(0.0),
            sensitivity: ratio(tp, tp + fn_),
            specificity: ratio(tn, tn + fp),
        }
    }
}

fn overlap(a: (usize, usize), b: (usize, usize)) -> usize {
    a.1.min(b.1).saturating_sub(a.0.max(b.0))
}

/// Index of the interval in sorted, disjoint `spans` overlapping `target`
/// the most. Ties go to the earlier interval.
fn best_overlap<T>(spans: &[T], span_of: impl Fn(&T) -> (usize, usize), target: (usize, usize)) -> Option<usize> {
    let first = spans.partition_point(|s| span_of(s).1 <= target.0);
    let mut best: Option<(usize, usize)> = None;
    for (i, s) in spans.iter().enumerate().skip(first) {
        let span = span_of(s);
        if span.0 >= target.1 {
            break;
        }
        let ov = overlap(span, target);
        if ov > 0 && best.is_none_or(|(_, b)| ov > b) {
            best = Some((i, ov));
        }
    }
    best.map(|(i, _)| i)
}

/// Share of a predicted beat a truth artifact must cover to take precedence
/// over a good truth beat with larger overlap.
pub const ARTIFACT_COVER: f64 = 1.0 / 3.0;

/// For each predicted beat, the truth beat with maximal overlap, except that
/// the most-overlapping artifact wins if it covers at least
/// [`ARTIFACT_COVER`] of the prediction. Stage-0 predictions map to `None`.
pub fn match_predictions(ann: &AnnotationSet, truth: &GroundTruth) -> Vec<Option<usize>> {
    let span = |t: &TruthBeat| (t.onset, t.end);
    ann.beats
        .iter()
        .map(|p| {
            if p.label == BeatLabel::Unclassified {
                return None;
            }
            let target = (p.onset, p.end);
            let first = truth.beats.partition_point(|t| t.end <= p.onset);
            let artifact = truth.beats[first..]
                .iter()
                .enumerate()
                .take_while(|(_, t)| t.onset < p.end)
                .filter(|(_, t)| t.label == Verdict::Artifact)
                .map(|(i, t)| (first + i, overlap(span(t), target)))
                .max_by_key(|&(i, ov)| (ov, std::cmp::Reverse(i)));
            match artifact {
                Some((i, ov)) if ov as f64 >= ARTIFACT_COVER * (p.end - p.onset) as f64 => Some(i),
                _ => best_overlap(&truth.beats, span, target),
            }
        })
        .collect()
}

/// Scores every classifiable predicted beat against its matched truth beat.
pub fn evaluate(ann: &AnnotationSet, truth: &GroundTruth) -> Result<ConfusionStats> {
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (pred, m) in ann.beats.iter().zip(match_predictions(ann, truth)) {
        let Some(j) = m else { continue };
        match (pred.label.verdict(), truth.beats[j].label) {
            (Verdict::Artifact, Verdict::Artifact) => tp += 1,
            (Verdict::Good, Verdict::Good) => tn += 1,
            (Verdict::Artifact, Verdict::Good) => fp += 1,
            (Verdict::Good, Verdict::Artifact) => fn_ += 1,
        }
    }
    let stats = ConfusionStats::from_counts(tp, tn, fp, fn_);
    if stats.total() == 0 {
        return Err(Error::NoOverlap);
    }
    Ok(stats)
}

/// Share of truth beats injected with `kind` whose maximally overlapping
/// classifiable prediction was rejected at `stage`. Decoupled beats only
/// count when their onset lies inside a decoupled span, since the spectral
/// stage attributes beats by onset. `None` if no such beat is covered.
pub fn stage_hit_rate(
    ann: &AnnotationSet,
    truth: &GroundTruth,
    kind: ArtifactKind,
    stage: Stage,
) -> Option<f64> {
    let classified: Vec<&AnnotatedBeat> = ann
        .beats
        .iter()
        .filter(|b| b.label != BeatLabel::Unclassified)
        .collect();
    let (mut hits, mut total) = (0usize, 0usize);
    for t in truth.beats.iter().filter(|t| t.kind == Some(kind)) {
        if kind == ArtifactKind::Decouple
            && !truth.decoupled.iter().any(|&(a, b)| (a..b).contains(&t.onset))
        {
            continue;
        }
        let Some(i) = best_overlap(&classified, |p: &&AnnotatedBeat| (p.onset, p.end), (t.onset, t.end)) else {
            continue;
        };
        total += 1;
        if classified[i].label.stage() == Some(stage) {
            hits += 1;
        }
    }
    (total > 0).then(|| hits as f64 / total as f64)
}
