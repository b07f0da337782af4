use crate::annotation::{BeatLabel, Stage};
use crate::beats::Beat;
use crate::quality::PipelineConfig;

/// Hard velocity gate: a beat dipping below `v_min` or exceeding `v_max`
/// is rejected. The low violation is reported when both occur.
pub fn stage_amplitude(beat: &Beat<'_>, cfg: &PipelineConfig) -> BeatLabel {
    let lo = beat.min();
    if lo < cfg.v_min {
        return BeatLabel::Artifact {
            stage: Stage::Amplitude,
            metric: lo,
        };
    }
    let hi = beat.max();
    if hi > cfg.v_max {
        return BeatLabel::Artifact {
            stage: Stage::Amplitude,
            metric: hi,
        };
    }
    BeatLabel::Good
}
