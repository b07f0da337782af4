//! Beat-by-beat artifact segmentation of transcranial Doppler CBFV.
//!
//! A recording of simultaneously sampled ABP and CBFV is split into beats by
//! a slope-sum onset detector, and each beat is labeled good or artifact by
//! three stages applied in order:
//!
//! 1. an amplitude gate (CBFV outside 5..300 cm/s),
//! 2. the correlation of ABP and CBFV power spectra within 0.5..5 Hz over
//!    8 s windows,
//! 3. the normalized mean squared error against a median beat template.
//!
//! ```no_run
//! use cbfv_seg::{classify, gen_recording, OnsetConfig, PipelineConfig, PulseModel};
//!
//! let synth = gen_recording(&PulseModel::default(), 120.0, 125.0, 7)?;
//! let ann = classify(&synth.recording, &OnsetConfig::default(), &PipelineConfig::default())?;
//! println!("{:.1}% good", 100.0 * ann.good_fraction());
//! # Ok::<(), cbfv_seg::Error>(())
//! ```

pub mod annotation;
pub mod beats;
pub mod cli;
pub mod error;
mod filter;
pub mod io;
pub mod quality;
pub mod signal;
pub mod synth;

pub use annotation::{AnnotatedBeat, AnnotationSet, BeatLabel, ConfigSnapshot, SpectralWindow, Stage, Verdict};
pub use beats::{causal_lowpass, detect_onsets, lowpass, scale_cbfv, segment_beats, slope_sum, Beat, OnsetConfig};
pub use error::{Error, Result};
pub use io::{load_recording, read_annotations, read_csv, save_csv, write_annotations, write_csv, InputFormat};
pub use quality::{analyze, classify, Classification, PipelineConfig, Psd, Template};
pub use signal::{align, resample_channel, Channel, ChannelKind, Recording, SampleRate};
pub use synth::{
    evaluate, gen_recording, inject, standard_corpus, synthesize, ArtifactKind, ArtifactMix, ArtifactSpec, ConfusionStats, GroundTruth,
    PulseModel, Synthetic, TruthBeat,
};
