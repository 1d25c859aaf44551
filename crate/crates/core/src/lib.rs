//! Speaker change detection.
//!
//! Two families of segmenters share one feature pipeline:
//!
//! * ΔBIC segmentation over MFCC vectors with a growing or a fixed window
//!   ([`bic`]).
//! * Pitch-driven segmentation: jumps in the f0 track propose candidates that a
//!   short ΔBIC check accepts or rejects ([`pitch_seg`]).
//!
//! [`eval`] scores change points against a reference and times segmenters
//! against each other; [`synth`] builds labelled test signals.

pub mod audio;
pub mod bic;
pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod pipeline;
pub mod pitch;
pub mod pitch_seg;
pub mod synth;

pub use audio::{load_wav, write_wav, AudioBuffer};
pub use bic::{BicConfig, ChangePoint};
pub use config::RunConfig;
pub use error::{Error, ErrorClass, Result};
pub use eval::{evaluate, f_measure, ChangePointSet, EvalReport};
pub use features::{mfcc, FeatureMatrix, MfccConfig};
pub use pipeline::Method;
pub use pitch::{pitch_track, PitchConfig, PitchMethod, PitchTrack};
pub use pitch_seg::{PitchSegConfig, SegmentationResult};
pub use synth::{synthesize, SynthConfig};
