//! Contact detection from synchronized audio and force/torque streams.
//!
//! The pipeline frames the microphone signal into short-time power, turns
//! the force and torque magnitudes into spectral centroid, spread and flux,
//! aligns everything on the audio frame timeline and classifies each frame
//! with a random forest. Synthetic trials, dataset splitting and the
//! evaluation protocol live alongside so the whole chain can be exercised
//! end to end.

pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod io;
pub mod pipeline;
pub mod signal;
pub mod stream;
pub mod synth;

pub use dataset::{Label, LabeledDataset, SplitMode, SplitSpec};
pub use error::{Error, Result};
pub use features::{FeatureMatrix, FeatureRow, FEATURE_NAMES, N_FEATURES};
pub use forest::{ForestConfig, MaxFeatures, RandomForestModel};
pub use signal::{FrameSpec, MultimodalRecording, TimeSeries};
pub use stream::{ContactDetector, ContactEvent, StreamingExtractor};
pub use config::PipelineConfig;
