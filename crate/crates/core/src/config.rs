//! Pipeline configuration, stored as TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::SplitSpec;
use crate::error::{Error, Result};
use crate::forest::ForestConfig;
use crate::signal::FrameSpec;
use crate::synth::VariationRanges;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Trial directories and `manifest.csv`.
    pub data_dir: PathBuf,
    pub model: PathBuf,
    pub report_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            data_dir: "data".into(),
            model: "model.json".into(),
            report_dir: "reports".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelConfig {
    /// Rows within this many seconds of a contact are labeled contact.
    pub window: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self { window: 0.018 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { n_min: 1, n_max: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { k: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_trials: usize,
    pub seed: u64,
    pub ranges: VariationRanges,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_trials: 60,
            seed: 0,
            ranges: VariationRanges::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    /// Positive frames closer than this (s) merge into one event.
    pub merge_gap: f64,
    /// Length of the simulated stream chunks fed to the detector, s.
    pub chunk: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            merge_gap: 0.1,
            chunk: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub audio_frames: AudioFrames,
    pub wrench_frames: WrenchFrames,
    pub labels: LabelConfig,
    pub split: SplitSpec,
    pub forest: ForestConfig,
    pub sweep: SweepConfig,
    pub cv: CvConfig,
    pub synth: SynthConfig,
    pub detect: DetectConfig,
}

/// Audio framing, defaulting to 512-sample frames with a 160-sample hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AudioFrames(pub FrameSpec);

impl Default for AudioFrames {
    fn default() -> Self {
        Self(FrameSpec::AUDIO)
    }
}

/// Wrench framing, defaulting to 160-sample frames with a 128-sample hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WrenchFrames(pub FrameSpec);

impl Default for WrenchFrames {
    fn default() -> Self {
        Self(FrameSpec::WRENCH)
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.audio_frames.0.validate()?;
        self.wrench_frames.0.validate()?;
        self.split.validate()?;
        self.forest.validate()?;
        if !(self.labels.window > 0.0) {
            return Err(Error::invalid("labels", "window must be > 0"));
        }
        if self.sweep.n_min == 0 || self.sweep.n_min > self.sweep.n_max {
            return Err(Error::invalid(
                "sweep",
                format!("bad n_estimators range {}..={}", self.sweep.n_min, self.sweep.n_max),
            ));
        }
        if self.cv.k < 2 {
            return Err(Error::invalid("cv", "k must be >= 2"));
        }
        if !(self.detect.merge_gap >= 0.0 && self.detect.chunk > 0.0) {
            return Err(Error::invalid("detect", "merge_gap must be >= 0 and chunk > 0"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::format("<config>", e))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::parse(text, Path::new("<config>"))
    }

    fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::format(path, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }
}
