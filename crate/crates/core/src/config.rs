//! YAML run configuration for the command-line tools.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::board::BoardSpec;
use crate::camera::{CameraModel, ModelKind};
use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::pipeline::{PipelineConfig, Settings};
use crate::pose::PoseConfig;
use crate::refine::RefineConfig;
use crate::solver::{self, SolverConfig};
use crate::synth::{Coverage, RenderSettings};

/// Model family to calibrate and a rough field of view for its initial guess.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub kind: ModelKind,
    pub fov_hint_deg: f64,
}

impl ModelBlock {
    /// Bootstrap starting models for an image of the given size.
    pub fn starts(&self, width: u32, height: u32) -> Result<Vec<CameraModel>> {
        solver::bootstrap_starts(self.kind, self.fov_hint_deg, width, height)
    }
}

fn default_n_frames() -> usize {
    30
}

fn default_coverage() -> Coverage {
    Coverage::FullFov
}

/// A rendered dataset used in place of images on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticBlock {
    /// Ground-truth camera.
    pub model: CameraModel,
    #[serde(default = "default_n_frames")]
    pub n_frames: usize,
    #[serde(default = "default_coverage")]
    pub coverage: Coverage,
    #[serde(default)]
    pub render: RenderSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub target: BoardSpec,
    pub model: ModelBlock,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub refine: RefineConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub pose: PoseConfig,
    /// Directory of 8-bit grayscale PGM or PNG frames.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticBlock>,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn from_yaml(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_yaml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file. Relative paths inside it are taken relative
    /// to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_yaml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(dir) = &cfg.dataset_dir {
            cfg.dataset_dir = Some(base.join(dir));
        }
        cfg.output_dir = base.join(&cfg.output_dir);
        Ok(cfg)
    }

    pub fn to_yaml(&self) -> Result<String> {
        serde_yaml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.dataset_dir, &self.synthetic) {
            (Some(_), Some(_)) => return Err(Error::config("dataset_dir and synthetic are mutually exclusive")),
            (None, None) => return Err(Error::config("one of dataset_dir or synthetic is required")),
            _ => {}
        }
        if !(self.model.fov_hint_deg > 0.0 && self.model.fov_hint_deg < 360.0) {
            return Err(Error::config("model.fov_hint_deg must lie in (0, 360)"));
        }
        if let Some(s) = &self.synthetic {
            if s.n_frames == 0 {
                return Err(Error::config("synthetic.n_frames must be at least 1"));
            }
            s.render.validate()?;
        }
        self.settings().validate()
    }

    pub fn settings(&self) -> Settings {
        Settings { pipeline: self.pipeline, detector: self.detector, refine: self.refine, solver: self.solver, pose: self.pose }
    }
}
