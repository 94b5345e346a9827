use std::path::Path;

use serde::Deserialize;
use vcam_core::{Error, Result, ScorerSpec};

/// Values read from a `--config` JSON file. Every field is optional; flags
/// override them and built-in defaults fill the rest.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub video_id: Option<String>,
    pub video_length_s: Option<f64>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub windows: Option<usize>,
    pub window_fraction: Option<f64>,
    pub center_sigma_steps: Option<f64>,
    pub scorer: Option<ScorerSpec>,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub schedule: Option<String>,
    pub transition_s: Option<f64>,
    pub fps: Option<f64>,
    pub bind: Option<String>,
}

pub const DEFAULT_K: usize = 20;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_FPS: f64 = 30.0;
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_VIDEO_ID: &str = "video";

impl Config {
    pub fn read(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&s).map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))
    }
}
