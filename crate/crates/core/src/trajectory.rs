//! Keyframed camera paths and their JSON file format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CameraPose;
use crate::grid::{GlimpseGrid, GlimpseIndex, TransitionConstraints};
use crate::scoring::ScoreField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "KeyframeRecord", into = "KeyframeRecord")]
pub struct Keyframe {
    pub t_s: f64,
    pub pose: CameraPose,
}

#[derive(Serialize, Deserialize)]
struct KeyframeRecord {
    t_s: f64,
    theta_deg: f64,
    phi_deg: f64,
    focal_scale: f64,
}

impl From<KeyframeRecord> for Keyframe {
    fn from(r: KeyframeRecord) -> Self {
        Keyframe {
            t_s: r.t_s,
            pose: CameraPose {
                theta_deg: r.theta_deg,
                phi_deg: r.phi_deg,
                focal_scale: r.focal_scale,
            },
        }
    }
}

impl From<Keyframe> for KeyframeRecord {
    fn from(k: Keyframe) -> Self {
        KeyframeRecord {
            t_s: k.t_s,
            theta_deg: k.pose.theta_deg,
            phi_deg: k.pose.phi_deg,
            focal_scale: k.pose.focal_scale,
        }
    }
}

/// Where a trajectory came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iteration: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl TrajectoryMeta {
    pub fn mode(mode: impl Into<String>) -> Self {
        Self {
            mode: mode.into(),
            ..Self::default()
        }
    }
}

/// One pose per grid time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub keyframes: Vec<Keyframe>,
    pub total_score: f64,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(keyframes: Vec<Keyframe>, total_score: f64) -> Self {
        Self {
            keyframes,
            total_score,
            meta: TrajectoryMeta::default(),
        }
    }

    pub fn with_meta(mut self, meta: TrajectoryMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Builds a trajectory from lattice indices, one per time step.
    pub fn from_glimpses(grid: &GlimpseGrid, path: &[GlimpseIndex], total_score: f64) -> Self {
        Self::new(
            path.iter()
                .map(|g| Keyframe {
                    t_s: grid.t_s(g),
                    pose: grid.pose(g),
                })
                .collect(),
            total_score,
        )
    }

    /// Lattice indices of the keyframes; fails on off-grid poses.
    pub fn glimpses(&self, grid: &GlimpseGrid) -> Result<Vec<GlimpseIndex>> {
        self.keyframes
            .iter()
            .map(|k| {
                let t_idx = grid
                    .time_index(k.t_s)
                    .ok_or_else(|| Error::InvalidArgument(format!("keyframe time {} s not on grid", k.t_s)))?;
                grid.locate(t_idx, &k.pose)
                    .ok_or_else(|| Error::InvalidArgument(format!("keyframe pose {:?} not on grid", k.pose)))
            })
            .collect()
    }

    /// Seconds from the first keyframe to the end of the last glimpse.
    pub fn span_s(&self, keyframe_interval_s: f64) -> f64 {
        self.keyframes.last().map_or(0.0, |k| k.t_s + keyframe_interval_s)
    }

    pub fn to_file(&self, video_id: &str, grid: &GlimpseGrid) -> TrajectoryFile {
        TrajectoryFile {
            video_id: video_id.to_string(),
            grid: grid.clone(),
            keyframe_interval_s: grid.time_step_s(),
            keyframes: self.keyframes.clone(),
            total_score: self.total_score,
            meta: self.meta.clone(),
            frame_track: None,
        }
    }
}

/// Per-frame pose track recorded by the annotation editor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedTrack {
    pub fps: f64,
    pub poses: Vec<CameraPose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pan_offset_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub editor_id: Option<String>,
}

/// On-disk trajectory. Human annotations carry `frame_track` and may leave
/// `keyframes` empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub video_id: String,
    pub grid: GlimpseGrid,
    pub keyframe_interval_s: f64,
    pub keyframes: Vec<Keyframe>,
    pub total_score: f64,
    pub meta: TrajectoryMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_track: Option<RecordedTrack>,
}

impl TrajectoryFile {
    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            keyframes: self.keyframes.clone(),
            total_score: self.total_score,
            meta: self.meta.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: TrajectoryFile = serde_json::from_str(s)?;
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.keyframe_interval_s > 0.0) {
            return Err(Error::Data("keyframe interval must be positive".into()));
        }
        if !self.total_score.is_finite() {
            return Err(Error::Data("total score must be finite".into()));
        }
        let poses = self
            .keyframes
            .iter()
            .map(|k| &k.pose)
            .chain(self.frame_track.iter().flat_map(|t| t.poses.iter()));
        for p in poses {
            CameraPose::new(p.theta_deg, p.phi_deg, p.focal_scale)
                .map_err(|e| Error::Data(format!("bad pose: {e}")))?;
        }
        if self.keyframes.windows(2).any(|w| w[1].t_s <= w[0].t_s) {
            return Err(Error::Data("keyframe times must increase".into()));
        }
        if let Some(track) = &self.frame_track {
            if !(track.fps > 0.0) || track.poses.is_empty() {
                return Err(Error::Data("frame track needs positive fps and at least one pose".into()));
            }
        } else if self.keyframes.is_empty() {
            return Err(Error::Data("trajectory has neither keyframes nor a frame track".into()));
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

/// Checks a trajectory against the lattice and the smoothness rule, directly
/// from the grid's value lists. Returns a description of the first violation.
pub fn check_feasible(traj: &Trajectory, grid: &GlimpseGrid, c: &TransitionConstraints) -> Result<(), String> {
    if traj.keyframes.len() != grid.n_t() {
        return Err(format!("{} keyframes for {} time steps", traj.keyframes.len(), grid.n_t()));
    }
    let pos = |values: &[f64], x: f64| values.iter().position(|v| (v - x).abs() < 1e-6);
    let mut prev: Option<(usize, usize, f64)> = None;
    for (i, (k, &t)) in traj.keyframes.iter().zip(grid.t_values()).enumerate() {
        if (k.t_s - t).abs() > 1e-6 {
            return Err(format!("keyframe {i} at {} s, expected {t} s", k.t_s));
        }
        let ti = pos(grid.theta_values(), k.pose.theta_deg).ok_or(format!("keyframe {i}: elevation off grid"))?;
        let pi = pos(grid.phi_values(), k.pose.phi_deg).ok_or(format!("keyframe {i}: azimuth off grid"))?;
        pos(grid.f_values(), k.pose.focal_scale).ok_or(format!("keyframe {i}: focal scale off grid"))?;
        if let Some((pt, pp, pf)) = prev {
            let n = grid.n_phi() as i64;
            let raw = (pi as i64 - pp as i64).rem_euclid(n);
            let dphi = raw.min(n - raw) as usize;
            if (ti as i64 - pt as i64).unsigned_abs() as usize > c.eps_theta_steps {
                return Err(format!("keyframe {i}: elevation jump"));
            }
            if dphi > c.eps_phi_steps {
                return Err(format!("keyframe {i}: azimuth jump"));
            }
            if (k.pose.focal_scale - pf).abs() > c.max_delta_focal + 1e-9 {
                return Err(format!("keyframe {i}: zoom jump"));
            }
        }
        prev = Some((ti, pi, k.pose.focal_scale));
    }
    Ok(())
}

/// Sum of the field's scores along the trajectory.
pub fn score_trajectory(traj: &Trajectory, field: &ScoreField) -> Result<f64> {
    let glimpses = traj.glimpses(field.grid())?;
    field.materialize(&glimpses)?;
    glimpses.iter().map(|g| field.get(g)).sum()
}
