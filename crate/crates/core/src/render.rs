//! Perspective viewport rendering from equirectangular frames.

use std::path::Path;

use image::{Rgb, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{direction_to_equirect, fov_from_focal, viewport_ray, CameraPose, FrameGeometry};
use crate::trajectory::{Trajectory, TrajectoryFile};
use crate::video::{frame_file_name, write_png, EquirectSequence, FrameManifest};

pub const DEFAULT_WIDTH: u32 = 640;
pub const DEFAULT_HEIGHT: u32 = 360;
pub const DEFAULT_TRANSITION_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum ScheduleMode {
    /// Hold each keyframe pose for its whole segment.
    Hold,
    /// Blend into each keyframe over the `window_s` seconds before it.
    Smooth { window_s: f64 },
}

impl Default for ScheduleMode {
    fn default() -> Self {
        ScheduleMode::Hold
    }
}

/// One camera pose per output frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSchedule {
    pub fps: f64,
    pub poses: Vec<CameraPose>,
}

/// Per-frame poses for `frames` frames at `fps`, frame `i` shown at `i / fps`.
///
/// In smooth mode the direction is slerped and the focal scale linearly
/// blended over `[t_k - w, t_k]`, so every keyframe pose is reached exactly
/// at its own time.
pub fn expand_schedule(
    traj: &Trajectory,
    fps: f64,
    frames: usize,
    keyframe_interval_s: f64,
    mode: ScheduleMode,
) -> Result<PoseSchedule> {
    if !(fps > 0.0) || !fps.is_finite() {
        return Err(Error::InvalidArgument(format!("fps {fps} must be positive")));
    }
    if !(keyframe_interval_s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "keyframe interval {keyframe_interval_s} must be positive"
        )));
    }
    if traj.keyframes.is_empty() {
        return Err(Error::InvalidArgument("trajectory has no keyframes".into()));
    }
    let kf = &traj.keyframes;
    let t0 = kf[0].t_s;
    let window = match mode {
        ScheduleMode::Hold => 0.0,
        ScheduleMode::Smooth { window_s } => {
            if !(window_s >= 0.0) {
                return Err(Error::InvalidArgument(format!("transition window {window_s} is negative")));
            }
            window_s.min(keyframe_interval_s)
        }
    };
    let poses = (0..frames)
        .map(|i| {
            let t = i as f64 / fps;
            let k = (((t - t0) / keyframe_interval_s).floor().max(0.0) as usize).min(kf.len() - 1);
            let held = kf[k].pose;
            if window > 0.0 && k + 1 < kf.len() {
                let next = &kf[k + 1];
                let start = next.t_s - window;
                if t > start {
                    let s = (t - start) / window;
                    let d = held.direction().slerp(&next.pose.direction(), s);
                    let f = held.focal_scale + s * (next.pose.focal_scale - held.focal_scale);
                    return d.to_pose(f);
                }
            }
            held
        })
        .collect();
    Ok(PoseSchedule { fps, poses })
}

/// Bilinear sample at continuous equirect coordinates, wrapping horizontally
/// and clamping vertically.
fn sample(src: &RgbImage, u: f64, v: f64) -> [u8; 3] {
    let (w, h) = (src.width() as i64, src.height() as i64);
    let x = u - 0.5;
    let y = (v - 0.5).clamp(0.0, (h - 1) as f64);
    let x0 = x.floor();
    let y0 = y.floor();
    let ax = x - x0;
    let ay = y - y0;
    let xi0 = (x0 as i64).rem_euclid(w) as u32;
    let xi1 = (x0 as i64 + 1).rem_euclid(w) as u32;
    let yi0 = y0 as u32;
    let yi1 = (y0 as i64 + 1).min(h - 1) as u32;
    let p00 = src.get_pixel(xi0, yi0).0;
    let p10 = src.get_pixel(xi1, yi0).0;
    let p01 = src.get_pixel(xi0, yi1).0;
    let p11 = src.get_pixel(xi1, yi1).0;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let top = p00[c] as f64 * (1.0 - ax) + p10[c] as f64 * ax;
        let bottom = p01[c] as f64 * (1.0 - ax) + p11[c] as f64 * ax;
        out[c] = (top * (1.0 - ay) + bottom * ay).round().clamp(0.0, 255.0) as u8;
    }
    out
}

pub fn render_frame(src: &RgbImage, pose: &CameraPose, geom: &FrameGeometry) -> Result<RgbImage> {
    if src.width() == 0 || src.height() == 0 {
        return Err(Error::Data("source frame is empty".into()));
    }
    let expected = fov_from_focal(pose.focal_scale)?;
    if (geom.fov_deg - expected).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "output FOV {} does not match focal scale {} ({expected})",
            geom.fov_deg, pose.focal_scale
        )));
    }
    let (w, h) = (geom.width, geom.height);
    let mut buf = vec![0u8; w as usize * h as usize * 3];
    buf.par_chunks_mut(w as usize * 3).enumerate().for_each(|(y, row)| {
        for x in 0..w as usize {
            let d = viewport_ray(x as f64 + 0.5, y as f64 + 0.5, pose, geom);
            let (u, v) = direction_to_equirect(&d, src.width(), src.height());
            row[x * 3..x * 3 + 3].copy_from_slice(&sample(src, u, v));
        }
    });
    Ok(RgbImage::from_raw(w, h, buf).expect("buffer sized to image"))
}

/// Renders one output frame per input frame over the trajectory's span and
/// hands them to `sink` in order.
pub fn render_trajectory(
    seq: &EquirectSequence,
    traj: &Trajectory,
    keyframe_interval_s: f64,
    out_size: (u32, u32),
    mode: ScheduleMode,
    mut sink: impl FnMut(usize, RgbImage) -> Result<()>,
) -> Result<usize> {
    let span = traj.span_s(keyframe_interval_s);
    let needed = ((span * seq.fps()) - 1e-9).ceil().max(1.0) as usize;
    let n = needed.min(seq.len());
    let schedule = expand_schedule(traj, seq.fps(), n, keyframe_interval_s, mode)?;
    let batch = rayon::current_num_threads().max(1);
    for start in (0..n).step_by(batch) {
        let end = (start + batch).min(n);
        let frames: Vec<Result<RgbImage>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let pose = &schedule.poses[i];
                let geom = FrameGeometry::for_pose(pose, out_size.0, out_size.1)?;
                render_frame(&*seq.frame(i)?, pose, &geom)
            })
            .collect();
        for (i, f) in (start..end).zip(frames) {
            sink(i, f?)?;
        }
    }
    Ok(n)
}

/// Renders into `dir` as numbered PNGs with a manifest and the trajectory file.
pub fn render_to_dir(
    seq: &EquirectSequence,
    file: &TrajectoryFile,
    out_size: (u32, u32),
    mode: ScheduleMode,
    dir: &Path,
) -> Result<usize> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let traj = file.trajectory();
    let n = render_trajectory(seq, &traj, file.keyframe_interval_s, out_size, mode, |i, img| {
        write_png(&img, &dir.join(frame_file_name(i)))
    })?;
    FrameManifest {
        width: out_size.0,
        height: out_size.1,
        fps: seq.fps(),
        frame_count: n,
    }
    .write(dir)?;
    file.write(&dir.join("trajectory.json"))?;
    Ok(n)
}

pub fn solid(width: u32, height: u32, color: [u8; 3]) -> RgbImage {
    RgbImage::from_pixel(width, height, Rgb(color))
}
