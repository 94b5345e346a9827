//! Synthetic inputs: equirectangular test videos and smooth score fields.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{equirect_to_direction, CameraPose};
use crate::scoring::{GlimpseKey, RandomScorer, ScoreSource};
use crate::video::EquirectSequence;

pub fn constant_sequence(width: u32, height: u32, fps: f64, frames: usize, color: [u8; 3]) -> EquirectSequence {
    let img = RgbImage::from_pixel(width, height, Rgb(color));
    EquirectSequence::from_frames(fps, vec![img; frames]).expect("valid synthetic sequence")
}

/// Paints a Gaussian blob (sigma in degrees) centered at `(theta, phi)` over a
/// dark background.
pub fn blob_frame(width: u32, height: u32, theta_deg: f64, phi_deg: f64, sigma_deg: f64) -> RgbImage {
    let center = CameraPose {
        theta_deg,
        phi_deg,
        focal_scale: 1.0,
    }
    .direction();
    RgbImage::from_fn(width, height, |x, y| {
        let d = equirect_to_direction(x as f64 + 0.5, y as f64 + 0.5, width, height);
        let a = d.angle_to(&center).to_degrees();
        let v = 20.0 + 235.0 * (-(a * a) / (2.0 * sigma_deg * sigma_deg)).exp();
        let v = v.round() as u8;
        Rgb([v, v, v])
    })
}

/// Blob oscillating a few degrees in azimuth around `(theta, phi)`.
pub fn moving_blob_sequence(width: u32, height: u32, fps: f64, frames: usize, theta_deg: f64, phi_deg: f64) -> EquirectSequence {
    let imgs = (0..frames)
        .map(|k| {
            let wobble = 8.0 * (k as f64 * std::f64::consts::TAU / 5.0).sin();
            blob_frame(width, height, theta_deg, phi_deg + wobble, 6.0)
        })
        .collect();
    EquirectSequence::from_frames(fps, imgs).expect("valid synthetic sequence")
}

pub fn static_blob_sequence(width: u32, height: u32, fps: f64, frames: usize, theta_deg: f64, phi_deg: f64) -> EquirectSequence {
    let img = blob_frame(width, height, theta_deg, phi_deg, 6.0);
    EquirectSequence::from_frames(fps, vec![img; frames]).expect("valid synthetic sequence")
}

pub const QUADRANT_COLORS: [[u8; 3]; 4] = [[220, 40, 40], [40, 200, 60], [50, 60, 210], [230, 210, 40]];

/// Four solid azimuth sectors centered on 0, 90, 180 and 270 degrees.
pub fn quadrant_frame(width: u32, height: u32) -> RgbImage {
    RgbImage::from_fn(width, height, |x, _| {
        let phi = (x as f64 + 0.5) / width as f64 * 360.0;
        let q = (((phi + 45.0) / 90.0).floor() as usize) % 4;
        Rgb(QUADRANT_COLORS[q])
    })
}

/// Quadrant color for a direction's azimuth.
pub fn quadrant_color(phi_deg: f64) -> [u8; 3] {
    QUADRANT_COLORS[(((phi_deg + 45.0) / 90.0).floor() as usize) % 4]
}

/// Content that varies smoothly and periodically with azimuth and elevation.
pub fn smooth_frame(width: u32, height: u32, phase: f64) -> RgbImage {
    RgbImage::from_fn(width, height, |x, y| {
        let phi = ((x as f64 + 0.5) / width as f64) * std::f64::consts::TAU;
        let theta = (0.5 - (y as f64 + 0.5) / height as f64) * std::f64::consts::PI;
        let r = 127.5 + 120.0 * (phi + phase).cos();
        let g = 127.5 + 120.0 * (2.0 * phi).sin() * theta.cos();
        let b = 127.5 + 120.0 * theta.sin();
        Rgb([r.round() as u8, g.round() as u8, b.round() as u8])
    })
}

#[derive(Debug, Clone)]
struct Bump {
    theta_deg: f64,
    phi_deg: f64,
    theta_rate: f64,
    phi_rate: f64,
    weight: f64,
    preferred_scale: f64,
}

/// Spatially and temporally correlated scores: a few Gaussian bumps drifting
/// slowly over the sphere, each preferring one zoom level, plus small noise.
#[derive(Debug, Clone)]
pub struct SmoothField {
    bumps: Vec<Bump>,
    sigma_deg: f64,
    noise: RandomScorer,
    noise_amplitude: f64,
}

impl SmoothField {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps = (0..4)
            .map(|_| Bump {
                theta_deg: rng.random_range(-40.0..40.0),
                phi_deg: rng.random_range(0.0..360.0),
                theta_rate: rng.random_range(-0.3..0.3),
                phi_rate: rng.random_range(-1.5..1.5),
                weight: rng.random_range(0.5..1.5),
                preferred_scale: [0.5, 1.0, 1.5][rng.random_range(0..3)],
            })
            .collect();
        Self {
            bumps,
            sigma_deg: 25.0,
            noise: RandomScorer { seed: seed ^ 0x5eed },
            noise_amplitude: 0.02,
        }
    }
}

impl ScoreSource for SmoothField {
    fn score(&self, key: &GlimpseKey) -> Result<f64> {
        let d = key.pose.direction();
        let mut s = 0.0;
        for b in &self.bumps {
            let theta = (b.theta_deg + b.theta_rate * key.t_s).clamp(-80.0, 80.0);
            let c = CameraPose {
                theta_deg: theta,
                phi_deg: b.phi_deg + b.phi_rate * key.t_s,
                focal_scale: 1.0,
            }
            .direction();
            let a = d.angle_to(&c).to_degrees();
            let zoom = 1.0 - 0.2 * (key.pose.focal_scale - b.preferred_scale).abs();
            s += b.weight * zoom * (-(a * a) / (2.0 * self.sigma_deg * self.sigma_deg)).exp();
        }
        Ok(s + self.noise_amplitude * self.noise.score(key)?)
    }
}
