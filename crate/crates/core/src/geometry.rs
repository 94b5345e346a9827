//! Spherical conventions and the rectilinear viewport model.
//!
//! Coordinates:
//!
//! ```text
//! theta  elevation above the equator, degrees, [-90, 90]
//! phi    azimuth, degrees, [0, 360)
//! dir    (cos t cos p, cos t sin p, sin t)   with +x forward, +z up
//! ```
//!
//! Azimuth increases toward the viewer's right when looking along (0, 0)
//! from the sphere center, which is also the direction in which the
//! equirectangular column index grows: `u = phi / 360 * width`,
//! `v = (0.5 - theta / 180) * height`. A rendered viewport therefore shows
//! equirectangular content without mirroring.
//!
//! The viewport is a plane tangent to the sphere at the principal axis. Its
//! horizontal half-extent is `tan(fov / 2)`; the vertical extent follows the
//! output aspect ratio on the same plane, so pixels are square.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Horizontal FOV, in degrees, of the base focal length (`focal_scale == 1`).
pub const BASE_FOV_DEG: f64 = 65.5;

/// Virtual camera state: principal axis direction and zoom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub focal_scale: f64,
}

impl CameraPose {
    pub fn new(theta_deg: f64, phi_deg: f64, focal_scale: f64) -> Result<Self> {
        if !theta_deg.is_finite() || !(-90.0..=90.0).contains(&theta_deg) {
            return Err(Error::InvalidArgument(format!(
                "elevation {theta_deg} outside [-90, 90]"
            )));
        }
        if !phi_deg.is_finite() {
            return Err(Error::InvalidArgument(format!("azimuth {phi_deg} is not finite")));
        }
        if !(focal_scale > 0.0) || !focal_scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "focal scale {focal_scale} must be positive"
            )));
        }
        Ok(Self {
            theta_deg,
            phi_deg: normalize_azimuth(phi_deg),
            focal_scale,
        })
    }

    /// Pose with the base focal length.
    pub fn looking(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        Self::new(theta_deg, phi_deg, 1.0)
    }

    pub fn direction(&self) -> SphereDirection {
        pose_to_direction(self)
    }

    pub fn fov_deg(&self) -> f64 {
        // focal_scale > 0 is a type invariant
        fov_from_focal(self.focal_scale).unwrap_or(BASE_FOV_DEG)
    }
}

/// Wraps an azimuth into [0, 360).
pub fn normalize_azimuth(phi_deg: f64) -> f64 {
    let p = phi_deg.rem_euclid(360.0);
    // rem_euclid can return exactly 360.0 for tiny negative inputs
    if p >= 360.0 {
        0.0
    } else {
        p
    }
}

/// Smallest absolute azimuth difference, in [0, 180].
pub fn azimuth_gap(a_deg: f64, b_deg: f64) -> f64 {
    let d = (a_deg - b_deg).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Unit vector on the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereDirection {
    x: f64,
    y: f64,
    z: f64,
}

impl SphereDirection {
    /// Normalizes `(x, y, z)`; fails on the zero vector.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !(n > 1e-300) || !n.is_finite() {
            return Err(Error::InvalidArgument("direction has zero length".into()));
        }
        Ok(Self {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    pub fn forward() -> Self {
        Self { x: 1.0, y: 0.0, z: 0.0 }
    }

    pub fn xyz(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &SphereDirection) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn elevation_deg(&self) -> f64 {
        self.z.clamp(-1.0, 1.0).asin().to_degrees()
    }

    /// Azimuth in [0, 360); 0 at the poles.
    pub fn azimuth_deg(&self) -> f64 {
        if self.x.abs() < 1e-15 && self.y.abs() < 1e-15 {
            return 0.0;
        }
        normalize_azimuth(self.y.atan2(self.x).to_degrees())
    }

    /// Great-circle angle in radians. Uses atan2 of cross and dot for accuracy
    /// at both small and near-antipodal separations.
    pub fn angle_to(&self, other: &SphereDirection) -> f64 {
        let cx = self.y * other.z - self.z * other.y;
        let cy = self.z * other.x - self.x * other.z;
        let cz = self.x * other.y - self.y * other.x;
        let cross = (cx * cx + cy * cy + cz * cz).sqrt();
        cross.atan2(self.dot(other))
    }

    /// Point halfway along the shorter great circle. Falls back to `self` for
    /// antipodal inputs, where the midpoint is undefined.
    pub fn midpoint(&self, other: &SphereDirection) -> SphereDirection {
        SphereDirection::new(self.x + other.x, self.y + other.y, self.z + other.z)
            .unwrap_or(*self)
    }

    /// Spherical linear interpolation, `s` in [0, 1].
    pub fn slerp(&self, other: &SphereDirection, s: f64) -> SphereDirection {
        let omega = self.angle_to(other);
        if omega < 1e-12 {
            return *self;
        }
        let so = omega.sin();
        if so.abs() < 1e-12 {
            return if s < 0.5 { *self } else { *other };
        }
        let a = ((1.0 - s) * omega).sin() / so;
        let b = (s * omega).sin() / so;
        SphereDirection::new(
            a * self.x + b * other.x,
            a * self.y + b * other.y,
            a * self.z + b * other.z,
        )
        .unwrap_or(*self)
    }

    /// Pose with this principal axis and the given zoom.
    pub fn to_pose(&self, focal_scale: f64) -> CameraPose {
        CameraPose {
            theta_deg: self.elevation_deg(),
            phi_deg: self.azimuth_deg(),
            focal_scale,
        }
    }
}

/// Output image size and horizontal field of view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameGeometry {
    pub width: u32,
    pub height: u32,
    pub fov_deg: f64,
}

impl FrameGeometry {
    pub fn new(width: u32, height: u32, fov_deg: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "frame size {width}x{height} must be at least 1x1"
            )));
        }
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(Error::InvalidArgument(format!(
                "field of view {fov_deg} outside (0, 180)"
            )));
        }
        Ok(Self {
            width,
            height,
            fov_deg,
        })
    }

    /// Geometry whose FOV matches the pose's zoom.
    pub fn for_pose(pose: &CameraPose, width: u32, height: u32) -> Result<Self> {
        Self::new(width, height, fov_from_focal(pose.focal_scale)?)
    }

    /// Tangent-plane units per pixel.
    fn plane_scale(&self) -> f64 {
        (self.fov_deg.to_radians() / 2.0).tan() / (self.width as f64 / 2.0)
    }

    /// Vertical field of view implied by the aspect ratio.
    pub fn vertical_fov_deg(&self) -> f64 {
        let half = self.plane_scale() * self.height as f64 / 2.0;
        2.0 * half.atan().to_degrees()
    }
}

/// Horizontal FOV in degrees for a focal length given as a multiple of the
/// base focal length.
pub fn fov_from_focal(focal_scale: f64) -> Result<f64> {
    if !(focal_scale > 0.0) || !focal_scale.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "focal scale {focal_scale} must be positive"
        )));
    }
    if focal_scale == 1.0 {
        return Ok(BASE_FOV_DEG);
    }
    let half = (BASE_FOV_DEG.to_radians() / 2.0).tan() / focal_scale;
    Ok(2.0 * half.atan().to_degrees())
}

/// Great-circle angle between the principal axes, degrees in [0, 180].
pub fn angular_distance(a: &CameraPose, b: &CameraPose) -> f64 {
    a.direction().angle_to(&b.direction()).to_degrees()
}

pub fn pose_to_direction(p: &CameraPose) -> SphereDirection {
    let (st, ct) = p.theta_deg.to_radians().sin_cos();
    let (sp, cp) = p.phi_deg.to_radians().sin_cos();
    SphereDirection {
        x: ct * cp,
        y: ct * sp,
        z: st,
    }
}

pub fn direction_to_pose(d: &SphereDirection, focal_scale: f64) -> CameraPose {
    d.to_pose(focal_scale)
}

/// Orthonormal camera frame (forward, right, up) for a pose. Right is the
/// direction of increasing azimuth, so it stays defined at the poles.
fn camera_basis(pose: &CameraPose) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let (st, ct) = pose.theta_deg.to_radians().sin_cos();
    let (sp, cp) = pose.phi_deg.to_radians().sin_cos();
    let forward = [ct * cp, ct * sp, st];
    let right = [-sp, cp, 0.0];
    let up = [-st * cp, -st * sp, ct];
    (forward, right, up)
}

/// Maps a continuous viewport coordinate (pixel `(i, j)` covers
/// `[i, i+1) x [j, j+1)`) to its viewing direction.
pub fn viewport_pixel_to_direction(
    px: (f64, f64),
    pose: &CameraPose,
    geom: &FrameGeometry,
) -> Result<SphereDirection> {
    let (x, y) = px;
    let (w, h) = (geom.width as f64, geom.height as f64);
    if !(x >= 0.0 && x <= w && y >= 0.0 && y <= h) {
        return Err(Error::InvalidArgument(format!(
            "pixel ({x}, {y}) outside {}x{} viewport",
            geom.width, geom.height
        )));
    }
    Ok(viewport_ray(x, y, pose, geom))
}

/// Unchecked version of [`viewport_pixel_to_direction`] for the render loop.
pub(crate) fn viewport_ray(x: f64, y: f64, pose: &CameraPose, geom: &FrameGeometry) -> SphereDirection {
    let (f, r, u) = camera_basis(pose);
    let scale = geom.plane_scale();
    let a = (x - geom.width as f64 / 2.0) * scale;
    let b = (geom.height as f64 / 2.0 - y) * scale;
    let v = [
        f[0] + a * r[0] + b * u[0],
        f[1] + a * r[1] + b * u[1],
        f[2] + a * r[2] + b * u[2],
    ];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    SphereDirection {
        x: v[0] / n,
        y: v[1] / n,
        z: v[2] / n,
    }
}

/// Projects a direction onto the viewport plane. `None` when the direction is
/// behind the camera.
pub fn direction_to_viewport(
    d: &SphereDirection,
    pose: &CameraPose,
    geom: &FrameGeometry,
) -> Option<(f64, f64)> {
    let (f, r, u) = camera_basis(pose);
    let v = d.xyz();
    let depth = v[0] * f[0] + v[1] * f[1] + v[2] * f[2];
    if depth <= 1e-12 {
        return None;
    }
    let a = (v[0] * r[0] + v[1] * r[1] + v[2] * r[2]) / depth;
    let b = (v[0] * u[0] + v[1] * u[1] + v[2] * u[2]) / depth;
    let scale = geom.plane_scale();
    Some((
        a / scale + geom.width as f64 / 2.0,
        geom.height as f64 / 2.0 - b / scale,
    ))
}

/// Continuous equirectangular coordinates `(u, v)` of a direction.
pub fn direction_to_equirect(d: &SphereDirection, width: u32, height: u32) -> (f64, f64) {
    let u = d.azimuth_deg() / 360.0 * width as f64;
    let v = (0.5 - d.elevation_deg() / 180.0) * height as f64;
    (u, v)
}

pub fn equirect_to_direction(u: f64, v: f64, width: u32, height: u32) -> SphereDirection {
    let phi = u / width as f64 * 360.0;
    let theta = (0.5 - v / height as f64) * 180.0;
    pose_to_direction(&CameraPose {
        theta_deg: theta.clamp(-90.0, 90.0),
        phi_deg: phi,
        focal_scale: 1.0,
    })
}
