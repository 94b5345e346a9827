//! The discrete candidate space of glimpses: elevation x azimuth x start
//! time x focal scale, plus the transition rule between consecutive steps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraPose, SphereDirection};
use crate::trajectory::Trajectory;

pub const GLIMPSE_DURATION_S: f64 = 5.0;
pub const FULL_THETA: [f64; 11] = [-75.0, -45.0, -30.0, -20.0, -10.0, 0.0, 10.0, 20.0, 30.0, 45.0, 75.0];
pub const COARSE_THETA: [f64; 6] = [-75.0, -30.0, -10.0, 10.0, 30.0, 75.0];
pub const ZOOM_SCALES: [f64; 3] = [0.5, 1.0, 1.5];
pub const COARSE_SCALE: f64 = 0.5;

const VALUE_TOL: f64 = 1e-6;

/// Position of one glimpse inside a [`GlimpseGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GlimpseIndex {
    pub t_idx: usize,
    pub theta_idx: usize,
    pub phi_idx: usize,
    pub f_idx: usize,
}

impl GlimpseIndex {
    pub fn new(t_idx: usize, theta_idx: usize, phi_idx: usize, f_idx: usize) -> Self {
        Self {
            t_idx,
            theta_idx,
            phi_idx,
            f_idx,
        }
    }

    /// Same direction and zoom at another time step.
    pub fn at_step(self, t_idx: usize) -> Self {
        Self { t_idx, ..self }
    }
}

/// Smoothness limits between consecutive glimpses. Direction limits are in
/// list-index steps (1 = 8-adjacency); the zoom limit is in focal-scale units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionConstraints {
    pub eps_theta_steps: usize,
    pub eps_phi_steps: usize,
    pub max_delta_focal: f64,
}

impl Default for TransitionConstraints {
    fn default() -> Self {
        Self {
            eps_theta_steps: 1,
            eps_phi_steps: 1,
            max_delta_focal: 0.5,
        }
    }
}

impl TransitionConstraints {
    pub fn new(eps_theta_steps: usize, eps_phi_steps: usize, max_delta_focal: f64) -> Result<Self> {
        if !(max_delta_focal >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "zoom limit {max_delta_focal} must be non-negative"
            )));
        }
        Ok(Self {
            eps_theta_steps,
            eps_phi_steps,
            max_delta_focal,
        })
    }

    /// Whether `b` may follow `a` (time indices are not checked).
    pub fn allows(&self, grid: &GlimpseGrid, a: &GlimpseIndex, b: &GlimpseIndex) -> bool {
        a.theta_idx.abs_diff(b.theta_idx) <= self.eps_theta_steps
            && grid.phi_steps_between(a.phi_idx, b.phi_idx) <= self.eps_phi_steps
            && (grid.f_values[a.f_idx] - grid.f_values[b.f_idx]).abs() <= self.max_delta_focal + 1e-9
    }
}

/// Serialized form of a grid; also the JSON grid manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridManifest {
    pub theta_values: Vec<f64>,
    pub phi_values: Vec<f64>,
    pub t_values: Vec<f64>,
    pub f_values: Vec<f64>,
    pub glimpse_duration_s: f64,
    pub time_step_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridManifest", into = "GridManifest")]
pub struct GlimpseGrid {
    theta_values: Vec<f64>,
    phi_values: Vec<f64>,
    t_values: Vec<f64>,
    f_values: Vec<f64>,
    glimpse_duration_s: f64,
    time_step_s: f64,
}

impl TryFrom<GridManifest> for GlimpseGrid {
    type Error = Error;

    fn try_from(m: GridManifest) -> Result<Self> {
        GlimpseGrid::new(
            m.theta_values,
            m.phi_values,
            m.t_values,
            m.f_values,
            m.glimpse_duration_s,
            m.time_step_s,
        )
    }
}

impl From<GlimpseGrid> for GridManifest {
    fn from(g: GlimpseGrid) -> Self {
        GridManifest {
            theta_values: g.theta_values,
            phi_values: g.phi_values,
            t_values: g.t_values,
            f_values: g.f_values,
            glimpse_duration_s: g.glimpse_duration_s,
            time_step_s: g.time_step_s,
        }
    }
}

fn strictly_increasing(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidArgument(format!("{name} list is empty")));
    }
    if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!("{name} values must be finite and strictly increasing")));
    }
    Ok(())
}

impl GlimpseGrid {
    pub fn new(
        theta_values: Vec<f64>,
        phi_values: Vec<f64>,
        t_values: Vec<f64>,
        f_values: Vec<f64>,
        glimpse_duration_s: f64,
        time_step_s: f64,
    ) -> Result<Self> {
        strictly_increasing("theta", &theta_values)?;
        strictly_increasing("phi", &phi_values)?;
        strictly_increasing("t", &t_values)?;
        strictly_increasing("f", &f_values)?;
        if theta_values[0] < -90.0 || theta_values[theta_values.len() - 1] > 90.0 {
            return Err(Error::InvalidArgument("theta values outside [-90, 90]".into()));
        }
        if phi_values[0] < 0.0 || phi_values[phi_values.len() - 1] >= 360.0 {
            return Err(Error::InvalidArgument("phi values outside [0, 360)".into()));
        }
        if f_values[0] <= 0.0 {
            return Err(Error::InvalidArgument("focal scales must be positive".into()));
        }
        if !(glimpse_duration_s > 0.0) || !(time_step_s > 0.0) {
            return Err(Error::InvalidArgument("durations must be positive".into()));
        }
        if t_values
            .windows(2)
            .any(|w| ((w[1] - w[0]) - time_step_s).abs() > VALUE_TOL)
        {
            return Err(Error::InvalidArgument(format!(
                "t values must be spaced by {time_step_s} s"
            )));
        }
        Ok(Self {
            theta_values,
            phi_values,
            t_values,
            f_values,
            glimpse_duration_s,
            time_step_s,
        })
    }

    pub fn theta_values(&self) -> &[f64] {
        &self.theta_values
    }
    pub fn phi_values(&self) -> &[f64] {
        &self.phi_values
    }
    pub fn t_values(&self) -> &[f64] {
        &self.t_values
    }
    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }
    pub fn glimpse_duration_s(&self) -> f64 {
        self.glimpse_duration_s
    }
    pub fn time_step_s(&self) -> f64 {
        self.time_step_s
    }

    pub fn n_theta(&self) -> usize {
        self.theta_values.len()
    }
    pub fn n_phi(&self) -> usize {
        self.phi_values.len()
    }
    pub fn n_t(&self) -> usize {
        self.t_values.len()
    }
    pub fn n_f(&self) -> usize {
        self.f_values.len()
    }

    pub fn directions_per_step(&self) -> usize {
        self.n_theta() * self.n_phi()
    }

    pub fn glimpses_per_step(&self) -> usize {
        self.directions_per_step() * self.n_f()
    }

    /// Total number of glimpses.
    pub fn len(&self) -> usize {
        self.glimpses_per_step() * self.n_t()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Seconds covered by the glimpses: last start plus one glimpse.
    pub fn covered_length_s(&self) -> f64 {
        self.t_values[self.n_t() - 1] + self.time_step_s.max(self.glimpse_duration_s)
    }

    pub fn contains(&self, g: &GlimpseIndex) -> bool {
        g.t_idx < self.n_t() && g.theta_idx < self.n_theta() && g.phi_idx < self.n_phi() && g.f_idx < self.n_f()
    }

    pub fn check(&self, g: &GlimpseIndex) -> Result<()> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("glimpse {g:?} outside grid")))
        }
    }

    /// Position of `(theta, phi, f)` within one time step, in lexicographic order.
    pub fn step_offset(&self, g: &GlimpseIndex) -> usize {
        (g.theta_idx * self.n_phi() + g.phi_idx) * self.n_f() + g.f_idx
    }

    pub fn from_step_offset(&self, t_idx: usize, offset: usize) -> GlimpseIndex {
        let f_idx = offset % self.n_f();
        let rest = offset / self.n_f();
        GlimpseIndex::new(t_idx, rest / self.n_phi(), rest % self.n_phi(), f_idx)
    }

    /// Dense linear index over the whole grid.
    pub fn linear(&self, g: &GlimpseIndex) -> usize {
        g.t_idx * self.glimpses_per_step() + self.step_offset(g)
    }

    pub fn direction_index(&self, g: &GlimpseIndex) -> usize {
        g.theta_idx * self.n_phi() + g.phi_idx
    }

    /// All glimpses at one time step, lexicographic in (theta, phi, f).
    pub fn step(&self, t_idx: usize) -> impl Iterator<Item = GlimpseIndex> + '_ {
        (0..self.glimpses_per_step()).map(move |o| self.from_step_offset(t_idx, o))
    }

    pub fn iter(&self) -> impl Iterator<Item = GlimpseIndex> + '_ {
        (0..self.n_t()).flat_map(move |t| self.step(t))
    }

    pub fn pose(&self, g: &GlimpseIndex) -> CameraPose {
        CameraPose {
            theta_deg: self.theta_values[g.theta_idx],
            phi_deg: self.phi_values[g.phi_idx],
            focal_scale: self.f_values[g.f_idx],
        }
    }

    pub fn t_s(&self, g: &GlimpseIndex) -> f64 {
        self.t_values[g.t_idx]
    }

    /// Cyclic distance between two azimuth indices.
    pub fn phi_steps_between(&self, a: usize, b: usize) -> usize {
        let n = self.n_phi();
        let d = a.abs_diff(b) % n;
        d.min(n - d)
    }

    fn find(values: &[f64], x: f64) -> Option<usize> {
        values.iter().position(|v| (v - x).abs() <= VALUE_TOL)
    }

    pub fn time_index(&self, t_s: f64) -> Option<usize> {
        Self::find(&self.t_values, t_s)
    }

    /// Exact lookup of a lattice-valued pose at a time step.
    pub fn locate(&self, t_idx: usize, pose: &CameraPose) -> Option<GlimpseIndex> {
        if t_idx >= self.n_t() {
            return None;
        }
        let theta_idx = Self::find(&self.theta_values, pose.theta_deg)?;
        let phi_idx = Self::find(&self.phi_values, crate::geometry::normalize_azimuth(pose.phi_deg))
            .or_else(|| Self::find(&self.phi_values, pose.phi_deg - 360.0))?;
        let f_idx = Self::find(&self.f_values, pose.focal_scale)?;
        Some(GlimpseIndex::new(t_idx, theta_idx, phi_idx, f_idx))
    }

    pub fn focal_index(&self, focal_scale: f64) -> Option<usize> {
        Self::find(&self.f_values, focal_scale)
    }

    /// Nearest grid direction by great-circle angle; ties go to the smaller
    /// (theta_idx, phi_idx).
    pub fn nearest_direction(&self, d: &SphereDirection) -> (usize, usize) {
        self.nearest_direction_where(d, |_, _| true)
            .expect("grid has at least one direction")
    }

    pub(crate) fn nearest_direction_where(
        &self,
        d: &SphereDirection,
        keep: impl Fn(usize, usize) -> bool,
    ) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for ti in 0..self.n_theta() {
            for pi in 0..self.n_phi() {
                if !keep(ti, pi) {
                    continue;
                }
                let g = CameraPose {
                    theta_deg: self.theta_values[ti],
                    phi_deg: self.phi_values[pi],
                    focal_scale: 1.0,
                };
                let a = d.angle_to(&g.direction());
                if best.map_or(true, |(_, b)| a < b - 1e-12) {
                    best = Some(((ti, pi), a));
                }
            }
        }
        best.map(|(ix, _)| ix)
    }

    /// Direction indices within the given index radius, clamped in elevation
    /// and wrapped in azimuth, sorted and deduplicated.
    pub fn direction_neighbors(&self, theta_idx: usize, phi_idx: usize, eps_theta: usize, eps_phi: usize) -> Vec<(usize, usize)> {
        let lo = theta_idx.saturating_sub(eps_theta);
        let hi = (theta_idx + eps_theta).min(self.n_theta() - 1);
        let n = self.n_phi();
        let mut phis: Vec<usize> = if 2 * eps_phi + 1 >= n {
            (0..n).collect()
        } else {
            (0..=2 * eps_phi)
                .map(|k| (phi_idx + n * (eps_phi / n + 1) + k - eps_phi) % n)
                .collect()
        };
        phis.sort_unstable();
        phis.dedup();
        (lo..=hi)
            .flat_map(|t| phis.iter().map(move |&p| (t, p)))
            .collect()
    }
}

/// Full candidate grid for a video of `video_length_s` seconds. The time axis
/// stops at the last complete glimpse.
pub fn build_full_grid(video_length_s: f64, with_zoom: bool) -> Result<GlimpseGrid> {
    if !(video_length_s >= GLIMPSE_DURATION_S) {
        return Err(Error::InvalidArgument(format!(
            "video length {video_length_s} s shorter than one glimpse"
        )));
    }
    let n_t = (video_length_s / GLIMPSE_DURATION_S + 1e-9).floor() as usize;
    GlimpseGrid::new(
        FULL_THETA.to_vec(),
        (0..18).map(|i| i as f64 * 20.0).collect(),
        (0..n_t).map(|i| i as f64 * GLIMPSE_DURATION_S).collect(),
        if with_zoom { ZOOM_SCALES.to_vec() } else { vec![1.0] },
        GLIMPSE_DURATION_S,
        GLIMPSE_DURATION_S,
    )
}

/// Coarse grid: every other elevation/azimuth, every other start time, widest
/// FOV only.
pub fn build_coarse_grid(video_length_s: f64) -> Result<GlimpseGrid> {
    let step = 2.0 * GLIMPSE_DURATION_S;
    if !(video_length_s >= step) {
        return Err(Error::InvalidArgument(format!(
            "video length {video_length_s} s shorter than one coarse step"
        )));
    }
    let n_t = (video_length_s / step + 1e-9).floor() as usize;
    GlimpseGrid::new(
        COARSE_THETA.to_vec(),
        (0..9).map(|i| i as f64 * 40.0).collect(),
        (0..n_t).map(|i| i as f64 * step).collect(),
        vec![COARSE_SCALE],
        GLIMPSE_DURATION_S,
        step,
    )
}

/// Glimpses at `t_idx + 1` reachable from `g`, lexicographic in (theta, phi, f).
pub fn feasible_successors(g: &GlimpseIndex, grid: &GlimpseGrid, c: &TransitionConstraints) -> Result<Vec<GlimpseIndex>> {
    grid.check(g)?;
    if g.t_idx + 1 >= grid.n_t() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (ti, pi) in grid.direction_neighbors(g.theta_idx, g.phi_idx, c.eps_theta_steps, c.eps_phi_steps) {
        for fi in 0..grid.n_f() {
            if (grid.f_values[fi] - grid.f_values[g.f_idx]).abs() <= c.max_delta_focal + 1e-9 {
                out.push(GlimpseIndex::new(g.t_idx + 1, ti, pi, fi));
            }
        }
    }
    Ok(out)
}

/// Candidates for the refinement stage: per time step, every fine direction
/// within one index step of the trajectory's (snapped) direction, crossed
/// with every focal scale.
pub fn refinement_neighborhood(traj0: &Trajectory, fine_grid: &GlimpseGrid) -> Result<Vec<Vec<GlimpseIndex>>> {
    if traj0.keyframes.len() != fine_grid.n_t() {
        return Err(Error::InvalidArgument(format!(
            "trajectory has {} keyframes but the grid has {} time steps",
            traj0.keyframes.len(),
            fine_grid.n_t()
        )));
    }
    traj0
        .keyframes
        .iter()
        .enumerate()
        .map(|(t_idx, kf)| {
            if (kf.t_s - fine_grid.t_values[t_idx]).abs() > VALUE_TOL {
                return Err(Error::InvalidArgument(format!(
                    "keyframe {t_idx} at {} s does not match grid time {} s",
                    kf.t_s, fine_grid.t_values[t_idx]
                )));
            }
            let (ti, pi) = fine_grid.nearest_direction(&kf.pose.direction());
            Ok(fine_grid
                .direction_neighbors(ti, pi, 1, 1)
                .into_iter()
                .flat_map(|(t, p)| (0..fine_grid.n_f()).map(move |f| GlimpseIndex::new(t_idx, t, p, f)))
                .collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{Keyframe, Trajectory};

    #[test]
    fn full_grid_counts() {
        let g = build_full_grid(60.0, true).unwrap();
        assert_eq!(g.directions_per_step(), 198);
        assert_eq!(g.len(), 11 * 18 * 12 * 3);
        assert_eq!(g.len(), 7128);
        let g = build_full_grid(5.0, false).unwrap();
        assert_eq!(g.len(), 198);
        assert_eq!(g.n_t(), 1);
        assert!(build_full_grid(4.9, true).is_err());
    }

    #[test]
    fn truncates_partial_glimpse() {
        let g = build_full_grid(63.0, true).unwrap();
        assert_eq!(g.n_t(), 12);
        assert_eq!(*g.t_values().last().unwrap(), 55.0);
    }

    #[test]
    fn coarse_grid_counts() {
        let c = build_coarse_grid(60.0).unwrap();
        assert_eq!(c.len(), 324);
        let f = build_full_grid(60.0, true).unwrap();
        let ratio = c.len() as f64 / f.len() as f64;
        assert!((ratio - 0.0455).abs() < 0.001, "{ratio}");
        assert_eq!(build_coarse_grid(10.0).unwrap().n_t(), 1);
        assert!(build_coarse_grid(9.0).is_err());
    }

    #[test]
    fn coarse_values_subset_of_full() {
        for l in [10.0, 60.0, 600.0] {
            let c = build_coarse_grid(l).unwrap();
            let f = build_full_grid(l, true).unwrap();
            let sub = |a: &[f64], b: &[f64]| a.iter().all(|x| b.contains(x));
            assert!(sub(c.theta_values(), f.theta_values()));
            assert!(sub(c.phi_values(), f.phi_values()));
            assert!(sub(c.t_values(), f.t_values()));
            assert!(sub(c.f_values(), f.f_values()));
        }
    }

    #[test]
    fn counting_identities_for_multiples_of_ten() {
        for k in 1..=60 {
            let l = 10.0 * k as f64;
            let f = build_full_grid(l, true).unwrap();
            let c = build_coarse_grid(l).unwrap();
            assert_eq!(f.len(), 198 * 3 * 2 * k);
            assert_eq!(c.len(), 54 * k);
        }
    }

    /// Filters every glimpse of the next step through the smoothness predicates.
    fn brute_successors(g: &GlimpseIndex, grid: &GlimpseGrid, c: &TransitionConstraints) -> Vec<GlimpseIndex> {
        grid.step(g.t_idx + 1)
            .filter(|h| {
                let dt = (g.theta_idx as i64 - h.theta_idx as i64).unsigned_abs() as usize;
                let raw = (g.phi_idx as i64 - h.phi_idx as i64).unsigned_abs() as usize;
                let dp = raw.min(grid.n_phi() - raw);
                let df = (grid.f_values()[g.f_idx] - grid.f_values()[h.f_idx]).abs();
                dt <= c.eps_theta_steps && dp <= c.eps_phi_steps && df <= c.max_delta_focal + 1e-9
            })
            .collect()
    }

    #[test]
    fn successors_interior_boundary_wrap() {
        let grid = build_full_grid(60.0, true).unwrap();
        let c = TransitionConstraints::default();
        let g = GlimpseIndex::new(3, 5, 7, 1);
        let s = feasible_successors(&g, &grid, &c).unwrap();
        assert_eq!(s.len(), 27);
        assert_eq!(s, brute_successors(&g, &grid, &c));

        let top = GlimpseIndex::new(3, 10, 7, 1);
        assert_eq!(feasible_successors(&top, &grid, &c).unwrap().len(), 18);
        let top_wide = GlimpseIndex::new(3, 10, 7, 0);
        assert_eq!(feasible_successors(&top_wide, &grid, &c).unwrap().len(), 12);

        let wrap = GlimpseIndex::new(0, 5, 17, 1);
        let s = feasible_successors(&wrap, &grid, &c).unwrap();
        assert!(s.iter().any(|h| h.phi_idx == 0));
        assert_eq!(s, brute_successors(&wrap, &grid, &c));

        let last = GlimpseIndex::new(11, 5, 5, 1);
        assert!(feasible_successors(&last, &grid, &c).unwrap().is_empty());
    }

    #[test]
    fn successors_match_brute_force_everywhere() {
        let grid = build_full_grid(10.0, true).unwrap();
        for c in [
            TransitionConstraints::default(),
            TransitionConstraints::new(2, 3, 1.0).unwrap(),
            TransitionConstraints::new(0, 0, 0.0).unwrap(),
        ] {
            for g in grid.step(0) {
                assert_eq!(feasible_successors(&g, &grid, &c).unwrap(), brute_successors(&g, &grid, &c));
            }
        }
    }

    #[test]
    fn successor_relation_is_reversible() {
        let grid = build_full_grid(10.0, true).unwrap();
        let c = TransitionConstraints::default();
        for g in grid.step(0) {
            for h in feasible_successors(&g, &grid, &c).unwrap() {
                let back = grid.direction_neighbors(h.theta_idx, h.phi_idx, 1, 1);
                assert!(back.contains(&(g.theta_idx, g.phi_idx)));
            }
        }
    }

    fn constant_traj(grid: &GlimpseGrid, theta: f64, phi: f64) -> Trajectory {
        Trajectory::new(
            grid.t_values()
                .iter()
                .map(|&t| Keyframe {
                    t_s: t,
                    pose: CameraPose::new(theta, phi, 0.5).unwrap(),
                })
                .collect(),
            0.0,
        )
    }

    #[test]
    fn neighborhood_sizes() {
        let grid = build_full_grid(60.0, true).unwrap();
        let n = refinement_neighborhood(&constant_traj(&grid, 0.0, 100.0), &grid).unwrap();
        assert!(n.iter().all(|s| s.len() == 27));
        let total: usize = n.iter().map(Vec::len).sum();
        assert_eq!(total, 324);
        assert!((total as f64 / grid.len() as f64) < 0.05);

        let n = refinement_neighborhood(&constant_traj(&grid, 75.0, 0.0), &grid).unwrap();
        assert!(n.iter().all(|s| s.len() == 18));
        assert!(n[0].iter().any(|g| g.phi_idx == 17));
    }

    #[test]
    fn neighborhood_rejects_misaligned() {
        let grid = build_full_grid(60.0, true).unwrap();
        let mut t = constant_traj(&grid, 0.0, 0.0);
        t.keyframes.pop();
        assert!(refinement_neighborhood(&t, &grid).is_err());
        let mut t = constant_traj(&grid, 0.0, 0.0);
        t.keyframes[3].t_s += 1.0;
        assert!(refinement_neighborhood(&t, &grid).is_err());
    }

    #[test]
    fn manifest_round_trip_validates() {
        let g = build_coarse_grid(60.0).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: GlimpseGrid = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let bad = s.replace("\"f_values\":[0.5]", "\"f_values\":[]");
        assert!(serde_json::from_str::<GlimpseGrid>(&bad).is_err());
    }
}
