//! Overlap against human-edited tracks, the distinct-group diversity count,
//! and score-evaluation cost reports.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angular_distance, CameraPose};
use crate::render::{expand_schedule, ScheduleMode};
use crate::scoring::ScoreField;
use crate::trajectory::{RecordedTrack, Trajectory};

/// Overlap of two camera views, `max(1 - 2 dΩ / (fov_a + fov_b), 0)` with dΩ
/// the angle between their principal axes.
pub fn frame_overlap(a: &CameraPose, b: &CameraPose) -> f64 {
    let d = angular_distance(a, b);
    (1.0 - 2.0 * d / (a.fov_deg() + b.fov_deg())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackSource {
    Algorithm,
    Human,
}

/// A per-frame pose sequence at a uniform rate.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrack {
    pub fps: f64,
    pub poses: Vec<CameraPose>,
    pub source: TrackSource,
}

impl FrameTrack {
    pub fn new(fps: f64, poses: Vec<CameraPose>, source: TrackSource) -> Result<Self> {
        if !(fps > 0.0) || !fps.is_finite() {
            return Err(Error::InvalidArgument(format!("fps {fps} must be positive")));
        }
        if poses.is_empty() {
            return Err(Error::InvalidArgument("track has no frames".into()));
        }
        Ok(Self { fps, poses, source })
    }

    /// Hold-expanded algorithm output.
    pub fn from_trajectory(traj: &Trajectory, fps: f64, frames: usize, keyframe_interval_s: f64) -> Result<Self> {
        let s = expand_schedule(traj, fps, frames, keyframe_interval_s, ScheduleMode::Hold)?;
        Self::new(fps, s.poses, TrackSource::Algorithm)
    }

    pub fn from_recorded(track: &RecordedTrack) -> Result<Self> {
        Self::new(track.fps, track.poses.clone(), TrackSource::Human)
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.poses.len() as f64 / self.fps
    }

    /// Resamples to `frames` frames at `fps`, taking the pose nearest in time.
    pub fn resample(&self, fps: f64, frames: usize) -> Result<Self> {
        let last = self.poses.len() - 1;
        let poses = (0..frames)
            .map(|i| {
                let j = (i as f64 / fps * self.fps).round() as usize;
                self.poses[j.min(last)]
            })
            .collect();
        Self::new(fps, poses, self.source)
    }
}

fn check_tracks(algo: &[FrameTrack], human: &[FrameTrack]) -> Result<()> {
    if human.is_empty() {
        return Err(Error::InvalidArgument("no human tracks to compare against".into()));
    }
    let n = human[0].len();
    for t in algo.iter().chain(human) {
        if t.len() != n || t.fps != human[0].fps {
            return Err(Error::InvalidArgument(format!(
                "track of {} frames at {} fps does not match {n} frames at {} fps; resample first",
                t.len(),
                t.fps,
                human[0].fps
            )));
        }
    }
    Ok(())
}

fn mean_overlap(a: &FrameTrack, b: &FrameTrack) -> f64 {
    let sum: f64 = a.poses.iter().zip(&b.poses).map(|(x, y)| frame_overlap(x, y)).sum();
    sum / a.len() as f64
}

/// Per algorithm track: the best mean overlap with any single human track.
pub fn pool_trajectory(algo: &[FrameTrack], human: &[FrameTrack]) -> Result<Vec<f64>> {
    check_tracks(algo, human)?;
    Ok(algo
        .par_iter()
        .map(|a| human.iter().map(|h| mean_overlap(a, h)).fold(0.0, f64::max))
        .collect())
}

/// Per algorithm track: the mean over frames of the best overlap with any
/// human track at that frame.
pub fn pool_frame(algo: &[FrameTrack], human: &[FrameTrack]) -> Result<Vec<f64>> {
    check_tracks(algo, human)?;
    Ok(algo
        .par_iter()
        .map(|a| {
            let sum: f64 = (0..a.len())
                .map(|i| human.iter().map(|h| frame_overlap(&a.poses[i], &h.poses[i])).fold(0.0, f64::max))
                .sum();
            sum / a.len() as f64
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    /// `pairs[a][h]`: mean frame overlap of algorithm track `a` with human track `h`.
    pub pairs: Vec<Vec<f64>>,
    pub trajectory_pooling: Vec<f64>,
    pub frame_pooling: Vec<f64>,
}

pub fn overlap_report(algo: &[FrameTrack], human: &[FrameTrack]) -> Result<OverlapReport> {
    let trajectory_pooling = pool_trajectory(algo, human)?;
    let frame_pooling = pool_frame(algo, human)?;
    let pairs = algo
        .par_iter()
        .map(|a| human.iter().map(|h| mean_overlap(a, h)).collect())
        .collect();
    Ok(OverlapReport {
        pairs,
        trajectory_pooling,
        frame_pooling,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiversityGroups {
    pub count: usize,
    /// Group label per input trajectory, numbered by first appearance.
    pub assignment: Vec<usize>,
}

pub const DIVERSITY_THRESHOLD: f64 = 0.10;

/// Counts groups of trajectories, linking two trajectories when their
/// hold-expanded poses differ on fewer than 10% of frames.
pub fn diversity_groups(trajs: &[Trajectory], fps: f64, keyframe_interval_s: f64) -> Result<DiversityGroups> {
    let Some(first) = trajs.first() else {
        return Ok(DiversityGroups {
            count: 0,
            assignment: Vec::new(),
        });
    };
    let frames = ((first.span_s(keyframe_interval_s) * fps).round() as usize).max(1);
    let mut tracks = Vec::with_capacity(trajs.len());
    for t in trajs {
        if t.keyframes.len() != first.keyframes.len() {
            return Err(Error::InvalidArgument(format!(
                "trajectories cover {} and {} keyframes",
                first.keyframes.len(),
                t.keyframes.len()
            )));
        }
        tracks.push(expand_schedule(t, fps, frames, keyframe_interval_s, ScheduleMode::Hold)?.poses);
    }

    let n = trajs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let links: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            let diff = tracks[i].iter().zip(&tracks[j]).filter(|(a, b)| a != b).count();
            (diff as f64 / frames as f64) < DIVERSITY_THRESHOLD
        })
        .collect();
    for (i, j) in links {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut labels = vec![usize::MAX; n];
    let mut assignment = Vec::with_capacity(n);
    let mut count = 0;
    for i in 0..n {
        let root = find(&mut parent, i);
        if labels[root] == usize::MAX {
            labels[root] = count;
            count += 1;
        }
        assignment.push(labels[root]);
    }
    Ok(DiversityGroups { count, assignment })
}

/// Score evaluations spent by a solve, relative to scoring the full grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub coarse_evals: usize,
    pub refine_evals: usize,
    pub total_evals: usize,
    pub full_grid_size: usize,
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seconds_per_input_minute: Option<f64>,
}

impl CostReport {
    pub fn staged(coarse_evals: usize, refine_evals: usize, full_grid_size: usize) -> Self {
        let total_evals = coarse_evals + refine_evals;
        Self {
            coarse_evals,
            refine_evals,
            total_evals,
            full_grid_size,
            ratio: total_evals as f64 / full_grid_size as f64,
            wall_seconds: None,
            seconds_per_input_minute: None,
        }
    }

    /// A single-stage search over the full grid.
    pub fn full(evals: usize, full_grid_size: usize) -> Self {
        Self {
            coarse_evals: 0,
            refine_evals: 0,
            total_evals: evals,
            full_grid_size,
            ratio: evals as f64 / full_grid_size as f64,
            wall_seconds: None,
            seconds_per_input_minute: None,
        }
    }

    pub fn with_timing(mut self, wall_seconds: f64, video_length_s: f64) -> Self {
        self.wall_seconds = Some(wall_seconds);
        if video_length_s > 0.0 {
            self.seconds_per_input_minute = Some(wall_seconds / (video_length_s / 60.0));
        }
        self
    }
}

/// Report for a staged run given its coarse and fine fields (or just a fine
/// one for a full-grid search).
pub fn cost_report(coarse: Option<&ScoreField>, fine: &ScoreField, full_grid_size: usize) -> CostReport {
    match coarse {
        Some(c) => CostReport::staged(c.eval_count(), fine.eval_count(), full_grid_size),
        None => CostReport::full(fine.eval_count(), full_grid_size),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub algorithm_tracks: Vec<String>,
    pub human_tracks: Vec<String>,
    pub fps: f64,
    pub frames: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub overlap: Option<OverlapReport>,
    pub diversity: DiversityGroups,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cost: Option<CostReport>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fov_from_focal;
    use crate::trajectory::Keyframe;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pose(t: f64, p: f64, f: f64) -> CameraPose {
        CameraPose::new(t, p, f).unwrap()
    }

    fn track(poses: Vec<CameraPose>) -> FrameTrack {
        FrameTrack::new(1.0, poses, TrackSource::Human).unwrap()
    }

    #[test]
    fn overlap_formula_cases() {
        assert_eq!(frame_overlap(&pose(10.0, 40.0, 1.0), &pose(10.0, 40.0, 1.0)), 1.0);
        assert_eq!(frame_overlap(&pose(0.0, 0.0, 1.0), &pose(0.0, 65.5, 1.0)), 0.0);
        assert_abs_diff_eq!(frame_overlap(&pose(0.0, 0.0, 1.0), &pose(0.0, 32.75, 1.0)), 0.5, epsilon = 1e-12);
        // mixed zoom: boundary at the mean FOV
        let mean = (fov_from_focal(0.5).unwrap() + fov_from_focal(1.5).unwrap()) / 2.0;
        assert_abs_diff_eq!(frame_overlap(&pose(0.0, 0.0, 0.5), &pose(0.0, mean, 1.5)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hand_computed_pooling() {
        // one frame per second, three frames, all on the equator
        let h = vec![
            track(vec![pose(0.0, 0.0, 1.0); 3]),
            track(vec![pose(0.0, 32.75, 1.0); 3]),
            track(vec![pose(0.0, 180.0, 1.0); 3]),
        ];
        let a = vec![
            track(vec![pose(0.0, 0.0, 1.0), pose(0.0, 32.75, 1.0), pose(0.0, 270.0, 1.0)]),
            track(vec![pose(0.0, 180.0, 1.0), pose(0.0, 180.0, 1.0), pose(0.0, 0.0, 1.0)]),
        ];
        // a0 vs h0: 1, .5, 0 -> .5; vs h1: .5, 1, 0 -> .5; vs h2: 0 -> 0
        // a1 vs h2: 1, 1, 0 -> 2/3; frame max: 1, 1, 1
        let traj = pool_trajectory(&a, &h).unwrap();
        let frame = pool_frame(&a, &h).unwrap();
        assert_abs_diff_eq!(traj[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(traj[1], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(frame[0], (1.0 + 1.0 + 0.0) / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(frame[1], 1.0, epsilon = 1e-12);
        let r = overlap_report(&a, &h).unwrap();
        assert_abs_diff_eq!(r.pairs[1][2], 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn split_track_pools_differently() {
        let h1 = track(vec![pose(0.0, 0.0, 1.0); 4]);
        let h2 = track(vec![pose(30.0, 200.0, 1.0); 4]);
        let a = track(vec![h1.poses[0], h1.poses[0], h2.poses[0], h2.poses[0]]);
        let h = [h1, h2];
        assert_eq!(pool_frame(&[a.clone()], &h).unwrap()[0], 1.0);
        assert!(pool_trajectory(&[a], &h).unwrap()[0] < 1.0);
    }

    #[test]
    fn pooling_errors() {
        let a = track(vec![pose(0.0, 0.0, 1.0); 3]);
        assert!(pool_trajectory(&[a.clone()], &[]).is_err());
        assert!(pool_frame(&[a.clone()], &[track(vec![pose(0.0, 0.0, 1.0); 2])]).is_err());
        // identical single tracks
        assert_eq!(pool_trajectory(&[a.clone()], &[a.clone()]).unwrap(), vec![1.0]);
        assert_eq!(pool_frame(&[a.clone()], &[a]).unwrap(), vec![1.0]);
    }

    #[test]
    fn resampling_takes_nearest_pose() {
        let t = FrameTrack::new(10.0, (0..20).map(|i| pose(0.0, i as f64, 1.0)).collect(), TrackSource::Human).unwrap();
        let r = t.resample(4.0, 8).unwrap();
        let phis: Vec<f64> = r.poses.iter().map(|p| p.phi_deg).collect();
        assert_eq!(phis, vec![0.0, 3.0, 5.0, 8.0, 10.0, 13.0, 15.0, 18.0]);
    }

    fn keyframes(n: usize, f: impl Fn(usize) -> CameraPose) -> Trajectory {
        Trajectory::new(
            (0..n)
                .map(|i| Keyframe {
                    t_s: i as f64 * 5.0,
                    pose: f(i),
                })
                .collect(),
            0.0,
        )
    }

    #[test]
    fn diversity_group_cases() {
        let base = keyframes(12, |_| pose(0.0, 0.0, 1.0));
        let g = diversity_groups(&vec![base.clone(); 4], 30.0, 5.0).unwrap();
        assert_eq!((g.count, g.assignment), (1, vec![0; 4]));

        let other = keyframes(12, |_| pose(0.0, 20.0, 1.0));
        assert_eq!(diversity_groups(&[base.clone(), other], 30.0, 5.0).unwrap().count, 2);

        // one keyframe of twelve (8.3%) stays in the group
        let last = keyframes(12, |i| if i == 11 { pose(0.0, 20.0, 1.0) } else { pose(0.0, 0.0, 1.0) });
        assert_eq!(diversity_groups(&[base.clone(), last], 30.0, 5.0).unwrap().count, 1);

        // zoom-only difference on 2 of 20 keyframes (exactly 10%) splits
        let b20 = keyframes(20, |_| pose(0.0, 0.0, 1.0));
        let z20 = keyframes(20, |i| pose(0.0, 0.0, if i < 2 { 1.5 } else { 1.0 }));
        assert_eq!(diversity_groups(&[b20, z20], 30.0, 5.0).unwrap().count, 2);

        // chaining: a~b, b~c, a!~c -> one component
        let a = keyframes(20, |_| pose(0.0, 0.0, 1.0));
        let b = keyframes(20, |i| pose(0.0, if i == 0 { 20.0 } else { 0.0 }, 1.0));
        let c = keyframes(20, |i| pose(0.0, if i <= 1 { 20.0 } else { 0.0 }, 1.0));
        let d = diversity_groups(&[a, b, c], 30.0, 5.0).unwrap();
        assert_eq!(d.count, 1);
    }

    #[test]
    fn cost_report_ratios() {
        let r = CostReport::staged(3240, 3240, 71280);
        assert_eq!(r.total_evals, 6480);
        assert!(r.ratio <= 0.091);
        assert_abs_diff_eq!(CostReport::staged(3240, 0, 71280).ratio, 0.04545, epsilon = 1e-4);
        assert_eq!(CostReport::full(71280, 71280).ratio, 1.0);
        let t = r.with_timing(3.0, 600.0);
        assert_eq!(t.seconds_per_input_minute, Some(0.3));
    }

    fn arb_pose() -> impl Strategy<Value = CameraPose> {
        (-90.0f64..=90.0, 0.0f64..360.0, prop::sample::select(vec![0.5, 1.0, 1.5]))
            .prop_map(|(t, p, f)| CameraPose::new(t, p, f).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn overlap_range_and_symmetry(a in arb_pose(), b in arb_pose()) {
            let o = frame_overlap(&a, &b);
            prop_assert!((0.0..=1.0).contains(&o));
            prop_assert_eq!(o, frame_overlap(&b, &a));
            if angular_distance(&a, &b) >= (a.fov_deg() + b.fov_deg()) / 2.0 {
                prop_assert_eq!(o, 0.0);
            }
        }

        #[test]
        fn overlap_non_increasing_in_distance(phi in 0.0f64..180.0, step in 0.0f64..30.0, f in prop::sample::select(vec![0.5, 1.0, 1.5])) {
            let a = pose(0.0, 0.0, f);
            let near = frame_overlap(&a, &pose(0.0, phi, f));
            let far = frame_overlap(&a, &pose(0.0, (phi + step).min(180.0), f));
            prop_assert!(far <= near + 1e-12);
        }

        #[test]
        fn frame_pooling_dominates(
            algo in prop::collection::vec(prop::collection::vec(arb_pose(), 6), 1..4),
            human in prop::collection::vec(prop::collection::vec(arb_pose(), 6), 1..4),
        ) {
            let a: Vec<_> = algo.into_iter().map(track).collect();
            let h: Vec<_> = human.into_iter().map(track).collect();
            let t = pool_trajectory(&a, &h).unwrap();
            let f = pool_frame(&a, &h).unwrap();
            for (x, y) in t.iter().zip(&f) {
                prop_assert!(y + 1e-12 >= *x);
            }
            if h.len() == 1 {
                for (x, y) in t.iter().zip(&f) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn group_count_is_permutation_invariant(seed in 0u64..1000) {
            use rand::{seq::SliceRandom, Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let trajs: Vec<Trajectory> = (0..6)
                .map(|_| {
                    let k: usize = rng.random_range(0..3);
                    keyframes(10, |i| pose(0.0, if i < k { 20.0 } else { 0.0 }, 1.0))
                })
                .collect();
            let mut shuffled = trajs.clone();
            shuffled.shuffle(&mut rng);
            prop_assert_eq!(
                diversity_groups(&trajs, 2.0, 5.0).unwrap().count,
                diversity_groups(&shuffled, 2.0, 5.0).unwrap().count
            );
        }
    }
}
