//! Two-stage search: solve on the coarse lattice at the widest FOV, fill in
//! the skipped time steps, then re-solve with zoom inside the one-step
//! neighborhood of that path.
//!
//! Each stage owns its own lazily evaluated [`ScoreField`], so the evaluation
//! counters report exactly how many glimpses each stage scored.

use std::sync::Arc;

use crate::diverse::{diverse_search, DiverseOptions};
use crate::dp::{self, SearchProblem};
use crate::error::{Error, Result};
use crate::grid::{build_coarse_grid, build_full_grid, refinement_neighborhood, GlimpseGrid, TransitionConstraints, COARSE_SCALE};
use crate::metrics::CostReport;
use crate::scoring::{ScoreField, ScoreSource};
use crate::trajectory::{score_trajectory, Keyframe, Trajectory, TrajectoryMeta};

/// One lattice step on the coarse grid, i.e. about two fine steps.
pub fn coarse_constraints() -> TransitionConstraints {
    TransitionConstraints::default()
}

/// Best path on a coarse-grid field.
pub fn solve_coarse(coarse: &ScoreField) -> Result<Trajectory> {
    Ok(dp::solve(&SearchProblem::new(coarse, coarse_constraints()))?.with_meta(TrajectoryMeta::mode("coarse")))
}

/// Expands a coarse trajectory to one keyframe per fine time step.
///
/// Fine steps between two coarse keyframes get the spherical midpoint,
/// snapped to the nearest fine direction that is adjacent to both flanking
/// keyframes (nearest overall when no such direction exists). Steps after the
/// last coarse keyframe hold it. All poses use the coarse focal scale. The
/// returned `total_score` is 0; score it on a fine field when needed.
pub fn interpolate_to_fine(coarse: &Trajectory, fine_grid: &GlimpseGrid) -> Result<Trajectory> {
    let first = coarse
        .keyframes
        .first()
        .ok_or_else(|| Error::InvalidArgument("coarse trajectory is empty".into()))?;
    let snap = |d: &crate::geometry::SphereDirection| fine_grid.nearest_direction(d);
    let mut keyframes = Vec::with_capacity(fine_grid.n_t());
    for &t in fine_grid.t_values() {
        let after = coarse.keyframes.iter().position(|k| k.t_s >= t - 1e-6);
        let pose = match after {
            Some(j) if (coarse.keyframes[j].t_s - t).abs() <= 1e-6 => coarse.keyframes[j].pose,
            Some(0) => first.pose,
            Some(j) => {
                let (a, b) = (&coarse.keyframes[j - 1], &coarse.keyframes[j]);
                let s = (t - a.t_s) / (b.t_s - a.t_s);
                let target = a.pose.direction().slerp(&b.pose.direction(), s);
                let (ta, pa) = snap(&a.pose.direction());
                let (tb, pb) = snap(&b.pose.direction());
                let (ti, pi) = fine_grid
                    .nearest_direction_where(&target, |ti, pi| {
                        ti.abs_diff(ta) <= 1
                            && ti.abs_diff(tb) <= 1
                            && fine_grid.phi_steps_between(pi, pa) <= 1
                            && fine_grid.phi_steps_between(pi, pb) <= 1
                    })
                    .unwrap_or_else(|| snap(&target));
                crate::geometry::CameraPose {
                    theta_deg: fine_grid.theta_values()[ti],
                    phi_deg: fine_grid.phi_values()[pi],
                    focal_scale: COARSE_SCALE,
                }
            }
            None => coarse.keyframes.last().expect("non-empty").pose,
        };
        keyframes.push(Keyframe {
            t_s: t,
            pose: crate::geometry::CameraPose {
                focal_scale: COARSE_SCALE,
                ..pose
            },
        });
    }
    Ok(Trajectory::new(keyframes, 0.0).with_meta(TrajectoryMeta::mode("interpolated")))
}

fn refine_problem<'a>(traj0: &Trajectory, fine: &'a ScoreField) -> Result<SearchProblem<'a>> {
    let allowed = refinement_neighborhood(traj0, fine.grid())?;
    SearchProblem::new(fine, TransitionConstraints::default()).with_allowed(allowed)
}

/// Best zoom-enabled path inside the neighborhood of `traj0`.
pub fn refine(traj0: &Trajectory, fine: &ScoreField) -> Result<Trajectory> {
    Ok(dp::solve(&refine_problem(traj0, fine)?)?.with_meta(TrajectoryMeta::mode("fast")))
}

/// Best refined path per final direction, top `k`.
pub fn refine_top_k(traj0: &Trajectory, fine: &ScoreField, k: usize) -> Result<Vec<Trajectory>> {
    let mut out = dp::top_k_by_endpoint(&refine_problem(traj0, fine)?, k)?;
    for (rank, t) in out.iter_mut().enumerate() {
        t.meta = TrajectoryMeta {
            rank: Some(rank),
            ..TrajectoryMeta::mode("fast")
        };
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct FastOptions {
    pub k: usize,
    /// Run the diverse search on the coarse stage and refine each output.
    pub diverse: Option<DiverseOptions>,
}

impl Default for FastOptions {
    fn default() -> Self {
        Self { k: 1, diverse: None }
    }
}

#[derive(Debug)]
pub struct FastOutcome {
    pub trajectories: Vec<Trajectory>,
    /// The interpolated coarse paths, scored on the fine field.
    pub initial: Vec<Trajectory>,
    pub report: CostReport,
    pub coarse: ScoreField,
    pub fine: ScoreField,
}

/// Full coarse-to-fine pipeline for a video of `video_length_s` seconds.
pub fn solve_fast(source: Arc<dyn ScoreSource>, video_length_s: f64, opts: &FastOptions) -> Result<FastOutcome> {
    if opts.k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let coarse = ScoreField::lazy(build_coarse_grid(video_length_s)?, source.clone());
    let fine_grid = build_full_grid(video_length_s, true)?;
    let full_size = fine_grid.len();
    let fine = ScoreField::lazy(fine_grid, source);

    let coarse_paths = match &opts.diverse {
        None => vec![solve_coarse(&coarse)?],
        Some(d) => diverse_search(&SearchProblem::new(&coarse, coarse_constraints()), opts.k, d)?.trajectories,
    };
    let mut initial = Vec::with_capacity(coarse_paths.len());
    let mut trajectories = Vec::new();
    for c in &coarse_paths {
        let mut traj0 = interpolate_to_fine(c, fine.grid())?;
        traj0.total_score = score_trajectory(&traj0, &fine)?;
        match opts.diverse {
            None => trajectories.extend(refine_top_k(&traj0, &fine, opts.k)?),
            Some(_) => {
                let mut t = refine(&traj0, &fine)?;
                t.meta = TrajectoryMeta {
                    mode: "fast-diverse".into(),
                    ..c.meta.clone()
                };
                trajectories.push(t);
            }
        }
        initial.push(traj0);
    }
    if opts.diverse.is_some() {
        trajectories.sort_by(|a, b| b.total_score.total_cmp(&a.total_score));
        for (rank, t) in trajectories.iter_mut().enumerate() {
            t.meta.rank = Some(rank);
        }
    }
    let report = CostReport::staged(coarse.eval_count(), fine.eval_count(), full_size);
    Ok(FastOutcome {
        trajectories,
        initial,
        report,
        coarse,
        fine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{angular_distance, azimuth_gap, CameraPose};
    use crate::grid::GlimpseIndex;
    use crate::scoring::{GlimpseKey, RandomScorer};
    use crate::synth::SmoothField;
    use crate::trajectory::check_feasible;

    fn pose(t: f64, p: f64) -> CameraPose {
        CameraPose::new(t, p, 0.5).unwrap()
    }

    fn coarse_traj(poses: &[(f64, f64)]) -> Trajectory {
        Trajectory::new(
            poses
                .iter()
                .enumerate()
                .map(|(i, &(t, p))| Keyframe {
                    t_s: 10.0 * i as f64,
                    pose: pose(t, p),
                })
                .collect(),
            0.0,
        )
    }

    #[test]
    fn coarse_stage_scores_whole_coarse_grid() {
        let coarse = ScoreField::lazy(build_coarse_grid(60.0).unwrap(), Arc::new(RandomScorer { seed: 2 }));
        let t = solve_coarse(&coarse).unwrap();
        assert_eq!(coarse.eval_count(), 324);
        assert!(t.keyframes.iter().all(|k| k.pose.focal_scale == 0.5));
        assert!(check_feasible(&t, coarse.grid(), &coarse_constraints()).is_ok());
    }

    #[test]
    fn coarse_uniform_scores_tie_break() {
        let coarse = ScoreField::lazy(build_coarse_grid(30.0).unwrap(), Arc::new(|_: &GlimpseKey| 1.0));
        let t = solve_coarse(&coarse).unwrap();
        for k in &t.keyframes {
            assert_eq!((k.pose.theta_deg, k.pose.phi_deg, k.pose.focal_scale), (-75.0, 0.0, 0.5));
        }
    }

    #[test]
    fn coarse_tracks_drifting_peak() {
        let peak = |t: f64| pose(10.0, 40.0 + 2.0 * t);
        let src = move |k: &GlimpseKey| {
            let a = angular_distance(&k.pose, &peak(k.t_s));
            (-(a * a) / (2.0 * 20.0 * 20.0)).exp()
        };
        let coarse = ScoreField::lazy(build_coarse_grid(60.0).unwrap(), Arc::new(src));
        let t = solve_coarse(&coarse).unwrap();
        for k in &t.keyframes {
            let p = peak(k.t_s);
            assert!((k.pose.theta_deg - p.theta_deg).abs() <= 20.0, "{k:?}");
            assert!(azimuth_gap(k.pose.phi_deg, p.phi_deg) <= 40.0, "{k:?}");
        }
    }

    #[test]
    fn interpolation_cases() {
        let fine = build_full_grid(20.0, true).unwrap();
        let t = interpolate_to_fine(&coarse_traj(&[(10.0, 40.0), (10.0, 40.0)]), &fine).unwrap();
        assert_eq!(t.keyframes.len(), 4);
        for k in &t.keyframes {
            assert_eq!((k.pose.theta_deg, k.pose.phi_deg, k.pose.focal_scale), (10.0, 40.0, 0.5));
        }

        let t = interpolate_to_fine(&coarse_traj(&[(0.0, 0.0), (0.0, 40.0)]), &fine).unwrap();
        assert_eq!((t.keyframes[1].pose.theta_deg, t.keyframes[1].pose.phi_deg), (0.0, 20.0));
        // the tail holds the last coarse pose
        assert_eq!(t.keyframes[3].pose, t.keyframes[2].pose);

        // nearest grid direction to the spherical midpoint, by exhaustive search
        let (a, b) = (pose(10.0, 20.0), pose(30.0, 60.0));
        let mid = a.direction().midpoint(&b.direction());
        let mut best = (f64::MAX, 0.0, 0.0);
        for &th in fine.theta_values() {
            for &ph in fine.phi_values() {
                let d = mid.angle_to(&pose(th, ph).direction());
                if d < best.0 {
                    best = (d, th, ph);
                }
            }
        }
        let t = interpolate_to_fine(&coarse_traj(&[(10.0, 20.0), (30.0, 60.0)]), &fine).unwrap();
        assert_eq!((t.keyframes[1].pose.theta_deg, t.keyframes[1].pose.phi_deg), (best.1, best.2));
    }

    #[test]
    fn interpolated_coarse_paths_stay_adjacent() {
        let fine = build_full_grid(60.0, true).unwrap();
        for seed in 0..30 {
            let coarse = ScoreField::lazy(build_coarse_grid(60.0).unwrap(), Arc::new(RandomScorer { seed }));
            let c = solve_coarse(&coarse).unwrap();
            let t = interpolate_to_fine(&c, &fine).unwrap();
            assert!(check_feasible(&t, &fine, &TransitionConstraints::default()).is_ok(), "seed {seed}");
        }
    }

    #[test]
    fn refine_fixed_point() {
        let fine_grid = build_full_grid(60.0, true).unwrap();
        let c = coarse_traj(&[(10.0, 0.0), (10.0, 40.0), (30.0, 80.0), (30.0, 80.0), (10.0, 40.0), (-10.0, 0.0)]);
        let traj0 = interpolate_to_fine(&c, &fine_grid).unwrap();
        let path = traj0.glimpses(&fine_grid).unwrap();
        let src = move |k: &GlimpseKey| {
            let t = (k.t_s / 5.0).round() as usize;
            let g = &path[t];
            let on = k.pose == CameraPose {
                theta_deg: crate::grid::FULL_THETA[g.theta_idx],
                phi_deg: 20.0 * g.phi_idx as f64,
                focal_scale: 0.5,
            };
            if on { 1.0 } else { 0.0 }
        };
        let fine = ScoreField::lazy(fine_grid.clone(), Arc::new(src));
        let r = refine(&traj0, &fine).unwrap();
        assert_eq!(r.keyframes, traj0.keyframes);
        assert!(fine.eval_count() <= 27 * 12);
    }

    /// Exhaustive search over the per-step candidate lists.
    fn brute_restricted(fine: &ScoreField, allowed: &[Vec<GlimpseIndex>]) -> f64 {
        let c = TransitionConstraints::default();
        fn rec(fine: &ScoreField, allowed: &[Vec<GlimpseIndex>], c: &TransitionConstraints, prev: Option<GlimpseIndex>, acc: f64) -> f64 {
            let t = prev.map_or(0, |p| p.t_idx + 1);
            if t == allowed.len() {
                return acc;
            }
            let mut best = f64::NEG_INFINITY;
            for g in &allowed[t] {
                if let Some(p) = prev {
                    if !c.allows(fine.grid(), &p, g) {
                        continue;
                    }
                }
                best = best.max(rec(fine, allowed, c, Some(*g), acc + fine.get(g).unwrap()));
            }
            best
        }
        rec(fine, allowed, &c, None, 0.0)
    }

    #[test]
    fn refine_matches_restricted_brute_force() {
        let fine_grid = build_full_grid(20.0, true).unwrap();
        for seed in 0..10 {
            let fine = ScoreField::lazy(fine_grid.clone(), Arc::new(RandomScorer { seed }));
            let traj0 = interpolate_to_fine(&coarse_traj(&[(10.0, 40.0), (30.0, 80.0)]), &fine_grid).unwrap();
            let r = refine(&traj0, &fine).unwrap();
            let allowed = refinement_neighborhood(&traj0, &fine_grid).unwrap();
            let want = brute_restricted(&fine, &allowed);
            assert!((r.total_score - want).abs() < 1e-12);
            assert!(r.total_score >= score_trajectory(&traj0, &fine).unwrap());
        }
    }

    #[test]
    fn fast_pipeline_cost_and_dominance() {
        let out = solve_fast(Arc::new(SmoothField::new(9)), 600.0, &FastOptions::default()).unwrap();
        assert_eq!(out.report.coarse_evals, 3240);
        assert!(out.report.refine_evals <= 3240);
        assert_eq!(out.report.full_grid_size, 71280);
        assert!(out.report.ratio <= 0.091);
        let best = &out.trajectories[0];
        assert!(best.total_score >= out.initial[0].total_score);
        assert!(check_feasible(best, out.fine.grid(), &TransitionConstraints::default()).is_ok());
    }

    #[test]
    fn fast_k_uses_refinement_endpoints() {
        let out = solve_fast(Arc::new(RandomScorer { seed: 4 }), 60.0, &FastOptions { k: 5, diverse: None }).unwrap();
        assert_eq!(out.trajectories.len(), 5);
        assert!(out.trajectories.windows(2).all(|w| w[0].total_score >= w[1].total_score));
    }

    #[test]
    fn fast_diverse_refines_each_coarse_output() {
        let opts = FastOptions {
            k: 6,
            diverse: Some(DiverseOptions::default()),
        };
        let out = solve_fast(Arc::new(RandomScorer { seed: 8 }), 120.0, &opts).unwrap();
        assert_eq!(out.trajectories.len(), 6);
        assert_eq!(out.initial.len(), 6);
        for t in &out.trajectories {
            assert!(check_feasible(t, out.fine.grid(), &TransitionConstraints::default()).is_ok());
        }
        assert_eq!(out.report.coarse_evals, out.coarse.grid().len());
    }
}
