use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use vcam_core::baselines::{center_baseline, eye_level_baseline, saliency_baseline};
use vcam_core::coarse2fine::{solve_fast, FastOptions};
use vcam_core::diverse::{diverse_search, DiverseOptions};
use vcam_core::dp::{top_k_by_endpoint, SearchProblem};
use vcam_core::grid::{build_coarse_grid, build_full_grid};
use vcam_core::metrics::{
    cost_report, diversity_groups, overlap_report, CostReport, EvaluationReport, FrameTrack,
};
use vcam_core::render::{render_to_dir, ScheduleMode, DEFAULT_HEIGHT, DEFAULT_TRANSITION_S, DEFAULT_WIDTH};
use vcam_core::scoring::{load_scores_with_manifest, TableSource};
use vcam_core::trajectory::score_trajectory;
use vcam_core::{
    EquirectSequence, Error, GlimpseGrid, Result, ScoreField, ScoreSource, ScorerKind, ScorerSpec,
    TransitionConstraints, Trajectory, TrajectoryFile,
};

use crate::config::{Config, DEFAULT_FPS, DEFAULT_K, DEFAULT_SEED, DEFAULT_VIDEO_ID};
use crate::{
    EvaluateArgs, GridArgs, GridKind, RenderArgs, ScheduleArg, ScoreArgs, ScorerArgs, SolveArgs, SolveMode,
};

pub const COST_FILE: &str = "cost.json";

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_grid(path: &Path) -> Result<GlimpseGrid> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&s)?)
}

fn length(flag: Option<f64>, cfg: &Config) -> Result<f64> {
    flag.or(cfg.video_length_s)
        .ok_or_else(|| Error::InvalidArgument("video length is required (--length or video_length_s)".into()))
}

pub fn grid(a: &GridArgs, cfg: &Config) -> Result<()> {
    let l = length(a.length, cfg)?;
    let g = match a.kind {
        GridKind::Full => build_full_grid(l, true)?,
        GridKind::NoZoom => build_full_grid(l, false)?,
        GridKind::Coarse => build_coarse_grid(l)?,
    };
    write_json(&g, &a.out)
}

fn scorer_spec(a: &ScorerArgs, cfg: &Config) -> Result<Option<ScorerSpec>> {
    let Some(kind) = &a.scorer else {
        return Ok(cfg.scorer.clone());
    };
    let mut spec = ScorerSpec::new(kind.parse::<ScorerKind>()?);
    if let Some(base) = &cfg.scorer {
        if base.kind == spec.kind {
            spec.parameters = base.parameters.clone();
        }
    }
    for p in &a.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("parameter '{p}' is not key=value")))?;
        spec = spec.with(k, v);
    }
    Ok(Some(spec))
}

fn frames(a: &ScorerArgs) -> Result<Option<Arc<EquirectSequence>>> {
    a.frames.as_deref().map(|d| EquirectSequence::open(d).map(Arc::new)).transpose()
}

fn scorer(a: &ScorerArgs, cfg: &Config) -> Result<Option<Arc<dyn ScoreSource>>> {
    match scorer_spec(a, cfg)? {
        Some(spec) => Ok(Some(spec.build(frames(a)?)?)),
        None => Ok(None),
    }
}

pub fn score(a: &ScoreArgs, cfg: &Config) -> Result<()> {
    let grid = read_grid(&a.grid)?;
    let source = scorer(&a.scorer, cfg)?
        .ok_or_else(|| Error::InvalidArgument("no scorer given (--scorer or config 'scorer')".into()))?;
    let field = ScoreField::lazy(grid, source);
    field.materialize_all()?;
    field.write_csv(&a.out)
}

fn solve_grid(a: &SolveArgs, cfg: &Config, field: Option<&ScoreField>, with_zoom: bool) -> Result<GlimpseGrid> {
    if let Some(f) = field {
        return Ok(f.grid().clone());
    }
    if let Some(p) = &a.grid {
        return read_grid(p);
    }
    build_full_grid(length(a.length, cfg)?, with_zoom)
}

fn write_trajectories(trajs: &[Trajectory], grid: &GlimpseGrid, video_id: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    trajs
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let path = dir.join(format!("traj_{i:02}.json"));
            t.to_file(video_id, grid).write(&path)?;
            Ok(path)
        })
        .collect()
}

/// Runs one solve mode and writes `traj_NN.json` files (plus `cost.json` for
/// score-driven modes) into the output directory.
pub fn solve(a: &SolveArgs, cfg: &Config) -> Result<Vec<PathBuf>> {
    let k = a.k.or(cfg.k).unwrap_or(DEFAULT_K);
    let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let video_id = a.video_id.clone().or(cfg.video_id.clone()).unwrap_or(DEFAULT_VIDEO_ID.into());
    let diverse_opts = DiverseOptions {
        windows: cfg.windows.unwrap_or(DiverseOptions::default().windows),
        window_fraction: cfg.window_fraction.unwrap_or(DiverseOptions::default().window_fraction),
    };
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let started = Instant::now();

    let stored = a.scores.as_deref().map(load_scores_with_manifest).transpose()?;
    let lazy_source = || -> Result<Arc<dyn ScoreSource>> {
        if let Some(f) = &stored {
            return Ok(Arc::new(TableSource::from_field(f)));
        }
        scorer(&a.scorer, cfg)?
            .ok_or_else(|| Error::InvalidArgument("mode needs --scores or a scorer".into()))
    };

    let (trajs, grid, cost) = match a.mode {
        SolveMode::Fast | SolveMode::FastDiverse => {
            let l = match (a.length.or(cfg.video_length_s), &stored) {
                (Some(l), _) => l,
                (None, Some(f)) => f.grid().covered_length_s(),
                (None, None) => length(None, cfg)?,
            };
            let opts = FastOptions {
                k,
                diverse: (a.mode == SolveMode::FastDiverse).then_some(diverse_opts),
            };
            let out = solve_fast(lazy_source()?, l, &opts)?;
            let grid = out.fine.grid().clone();
            (out.trajectories, grid, Some(out.report))
        }
        SolveMode::Autocam | SolveMode::Zoom | SolveMode::Diverse => {
            let field = match stored {
                Some(f) => f,
                None => ScoreField::lazy(solve_grid(a, cfg, None, a.mode != SolveMode::Autocam)?, lazy_source()?),
            };
            let grid = field.grid().clone();
            let mut p = SearchProblem::new(&field, TransitionConstraints::default());
            if a.mode == SolveMode::Autocam {
                let f1 = grid
                    .focal_index(1.0)
                    .ok_or_else(|| Error::InvalidArgument("grid has no unit focal scale".into()))?;
                let allowed = (0..grid.n_t()).map(|t| grid.step(t).filter(|g| g.f_idx == f1).collect()).collect();
                p = p.with_allowed(allowed)?;
            }
            let mut trajs = match a.mode {
                SolveMode::Diverse => diverse_search(&p, k, &diverse_opts)?.trajectories,
                _ => top_k_by_endpoint(&p, k)?,
            };
            for t in &mut trajs {
                t.meta.mode = a.mode.name().into();
            }
            let cost = cost_report(None, &field, grid.len());
            (trajs, grid, Some(cost))
        }
        SolveMode::BaselineCenter | SolveMode::BaselineEyelevel => {
            let grid = solve_grid(a, cfg, stored.as_ref(), true)?;
            let mut trajs = if a.mode == SolveMode::BaselineCenter {
                center_baseline(&grid, seed, k, cfg.center_sigma_steps.unwrap_or(1.0))?
            } else {
                eye_level_baseline(&grid)?
            };
            if let Some(f) = &stored {
                for t in &mut trajs {
                    t.total_score = score_trajectory(t, f)?;
                }
            }
            (trajs, grid, None)
        }
        SolveMode::BaselineSaliency => {
            let seq = frames(&a.scorer)?
                .ok_or_else(|| Error::InvalidArgument("baseline:saliency needs --frames".into()))?;
            let l = match a.length.or(cfg.video_length_s) {
                Some(l) => l,
                None => seq.duration_s(),
            };
            let grid = build_full_grid(l, false)?;
            (saliency_baseline(seq, &grid, k)?, grid, None)
        }
    };

    let mut written = write_trajectories(&trajs, &grid, &video_id, &a.out_dir)?;
    if let Some(mut c) = cost {
        if a.timing {
            c = c.with_timing(started.elapsed().as_secs_f64(), grid.covered_length_s());
        }
        let path = a.out_dir.join(COST_FILE);
        write_json(&c, &path)?;
        written.push(path);
    }
    Ok(written)
}

pub fn render(a: &RenderArgs, cfg: &Config) -> Result<usize> {
    let seq = EquirectSequence::open(&a.frames)?;
    let file = TrajectoryFile::read(&a.trajectory)?;
    if file.keyframes.is_empty() {
        return Err(Error::InvalidArgument("trajectory has no keyframes to render".into()));
    }
    let smooth = match a.schedule {
        Some(s) => s == ScheduleArg::Smooth,
        None => match cfg.schedule.as_deref() {
            None | Some("hold") => false,
            Some("smooth") => true,
            Some(other) => return Err(Error::InvalidArgument(format!("unknown schedule '{other}'"))),
        },
    };
    let mode = if smooth {
        ScheduleMode::Smooth {
            window_s: a.transition.or(cfg.transition_s).unwrap_or(DEFAULT_TRANSITION_S),
        }
    } else {
        ScheduleMode::Hold
    };
    let size = (
        a.width.or(cfg.width).unwrap_or(DEFAULT_WIDTH),
        a.height.or(cfg.height).unwrap_or(DEFAULT_HEIGHT),
    );
    render_to_dir(&seq, &file, size, mode, &a.out)
}

fn track_name(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn human_track(file: &TrajectoryFile, fps: f64, frames: usize) -> Result<FrameTrack> {
    match &file.frame_track {
        Some(t) => FrameTrack::from_recorded(t)?.resample(fps, frames),
        None => FrameTrack::from_trajectory(&file.trajectory(), fps, frames, file.keyframe_interval_s),
    }
}

pub fn evaluate(a: &EvaluateArgs, cfg: &Config) -> Result<EvaluationReport> {
    let fps = a.fps.or(cfg.fps).unwrap_or(DEFAULT_FPS);
    let algo = a.algo.iter().map(|p| TrajectoryFile::read(p)).collect::<Result<Vec<_>>>()?;
    let human = a.human.iter().map(|p| TrajectoryFile::read(p)).collect::<Result<Vec<_>>>()?;
    let first = &algo[0];
    if first.keyframes.is_empty() {
        return Err(Error::InvalidArgument(format!("{} has no keyframes", a.algo[0].display())));
    }
    let interval = first.keyframe_interval_s;
    let frames = ((first.trajectory().span_s(interval) * fps).round() as usize).max(1);
    let trajs: Vec<Trajectory> = algo.iter().map(TrajectoryFile::trajectory).collect();

    let overlap = if human.is_empty() {
        None
    } else {
        let algo_tracks = algo
            .iter()
            .map(|f| FrameTrack::from_trajectory(&f.trajectory(), fps, frames, f.keyframe_interval_s))
            .collect::<Result<Vec<_>>>()?;
        let human_tracks = human.iter().map(|f| human_track(f, fps, frames)).collect::<Result<Vec<_>>>()?;
        Some(overlap_report(&algo_tracks, &human_tracks)?)
    };
    let cost: Option<CostReport> = match &a.cost {
        Some(p) => {
            let s = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Some(serde_json::from_str(&s)?)
        }
        None => None,
    };
    let report = EvaluationReport {
        algorithm_tracks: a.algo.iter().map(|p| track_name(p)).collect(),
        human_tracks: a.human.iter().map(|p| track_name(p)).collect(),
        fps,
        frames,
        overlap,
        diversity: diversity_groups(&trajs, fps, interval)?,
        cost,
    };
    write_json(&report, &a.out)?;
    Ok(report)
}
