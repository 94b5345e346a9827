//! Iterative search for mutually distant trajectories.
//!
//! Iteration 1 is a plain search. Each later iteration builds one
//! sub-problem per time window in which every glimpse chosen by an earlier
//! output (at the same time step) is removed, solves all of them, and keeps
//! the best trajectory ending in each of the six sphere regions. Any output
//! of iteration `i` therefore avoids all earlier outputs over a whole window,
//! so two outputs from different iterations differ in at least one window
//! length of keyframes.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dp::{forward, SearchProblem};
use crate::error::{Error, Result};
use crate::grid::GlimpseIndex;
use crate::region::{Region, SphereRegion};
use crate::trajectory::{Trajectory, TrajectoryMeta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiverseOptions {
    pub windows: usize,
    pub window_fraction: f64,
}

impl Default for DiverseOptions {
    fn default() -> Self {
        Self {
            windows: 20,
            window_fraction: 0.10,
        }
    }
}

/// Half-open range of time-step indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start_idx: usize,
    pub end_idx: usize,
}

impl TimeWindow {
    pub fn len(&self) -> usize {
        self.end_idx - self.start_idx
    }

    pub fn is_empty(&self) -> bool {
        self.end_idx == self.start_idx
    }

    pub fn contains(&self, t_idx: usize) -> bool {
        (self.start_idx..self.end_idx).contains(&t_idx)
    }
}

pub fn window_length(num_steps: usize, fraction: f64) -> usize {
    ((fraction * num_steps as f64).round() as usize).clamp(1, num_steps.max(1))
}

/// Evenly spaced windows of `round(fraction * num_steps)` steps (at least 1).
/// Fewer than `opts.windows` come back when there are not enough distinct
/// start positions.
pub fn sample_windows(num_steps: usize, opts: &DiverseOptions) -> Vec<TimeWindow> {
    if num_steps == 0 || opts.windows == 0 {
        return Vec::new();
    }
    let len = window_length(num_steps, opts.window_fraction);
    let span = num_steps - len;
    let count = opts.windows.min(span + 1);
    let mut starts: Vec<usize> = if count == 1 {
        vec![0]
    } else {
        (0..count)
            .map(|i| (i as f64 * span as f64 / (count - 1) as f64).round() as usize)
            .collect()
    };
    starts.dedup();
    starts
        .into_iter()
        .map(|s| TimeWindow {
            start_idx: s,
            end_idx: s + len,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct DiverseOutcome {
    pub trajectories: Vec<Trajectory>,
    pub iterations: usize,
    /// Set when an iteration found no feasible sub-problem before `k` outputs.
    pub truncated: bool,
}

/// Per-region winners of one iteration, in canonical region order.
fn region_winners(tables: &[(Option<usize>, crate::dp::DpTable<'_>)]) -> Vec<(SphereRegion, Option<usize>, Trajectory)> {
    let mut out = Vec::new();
    for r in SphereRegion::all() {
        let mut best: Option<(Option<usize>, Trajectory)> = None;
        for (w, table) in tables {
            if let Ok(t) = table.best_in(Region::Part(r)) {
                if best.as_ref().map_or(true, |(_, b)| t.total_score > b.total_score) {
                    best = Some((*w, t));
                }
            }
        }
        if let Some((w, t)) = best {
            out.push((r, w, t));
        }
    }
    out
}

pub fn diverse_search(p: &SearchProblem<'_>, k: usize, opts: &DiverseOptions) -> Result<DiverseOutcome> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let grid = p.grid();
    let windows = sample_windows(grid.n_t(), opts);
    let mut selected: Vec<(Trajectory, Vec<GlimpseIndex>)> = Vec::new();
    let mut iterations = 0;
    let mut truncated = false;

    while selected.len() < k {
        iterations += 1;
        let tables = if selected.is_empty() {
            vec![(None, forward(p)?)]
        } else {
            let solved: Vec<Result<Option<_>>> = windows
                .par_iter()
                .enumerate()
                .map(|(wi, w)| {
                    let mut sub = p.clone();
                    sub.exclude(
                        selected
                            .iter()
                            .flat_map(|(_, path)| path.iter().copied())
                            .filter(|g| w.contains(g.t_idx)),
                    )?;
                    match forward(&sub) {
                        Ok(table) => Ok(Some((Some(wi), table))),
                        Err(Error::Infeasible { .. }) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect();
            let mut tables = Vec::new();
            for s in solved {
                tables.extend(s?);
            }
            tables
        };
        let winners = region_winners(&tables);
        if winners.is_empty() {
            warn!(
                "diverse search stopped after {} of {k} trajectories: every sub-problem of iteration {iterations} is infeasible",
                selected.len()
            );
            truncated = true;
            break;
        }
        for (r, w, mut t) in winners {
            t.meta = TrajectoryMeta {
                iteration: Some(iterations),
                window: w,
                region: Some(r.index()),
                ..TrajectoryMeta::mode("diverse")
            };
            let path = t.glimpses(grid)?;
            selected.push((t, path));
        }
    }

    let mut trajectories: Vec<Trajectory> = selected.into_iter().map(|(t, _)| t).collect();
    trajectories.sort_by(|a, b| b.total_score.total_cmp(&a.total_score));
    trajectories.truncate(k);
    for (rank, t) in trajectories.iter_mut().enumerate() {
        t.meta.rank = Some(rank);
    }
    Ok(DiverseOutcome {
        trajectories,
        iterations,
        truncated,
    })
}
