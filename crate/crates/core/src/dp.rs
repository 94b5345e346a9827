//! Exact maximum-score trajectory search by dynamic programming.
//!
//! Scores sit on nodes; transitions are free but must satisfy the
//! [`TransitionConstraints`]. Each time step keeps the best accumulated value
//! and a backpointer per candidate. Among equal-valued predecessors the
//! lexicographically smallest (theta_idx, phi_idx, f_idx) wins; among equal
//! final nodes, likewise.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::grid::{GlimpseGrid, GlimpseIndex, TransitionConstraints};
use crate::region::Region;
use crate::scoring::ScoreField;
use crate::trajectory::Trajectory;

const NONE: usize = usize::MAX;

/// A shortest-path instance over one score field.
#[derive(Debug, Clone)]
pub struct SearchProblem<'a> {
    scores: &'a ScoreField,
    pub constraints: TransitionConstraints,
    allowed: Option<Vec<Vec<GlimpseIndex>>>,
    excluded: HashSet<GlimpseIndex>,
}

impl<'a> SearchProblem<'a> {
    pub fn new(scores: &'a ScoreField, constraints: TransitionConstraints) -> Self {
        Self {
            scores,
            constraints,
            allowed: None,
            excluded: HashSet::new(),
        }
    }

    pub fn grid(&self) -> &'a GlimpseGrid {
        self.scores.grid()
    }

    pub fn scores(&self) -> &'a ScoreField {
        self.scores
    }

    /// Restricts each time step to the given candidates (one list per step).
    pub fn with_allowed(mut self, allowed: Vec<Vec<GlimpseIndex>>) -> Result<Self> {
        let grid = self.grid();
        if allowed.len() != grid.n_t() {
            return Err(Error::InvalidArgument(format!(
                "{} candidate sets for {} time steps",
                allowed.len(),
                grid.n_t()
            )));
        }
        for (t, set) in allowed.iter().enumerate() {
            for g in set {
                grid.check(g)?;
                if g.t_idx != t {
                    return Err(Error::InvalidArgument(format!("candidate {g:?} listed under step {t}")));
                }
            }
        }
        self.allowed = Some(allowed);
        Ok(self)
    }

    pub fn exclude(&mut self, glimpses: impl IntoIterator<Item = GlimpseIndex>) -> Result<()> {
        for g in glimpses {
            self.grid().check(&g)?;
            self.excluded.insert(g);
        }
        Ok(())
    }

    pub fn excluded(&self) -> &HashSet<GlimpseIndex> {
        &self.excluded
    }

    fn candidates(&self, t: usize) -> Vec<GlimpseIndex> {
        let mut c: Vec<GlimpseIndex> = match &self.allowed {
            Some(a) => a[t].clone(),
            None => self.grid().step(t).collect(),
        };
        c.retain(|g| !self.excluded.contains(g));
        c.sort_unstable();
        c.dedup();
        c
    }
}

#[derive(Debug, Clone)]
struct Layer {
    nodes: Vec<GlimpseIndex>,
    value: Vec<f64>,
    back: Vec<usize>,
}

/// Filled DP table; answers best-path queries for any endpoint restriction.
#[derive(Debug, Clone)]
pub struct DpTable<'a> {
    grid: &'a GlimpseGrid,
    layers: Vec<Layer>,
}

/// Runs the forward pass.
pub fn forward<'a>(p: &SearchProblem<'a>) -> Result<DpTable<'a>> {
    let grid = p.grid();
    let c = &p.constraints;
    let candidates: Vec<Vec<GlimpseIndex>> = (0..grid.n_t()).map(|t| p.candidates(t)).collect();
    if let Some(t) = candidates.iter().position(Vec::is_empty) {
        return Err(Error::Infeasible { step: t });
    }
    let all: Vec<GlimpseIndex> = candidates.iter().flatten().copied().collect();
    p.scores.materialize(&all)?;

    let mut layers: Vec<Layer> = Vec::with_capacity(grid.n_t());
    let mut slot = vec![NONE; grid.glimpses_per_step()];
    for (t, nodes) in candidates.into_iter().enumerate() {
        let mut value = vec![f64::NEG_INFINITY; nodes.len()];
        let mut back = vec![NONE; nodes.len()];
        match layers.last() {
            None => {
                for (i, g) in nodes.iter().enumerate() {
                    value[i] = p.scores.get(g)?;
                }
            }
            Some(prev) => {
                slot.fill(NONE);
                for (i, g) in prev.nodes.iter().enumerate() {
                    if prev.value[i] > f64::NEG_INFINITY {
                        slot[grid.step_offset(g)] = i;
                    }
                }
                for (i, g) in nodes.iter().enumerate() {
                    let mut best = NONE;
                    let mut best_v = f64::NEG_INFINITY;
                    // neighbors come out sorted, so the first maximum is the smallest index
                    for (ti, pi) in grid.direction_neighbors(g.theta_idx, g.phi_idx, c.eps_theta_steps, c.eps_phi_steps) {
                        for fi in 0..grid.n_f() {
                            let h = GlimpseIndex::new(t - 1, ti, pi, fi);
                            let j = slot[grid.step_offset(&h)];
                            if j == NONE || !c.allows(grid, &h, g) {
                                continue;
                            }
                            if prev.value[j] > best_v {
                                best_v = prev.value[j];
                                best = j;
                            }
                        }
                    }
                    if best != NONE {
                        value[i] = best_v + p.scores.get(g)?;
                        back[i] = best;
                    }
                }
            }
        }
        if value.iter().all(|v| *v == f64::NEG_INFINITY) {
            return Err(Error::Infeasible { step: t });
        }
        layers.push(Layer { nodes, value, back });
    }
    Ok(DpTable { grid, layers })
}

impl<'a> DpTable<'a> {
    fn path(&self, mut i: usize) -> Vec<GlimpseIndex> {
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in self.layers.iter().rev() {
            out.push(layer.nodes[i]);
            i = layer.back[i];
        }
        out.reverse();
        out
    }

    fn trajectory(&self, i: usize) -> Trajectory {
        let last = self.layers.last().expect("table has layers");
        Trajectory::from_glimpses(self.grid, &self.path(i), last.value[i])
    }

    /// Best reachable final node satisfying `keep`.
    fn best_final(&self, keep: impl Fn(&GlimpseIndex) -> bool) -> Option<usize> {
        let last = self.layers.last()?;
        let mut best: Option<usize> = None;
        for (i, g) in last.nodes.iter().enumerate() {
            if last.value[i] == f64::NEG_INFINITY || !keep(g) {
                continue;
            }
            if best.map_or(true, |b| last.value[i] > last.value[b]) {
                best = Some(i);
            }
        }
        best
    }

    pub fn best(&self) -> Trajectory {
        self.trajectory(self.best_final(|_| true).expect("forward pass guarantees a reachable end"))
    }

    pub fn best_in(&self, region: Region) -> Result<Trajectory> {
        self.best_final(|g| region.contains(&self.grid.pose(g)))
            .map(|i| self.trajectory(i))
            .ok_or(Error::Infeasible {
                step: self.layers.len() - 1,
            })
    }

    /// Best trajectory per final direction (over focal scales), sorted by
    /// score descending, then by direction.
    pub fn per_endpoint(&self) -> Vec<Trajectory> {
        let last = self.layers.last().expect("table has layers");
        let mut best: Vec<(usize, usize)> = Vec::new(); // (direction, node)
        for (i, g) in last.nodes.iter().enumerate() {
            if last.value[i] == f64::NEG_INFINITY {
                continue;
            }
            let d = self.grid.direction_index(g);
            match best.last_mut() {
                Some((pd, pi)) if *pd == d => {
                    if last.value[i] > last.value[*pi] {
                        *pi = i;
                    }
                }
                _ => best.push((d, i)),
            }
        }
        best.sort_by(|a, b| last.value[b.1].total_cmp(&last.value[a.1]).then(a.0.cmp(&b.0)));
        best.into_iter().map(|(_, i)| self.trajectory(i)).collect()
    }
}

/// Maximum-score feasible trajectory.
pub fn solve(p: &SearchProblem<'_>) -> Result<Trajectory> {
    Ok(forward(p)?.best())
}

/// Best trajectory ending at each final direction, top `k` by score.
pub fn top_k_by_endpoint(p: &SearchProblem<'_>, k: usize) -> Result<Vec<Trajectory>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut out = forward(p)?.per_endpoint();
    out.truncate(k);
    Ok(out)
}

pub fn best_ending_in_region(p: &SearchProblem<'_>, region: Region) -> Result<Trajectory> {
    forward(p)?.best_in(region)
}
