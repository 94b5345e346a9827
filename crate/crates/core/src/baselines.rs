//! Reference trajectory generators: a centre-biased random walk, static
//! eye-level views, and the search driven by saliency instead of learned
//! scores.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dp::{top_k_by_endpoint, SearchProblem};
use crate::error::{Error, Result};
use crate::grid::{GlimpseGrid, GlimpseIndex, TransitionConstraints};
use crate::scoring::{FrameCue, FrameScorer, ScoreField};
use crate::trajectory::{Trajectory, TrajectoryMeta};
use crate::video::EquirectSequence;

fn index_of(values: &[f64], v: f64, what: &str) -> Result<usize> {
    values
        .iter()
        .position(|&x| x == v)
        .ok_or_else(|| Error::InvalidArgument(format!("grid has no {what} {v}")))
}

/// `k` seeded random walks from (θ 0, φ 0, f 1). Each step draws index
/// offsets from a zero-mean Gaussian with `sigma_steps` standard deviation,
/// rounds them and clamps them to one step so every move stays adjacent.
/// Elevation clamps at the grid edge; azimuth wraps.
pub fn center_baseline(grid: &GlimpseGrid, seed: u64, k: usize, sigma_steps: f64) -> Result<Vec<Trajectory>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let normal = Normal::new(0.0, sigma_steps)
        .map_err(|e| Error::InvalidArgument(format!("sigma {sigma_steps}: {e}")))?;
    let theta0 = index_of(grid.theta_values(), 0.0, "elevation")?;
    let phi0 = index_of(grid.phi_values(), 0.0, "azimuth")?;
    let f = index_of(grid.f_values(), 1.0, "focal scale")?;
    let n_theta = grid.n_theta() as i64;
    let n_phi = grid.n_phi() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(k);
    for rank in 0..k {
        let (mut ti, mut pi) = (theta0 as i64, phi0 as i64);
        let mut path = Vec::with_capacity(grid.n_t());
        for t in 0..grid.n_t() {
            if t > 0 {
                let dt = normal.sample(&mut rng).round().clamp(-1.0, 1.0) as i64;
                let dp = normal.sample(&mut rng).round().clamp(-1.0, 1.0) as i64;
                ti = (ti + dt).clamp(0, n_theta - 1);
                pi = (pi + dp).rem_euclid(n_phi);
            }
            path.push(GlimpseIndex::new(t, ti as usize, pi as usize, f));
        }
        let meta = TrajectoryMeta {
            rank: Some(rank),
            seed: Some(seed),
            ..TrajectoryMeta::mode("baseline:center")
        };
        out.push(Trajectory::from_glimpses(grid, &path, 0.0).with_meta(meta));
    }
    Ok(out)
}

/// One constant trajectory per azimuth on the equator at unit zoom.
pub fn eye_level_baseline(grid: &GlimpseGrid) -> Result<Vec<Trajectory>> {
    let ti = index_of(grid.theta_values(), 0.0, "elevation")?;
    let f = index_of(grid.f_values(), 1.0, "focal scale")?;
    Ok((0..grid.n_phi())
        .map(|pi| {
            let path: Vec<_> = (0..grid.n_t()).map(|t| GlimpseIndex::new(t, ti, pi, f)).collect();
            let meta = TrajectoryMeta {
                rank: Some(pi),
                ..TrajectoryMeta::mode("baseline:eyelevel")
            };
            Trajectory::from_glimpses(grid, &path, 0.0).with_meta(meta)
        })
        .collect())
}

/// Top-`k` endpoint search over saliency scores. `grid` should be the
/// no-zoom grid.
pub fn saliency_baseline(frames: Arc<EquirectSequence>, grid: &GlimpseGrid, k: usize) -> Result<Vec<Trajectory>> {
    let field = ScoreField::lazy(grid.clone(), Arc::new(FrameScorer::new(frames, FrameCue::Saliency)));
    let p = SearchProblem::new(&field, TransitionConstraints::default());
    let mut out = top_k_by_endpoint(&p, k)?;
    for t in &mut out {
        t.meta.mode = "baseline:saliency".into();
    }
    Ok(out)
}
