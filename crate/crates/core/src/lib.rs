//! Virtual camera trajectory search for 360-degree video.
//!
//! A 360-degree video is sampled into short fixed-direction clips
//! ("glimpses") on a lattice of elevation, azimuth, start time and zoom.
//! Each glimpse carries a capture-worthiness score; a camera trajectory is a
//! smooth path through the lattice that maximizes the summed score. The crate
//! provides the exact dynamic-programming search, a coarse-to-fine variant
//! that scores only a small fraction of the lattice, an iterative search for
//! mutually distant trajectories, reference baselines, a rectilinear
//! viewport renderer and overlap/diversity metrics.

pub mod baselines;
pub mod coarse2fine;
pub mod diverse;
pub mod dp;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod metrics;
pub mod region;
pub mod render;
pub mod scoring;
pub mod synth;
pub mod trajectory;
pub mod video;

pub use error::{Error, Result};
pub use geometry::{CameraPose, FrameGeometry, SphereDirection};
pub use grid::{GlimpseGrid, GlimpseIndex, TransitionConstraints};
pub use region::{Region, SphereRegion};
pub use scoring::{ScoreField, ScoreSource, ScorerKind, ScorerSpec};
pub use trajectory::{Keyframe, Trajectory, TrajectoryFile, TrajectoryMeta};
pub use video::EquirectSequence;
