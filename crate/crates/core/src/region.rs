use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_azimuth, CameraPose};

/// One of six sphere regions: three equal azimuth sectors times two
/// elevation hemispheres. The equator (theta = 0) belongs to the lower
/// hemisphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SphereRegion {
    pub sector: usize,
    pub upper: bool,
}

impl SphereRegion {
    pub const COUNT: usize = 6;

    /// Canonical processing order: sector-major, lower before upper.
    pub fn all() -> [SphereRegion; 6] {
        let mut out = [SphereRegion { sector: 0, upper: false }; 6];
        for (i, r) in out.iter_mut().enumerate() {
            *r = SphereRegion::from_index(i);
        }
        out
    }

    pub fn from_index(i: usize) -> Self {
        Self {
            sector: (i / 2) % 3,
            upper: i % 2 == 1,
        }
    }

    pub fn index(&self) -> usize {
        self.sector * 2 + usize::from(self.upper)
    }

    pub fn of(pose: &CameraPose) -> Self {
        let sector = ((normalize_azimuth(pose.phi_deg) / 120.0).floor() as usize).min(2);
        Self {
            sector,
            upper: pose.theta_deg > 0.0,
        }
    }

    pub fn contains(&self, pose: &CameraPose) -> bool {
        Self::of(pose) == *self
    }
}

/// Endpoint restriction for a trajectory search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Whole,
    Part(SphereRegion),
}

impl Region {
    pub fn contains(&self, pose: &CameraPose) -> bool {
        match self {
            Region::Whole => true,
            Region::Part(r) => r.contains(pose),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_full_grid;

    #[test]
    fn six_regions_partition_grid_directions() {
        let grid = build_full_grid(5.0, false).unwrap();
        let mut counts = [0usize; 6];
        for g in grid.step(0) {
            let p = grid.pose(&g);
            let hits: Vec<_> = SphereRegion::all().iter().filter(|r| r.contains(&p)).map(|r| r.index()).collect();
            assert_eq!(hits.len(), 1);
            counts[hits[0]] += 1;
        }
        assert_eq!(counts.iter().sum::<usize>(), 198);
        // equator goes to the lower half: 6 elevations below/at 0, 5 above
        assert_eq!(counts, [36, 30, 36, 30, 36, 30]);
    }

    #[test]
    fn index_round_trip() {
        for i in 0..6 {
            assert_eq!(SphereRegion::from_index(i).index(), i);
        }
    }
}
