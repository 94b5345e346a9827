//! Capture-worthiness scores per glimpse.
//!
//! A [`ScoreField`] is bound to one grid. It is either filled eagerly from a
//! score file or materialized lazily from a [`ScoreSource`]; in both cases
//! `eval_count` is the number of distinct glimpses that have a value. Sources
//! are keyed by glimpse *values* (time, direction, zoom), so the coarse and
//! fine grids of the same video can share one source while keeping separate
//! counters.

use std::collections::{BTreeMap, HashMap};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{azimuth_gap, direction_to_equirect, fov_from_focal, viewport_ray, CameraPose, FrameGeometry};
use crate::grid::{GlimpseGrid, GlimpseIndex};
use crate::video::EquirectSequence;

/// A glimpse described by value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlimpseKey {
    pub t_s: f64,
    pub duration_s: f64,
    pub pose: CameraPose,
}

impl GlimpseKey {
    pub fn of(grid: &GlimpseGrid, g: &GlimpseIndex) -> Self {
        Self {
            t_s: grid.t_s(g),
            duration_s: grid.glimpse_duration_s(),
            pose: grid.pose(g),
        }
    }

    /// Integer identity (ms, centidegrees, milli-scale) for hashing.
    fn quantized(&self) -> (i64, i64, i64, i64) {
        (
            (self.t_s * 1000.0).round() as i64,
            (self.pose.theta_deg * 100.0).round() as i64,
            (crate::geometry::normalize_azimuth(self.pose.phi_deg) * 100.0).round() as i64 % 36000,
            (self.pose.focal_scale * 1000.0).round() as i64,
        )
    }
}

pub trait ScoreSource: Send + Sync {
    fn score(&self, key: &GlimpseKey) -> Result<f64>;
}

impl<F> ScoreSource for F
where
    F: Fn(&GlimpseKey) -> f64 + Send + Sync,
{
    fn score(&self, key: &GlimpseKey) -> Result<f64> {
        Ok(self(key))
    }
}

pub struct ScoreField {
    grid: GlimpseGrid,
    cells: Vec<OnceLock<f64>>,
    source: Option<Arc<dyn ScoreSource>>,
    evals: AtomicUsize,
}

impl std::fmt::Debug for ScoreField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScoreField")
            .field("glimpses", &self.cells.len())
            .field("evals", &self.eval_count())
            .field("lazy", &self.source.is_some())
            .finish()
    }
}

impl ScoreField {
    /// Field without a source; values come from [`ScoreField::insert`].
    pub fn empty(grid: GlimpseGrid) -> Self {
        let cells = (0..grid.len()).map(|_| OnceLock::new()).collect();
        Self {
            grid,
            cells,
            source: None,
            evals: AtomicUsize::new(0),
        }
    }

    pub fn lazy(grid: GlimpseGrid, source: Arc<dyn ScoreSource>) -> Self {
        let mut f = Self::empty(grid);
        f.source = Some(source);
        f
    }

    pub fn grid(&self) -> &GlimpseGrid {
        &self.grid
    }

    /// Distinct glimpses with a value so far.
    pub fn eval_count(&self) -> usize {
        self.evals.load(Ordering::SeqCst)
    }

    /// Stores a score; fails on non-finite values and duplicates.
    pub fn insert(&self, g: &GlimpseIndex, score: f64) -> Result<()> {
        self.grid.check(g)?;
        if !score.is_finite() {
            return Err(Error::Data(format!("score {score} for {g:?} is not finite")));
        }
        self.cells[self.grid.linear(g)]
            .set(score)
            .map_err(|_| Error::Data(format!("duplicate score for {g:?}")))?;
        self.evals.fetch_add(1, Ordering::SeqCst);
        Ok(())
    }

    pub fn peek(&self, g: &GlimpseIndex) -> Option<f64> {
        self.cells.get(self.grid.linear(g)).and_then(|c| c.get().copied())
    }

    pub fn get(&self, g: &GlimpseIndex) -> Result<f64> {
        self.grid.check(g)?;
        let cell = &self.cells[self.grid.linear(g)];
        if let Some(v) = cell.get() {
            return Ok(*v);
        }
        let source = self.source.as_ref().ok_or(Error::MissingScore(*g))?;
        let v = source.score(&GlimpseKey::of(&self.grid, g))?;
        if !v.is_finite() {
            return Err(Error::Data(format!("scorer produced {v} for {g:?}")));
        }
        // Only the thread that wins the insertion counts it.
        if cell.set(v).is_ok() {
            self.evals.fetch_add(1, Ordering::SeqCst);
        }
        Ok(*cell.get().expect("cell was just set"))
    }

    /// Computes every listed glimpse in parallel. No-op for source-less fields.
    pub fn materialize(&self, glimpses: &[GlimpseIndex]) -> Result<()> {
        if self.source.is_none() {
            return Ok(());
        }
        glimpses.par_iter().try_for_each(|g| self.get(g).map(|_| ()))
    }

    pub fn materialize_all(&self) -> Result<()> {
        let all: Vec<_> = self.grid.iter().collect();
        self.materialize(&all)
    }

    /// Materialized entries in lexicographic (t, theta, phi, f) order.
    pub fn entries(&self) -> Vec<(GlimpseIndex, f64)> {
        self.grid
            .iter()
            .filter_map(|g| self.peek(&g).map(|v| (g, v)))
            .collect()
    }

    /// Writes the CSV score file plus its sibling grid manifest.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("t_idx,theta_idx,phi_idx,f_idx,score\n");
        for (g, v) in self.entries() {
            out.push_str(&format!("{},{},{},{},{}\n", g.t_idx, g.theta_idx, g.phi_idx, g.f_idx, v));
        }
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
        let manifest = manifest_path(path);
        let mut s = serde_json::to_string_pretty(&self.grid)?;
        s.push('\n');
        std::fs::write(&manifest, s).map_err(|e| Error::io(&manifest, e))
    }
}

/// `scores.csv` -> `scores.grid.json`.
pub fn manifest_path(score_path: &Path) -> PathBuf {
    score_path.with_extension("grid.json")
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    t_idx: usize,
    theta_idx: usize,
    phi_idx: usize,
    f_idx: usize,
    score: f64,
}

/// Reads a score CSV into an eager field on `grid`.
pub fn load_scores(path: &Path, grid: &GlimpseGrid) -> Result<ScoreField> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scores(&text, grid)
}

pub fn parse_scores(text: &str, grid: &GlimpseGrid) -> Result<ScoreField> {
    let field = ScoreField::empty(grid.clone());
    if text.trim().is_empty() {
        return Ok(field);
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers != vec!["t_idx", "theta_idx", "phi_idx", "f_idx", "score"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {headers:?}"),
        });
    }
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row: ScoreRow = record.deserialize(None).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let g = GlimpseIndex::new(row.t_idx, row.theta_idx, row.phi_idx, row.f_idx);
        if !grid.contains(&g) {
            return Err(Error::Parse {
                line,
                message: format!("index {g:?} outside grid"),
            });
        }
        field.insert(&g, row.score).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
    }
    Ok(field)
}

/// Loads a score file together with its sibling manifest.
pub fn load_scores_with_manifest(path: &Path) -> Result<ScoreField> {
    let manifest = manifest_path(path);
    let s = std::fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let grid: GlimpseGrid = serde_json::from_str(&s)?;
    load_scores(path, &grid)
}

/// Value-keyed lookup table over a materialized field, usable as a source
/// for any grid whose glimpses it covers.
pub struct TableSource {
    table: HashMap<(i64, i64, i64, i64), f64>,
}

impl TableSource {
    pub fn from_field(field: &ScoreField) -> Self {
        let table = field
            .entries()
            .into_iter()
            .map(|(g, v)| (GlimpseKey::of(field.grid(), &g).quantized(), v))
            .collect();
        Self { table }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl ScoreSource for TableSource {
    fn score(&self, key: &GlimpseKey) -> Result<f64> {
        self.table.get(&key.quantized()).copied().ok_or_else(|| {
            Error::Data(format!(
                "score table has no entry for t={} s, theta={}, phi={}, f={}",
                key.t_s, key.pose.theta_deg, key.pose.phi_deg, key.pose.focal_scale
            ))
        })
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform [0, 1) per glimpse, a pure function of (seed, glimpse values).
#[derive(Debug, Clone, Copy)]
pub struct RandomScorer {
    pub seed: u64,
}

impl ScoreSource for RandomScorer {
    fn score(&self, key: &GlimpseKey) -> Result<f64> {
        let (a, b, c, d) = key.quantized();
        let mut h = splitmix(self.seed);
        for x in [a, b, c, d] {
            h = splitmix(h ^ x as u64);
        }
        Ok(ChaCha8Rng::seed_from_u64(h).random::<f64>())
    }
}

/// Bump centered on (0, 0): `cos(theta) * cos(gap(phi, 0) / 2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CenterPrior;

impl ScoreSource for CenterPrior {
    fn score(&self, key: &GlimpseKey) -> Result<f64> {
        let gap = azimuth_gap(key.pose.phi_deg, 0.0);
        Ok(key.pose.theta_deg.to_radians().cos() * (gap.to_radians() / 2.0).cos())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameCue {
    /// Mean absolute temporal luminance difference.
    Motion,
    /// Spatial gradient magnitude plus temporal difference.
    Saliency,
}

/// Maximum width of the luminance maps used by the frame-based proxies.
const ANALYSIS_WIDTH: u32 = 128;
/// Footprint samples across and down the viewport.
const FOOTPRINT_SAMPLES: (u32, u32) = (16, 9);

#[derive(Debug)]
struct CueMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl CueMap {
    /// Bilinear lookup in continuous equirect coordinates scaled to the map.
    fn sample(&self, u: f64, v: f64) -> f64 {
        let x = u - 0.5;
        let y = (v - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let w = self.width as i64;
        let xa = (x0 as i64).rem_euclid(w) as usize;
        let xb = (x0 as i64 + 1).rem_euclid(w) as usize;
        let ya = y0 as usize;
        let yb = (ya + 1).min(self.height - 1);
        let at = |x: usize, y: usize| self.data[y * self.width + x] as f64;
        (1.0 - fy) * ((1.0 - fx) * at(xa, ya) + fx * at(xb, ya)) + fy * ((1.0 - fx) * at(xa, yb) + fx * at(xb, yb))
    }
}

/// Frame-based proxy scorer. Per glimpse time span it builds a luminance cue
/// map on a downsampled equirect grid, then averages the map over the
/// glimpse's viewport footprint on the sphere.
pub struct FrameScorer {
    frames: Arc<EquirectSequence>,
    cue: FrameCue,
    maps: Mutex<HashMap<(usize, usize), Arc<OnceLock<Result<Arc<CueMap>, String>>>>>,
}

impl FrameScorer {
    pub fn new(frames: Arc<EquirectSequence>, cue: FrameCue) -> Self {
        Self {
            frames,
            cue,
            maps: Mutex::new(HashMap::new()),
        }
    }

    fn frame_span(&self, key: &GlimpseKey) -> Result<(usize, usize)> {
        let fps = self.frames.fps();
        let start = (key.t_s * fps).round() as usize;
        let mut end = ((key.t_s + key.duration_s) * fps).round() as usize;
        if end <= start {
            end = start + 1;
        }
        if end > self.frames.len() {
            return Err(Error::Data(format!(
                "missing frames: glimpse at {} s needs frames {start}..{end}, sequence has {}",
                key.t_s,
                self.frames.len()
            )));
        }
        Ok((start, end))
    }

    fn luma(&self, index: usize) -> Result<CueMap> {
        let img = self.frames.frame(index)?;
        let (w, h) = img.dimensions();
        let block = w.div_ceil(ANALYSIS_WIDTH).max(1);
        let mw = (w / block).max(1) as usize;
        let mh = (h / block).max(1) as usize;
        let mut data = vec![0f32; mw * mh];
        for (my, row) in data.chunks_mut(mw).enumerate() {
            for (mx, out) in row.iter_mut().enumerate() {
                let mut acc = 0f32;
                let mut n = 0f32;
                for y in (my as u32 * block)..((my as u32 + 1) * block).min(h) {
                    for x in (mx as u32 * block)..((mx as u32 + 1) * block).min(w) {
                        let p = img.get_pixel(x, y).0;
                        acc += 0.299 * p[0] as f32 + 0.587 * p[1] as f32 + 0.114 * p[2] as f32;
                        n += 1.0;
                    }
                }
                *out = acc / n;
            }
        }
        Ok(CueMap {
            width: mw,
            height: mh,
            data,
        })
    }

    fn build_map(&self, start: usize, end: usize) -> Result<CueMap> {
        let first = if start > 0 { start - 1 } else { start };
        let mut prev: Option<CueMap> = None;
        let mut motion: Option<Vec<f32>> = None;
        let mut gradient: Option<Vec<f32>> = None;
        let mut n_motion = 0f32;
        let mut n_frames = 0f32;
        let (mut mw, mut mh) = (0, 0);
        for k in first..end {
            let cur = self.luma(k)?;
            mw = cur.width;
            mh = cur.height;
            if k >= start {
                if let Some(p) = &prev {
                    let acc = motion.get_or_insert_with(|| vec![0.0; mw * mh]);
                    for ((a, c), q) in acc.iter_mut().zip(&cur.data).zip(&p.data) {
                        *a += (c - q).abs();
                    }
                    n_motion += 1.0;
                }
                if self.cue == FrameCue::Saliency {
                    let acc = gradient.get_or_insert_with(|| vec![0.0; mw * mh]);
                    for y in 0..mh {
                        for x in 0..mw {
                            let at = |x: usize, y: usize| cur.data[y * mw + x];
                            let gx = (at((x + 1) % mw, y) - at((x + mw - 1) % mw, y)) / 2.0;
                            let gy = (at(x, (y + 1).min(mh - 1)) - at(x, y.saturating_sub(1))) / 2.0;
                            acc[y * mw + x] += (gx * gx + gy * gy).sqrt();
                        }
                    }
                    n_frames += 1.0;
                }
            }
            prev = Some(cur);
        }
        let mut data = vec![0f32; mw * mh];
        if let Some(m) = motion {
            for (d, v) in data.iter_mut().zip(m) {
                *d += v / n_motion;
            }
        }
        if let Some(g) = gradient {
            for (d, v) in data.iter_mut().zip(g) {
                *d += v / n_frames;
            }
        }
        Ok(CueMap {
            width: mw,
            height: mh,
            data,
        })
    }

    fn map_for(&self, span: (usize, usize)) -> Result<Arc<CueMap>> {
        let slot = self
            .maps
            .lock()
            .expect("cue map cache poisoned")
            .entry(span)
            .or_default()
            .clone();
        slot.get_or_init(|| self.build_map(span.0, span.1).map(Arc::new).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Data)
    }
}

impl ScoreSource for FrameScorer {
    fn score(&self, key: &GlimpseKey) -> Result<f64> {
        let map = self.map_for(self.frame_span(key)?)?;
        let (sx, sy) = FOOTPRINT_SAMPLES;
        let geom = FrameGeometry::new(sx, sy, fov_from_focal(key.pose.focal_scale)?)?;
        let mut acc = 0.0;
        for j in 0..sy {
            for i in 0..sx {
                let d = viewport_ray(i as f64 + 0.5, j as f64 + 0.5, &key.pose, &geom);
                let (u, v) = direction_to_equirect(&d, map.width as u32, map.height as u32);
                acc += map.sample(u, v);
            }
        }
        Ok(acc / (sx * sy) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerKind {
    ExternalFile,
    MotionProxy,
    CenterPrior,
    SaliencyProxy,
    Random,
}

impl std::str::FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "external-file" => Ok(Self::ExternalFile),
            "motion-proxy" => Ok(Self::MotionProxy),
            "center-prior" => Ok(Self::CenterPrior),
            "saliency-proxy" => Ok(Self::SaliencyProxy),
            "random" => Ok(Self::Random),
            other => Err(Error::InvalidArgument(format!("unknown scorer kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerSpec {
    pub kind: ScorerKind,
    #[serde(default)]
    pub parameters: BTreeMap<String, String>,
}

impl ScorerSpec {
    pub fn new(kind: ScorerKind) -> Self {
        Self {
            kind,
            parameters: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    fn param(&self, key: &str) -> Result<&str> {
        self.parameters
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::InvalidArgument(format!("scorer '{:?}' needs parameter '{key}'", self.kind)))
    }

    pub fn needs_frames(&self) -> bool {
        matches!(self.kind, ScorerKind::MotionProxy | ScorerKind::SaliencyProxy)
    }

    /// Instantiates the scorer. Frame-based kinds need `frames`.
    pub fn build(&self, frames: Option<Arc<EquirectSequence>>) -> Result<Arc<dyn ScoreSource>> {
        let need_frames = || {
            frames
                .clone()
                .ok_or_else(|| Error::InvalidArgument(format!("scorer '{:?}' needs input frames", self.kind)))
        };
        Ok(match self.kind {
            ScorerKind::Random => {
                let seed = self
                    .param("seed")?
                    .parse()
                    .map_err(|e| Error::InvalidArgument(format!("bad seed: {e}")))?;
                Arc::new(RandomScorer { seed })
            }
            ScorerKind::CenterPrior => Arc::new(CenterPrior),
            ScorerKind::MotionProxy => Arc::new(FrameScorer::new(need_frames()?, FrameCue::Motion)),
            ScorerKind::SaliencyProxy => Arc::new(FrameScorer::new(need_frames()?, FrameCue::Saliency)),
            ScorerKind::ExternalFile => {
                let field = load_scores_with_manifest(Path::new(self.param("path")?))?;
                Arc::new(TableSource::from_field(&field))
            }
        })
    }
}

/// Scores one glimpse of `grid` with a freshly built scorer.
pub fn proxy_score(
    frames: Option<Arc<EquirectSequence>>,
    grid: &GlimpseGrid,
    g: &GlimpseIndex,
    spec: &ScorerSpec,
) -> Result<f64> {
    grid.check(g)?;
    spec.build(frames)?.score(&GlimpseKey::of(grid, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_coarse_grid, build_full_grid};
    use crate::synth;

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let grid = build_full_grid(60.0, true).unwrap();
        let field = ScoreField::lazy(grid.clone(), Arc::new(RandomScorer { seed: 3 }));
        field.materialize_all().unwrap();
        assert_eq!(field.eval_count(), 7128);
        let p = dir.path().join("s.csv");
        field.write_csv(&p).unwrap();
        let back = load_scores_with_manifest(&p).unwrap();
        assert_eq!(back.eval_count(), 7128);
        let p2 = dir.path().join("t.csv");
        back.write_csv(&p2).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn parse_errors_name_lines() {
        let grid = build_full_grid(60.0, true).unwrap();
        let text = "t_idx,theta_idx,phi_idx,f_idx,score\n0,0,0,0,0.5\n99,0,0,0,0.1\n";
        match parse_scores(text, &grid) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let dup = "t_idx,theta_idx,phi_idx,f_idx,score\n0,0,0,0,0.5\n0,0,0,0,0.6\n";
        assert!(matches!(parse_scores(dup, &grid), Err(Error::Parse { line: 3, .. })));
        let bad = "t_idx,theta_idx,phi_idx,f_idx,score\n0,0,0,0,abc\n";
        assert!(matches!(parse_scores(bad, &grid), Err(Error::Parse { line: 2, .. })));
        let short = "t_idx,theta_idx,phi_idx,f_idx,score\n0,0,0\n";
        assert!(matches!(parse_scores(short, &grid), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn empty_file_gives_empty_field() {
        let grid = build_full_grid(60.0, true).unwrap();
        let f = parse_scores("", &grid).unwrap();
        assert_eq!(f.eval_count(), 0);
        assert!(matches!(f.get(&GlimpseIndex::new(0, 0, 0, 0)), Err(Error::MissingScore(_))));
    }

    #[test]
    fn lazy_counter_counts_distinct() {
        let grid = build_coarse_grid(60.0).unwrap();
        let f = ScoreField::lazy(grid, Arc::new(RandomScorer { seed: 1 }));
        let g = GlimpseIndex::new(1, 2, 3, 0);
        let a = f.get(&g).unwrap();
        assert_eq!(f.get(&g).unwrap(), a);
        assert_eq!(f.eval_count(), 1);
        let batch: Vec<_> = f.grid().step(0).collect();
        f.materialize(&batch).unwrap();
        f.materialize(&batch).unwrap();
        assert_eq!(f.eval_count(), 1 + 54);
    }

    #[test]
    fn random_scorer_is_deterministic_across_grids() {
        let spec = ScorerSpec::new(ScorerKind::Random).with("seed", 11);
        let coarse = build_coarse_grid(60.0).unwrap();
        let full = build_full_grid(60.0, true).unwrap();
        let g = GlimpseIndex::new(2, 1, 4, 0);
        let a = proxy_score(None, &coarse, &g, &spec).unwrap();
        assert_eq!(a, proxy_score(None, &coarse, &g, &spec).unwrap());
        let pose = coarse.pose(&g);
        let same = full.locate(4, &pose).unwrap();
        assert_eq!(a, proxy_score(None, &full, &same, &spec).unwrap());
        assert!((0.0..1.0).contains(&a));
    }

    #[test]
    fn center_prior_peaks_at_origin() {
        let grid = build_full_grid(5.0, false).unwrap();
        let f = ScoreField::lazy(grid.clone(), Arc::new(CenterPrior));
        let best = grid
            .step(0)
            .max_by(|a, b| f.get(a).unwrap().total_cmp(&f.get(b).unwrap()))
            .unwrap();
        assert_eq!(grid.pose(&best).theta_deg, 0.0);
        assert_eq!(grid.pose(&best).phi_deg, 0.0);
    }

    #[test]
    fn static_frames_have_no_motion() {
        let seq = Arc::new(synth::constant_sequence(64, 32, 2.0, 12, [90, 120, 30]));
        let grid = build_full_grid(5.0, true).unwrap();
        let f = ScoreField::lazy(grid.clone(), Arc::new(FrameScorer::new(seq, FrameCue::Motion)));
        for g in grid.iter() {
            assert_eq!(f.get(&g).unwrap(), 0.0);
        }
    }

    #[test]
    fn missing_frames_is_a_data_error() {
        let seq = Arc::new(synth::constant_sequence(64, 32, 2.0, 6, [0, 0, 0]));
        let grid = build_full_grid(10.0, true).unwrap();
        let spec = ScorerSpec::new(ScorerKind::MotionProxy);
        let err = proxy_score(Some(seq), &grid, &GlimpseIndex::new(1, 0, 0, 0), &spec).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn motion_peaks_on_moving_blob() {
        let seq = Arc::new(synth::moving_blob_sequence(256, 128, 4.0, 20, 0.0, 100.0));
        let grid = build_full_grid(5.0, true).unwrap();
        let field = ScoreField::lazy(grid.clone(), Arc::new(FrameScorer::new(seq, FrameCue::Motion)));
        // exhaustive argmax over every glimpse
        let mut best = (GlimpseIndex::new(0, 0, 0, 0), f64::MIN);
        for g in grid.iter() {
            let s = field.get(&g).unwrap();
            if s > best.1 {
                best = (g, s);
            }
        }
        let pose = grid.pose(&best.0);
        assert!(best.0.theta_idx.abs_diff(5) <= 1, "{pose:?}");
        assert!(grid.phi_steps_between(best.0.phi_idx, 5) <= 1, "{pose:?}");
    }

    #[test]
    fn saliency_finds_static_blob() {
        let seq = Arc::new(synth::static_blob_sequence(256, 128, 2.0, 10, 20.0, 200.0));
        let grid = build_full_grid(5.0, false).unwrap();
        let field = ScoreField::lazy(grid.clone(), Arc::new(FrameScorer::new(seq, FrameCue::Saliency)));
        let best = grid
            .iter()
            .max_by(|a, b| field.get(a).unwrap().total_cmp(&field.get(b).unwrap()))
            .unwrap();
        assert!(best.theta_idx.abs_diff(7) <= 1);
        assert!(grid.phi_steps_between(best.phi_idx, 10) <= 1);
    }

    #[test]
    fn spec_requires_parameters() {
        assert!(ScorerSpec::new(ScorerKind::Random).build(None).is_err());
        assert!(ScorerSpec::new(ScorerKind::MotionProxy).build(None).is_err());
        assert!(ScorerSpec::new(ScorerKind::ExternalFile).build(None).is_err());
        assert!("gbvs".parse::<ScorerKind>().is_err());
    }
}
