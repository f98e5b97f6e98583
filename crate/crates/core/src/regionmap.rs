//! Regions of responsibility: for each (blocker x, UE x) cell, the serving
//! path with the best long-term gain. Built offline from large-scale gains;
//! consulted online with predicted positions.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{large_scale_gain_db, linear_to_db, realize_channels};
use crate::error::{Error, Result};
use crate::phy::{optimize_beamforming, OptimizerOptions};
use crate::rng::substream;
use crate::scenario::{BlockerBox, Point, Pose, Scenario};
use crate::schemes::PathCandidate;

static CLAMPED_LOOKUPS: AtomicU64 = AtomicU64::new(0);

/// Lookups that fell outside the grid and were clamped to its edge.
pub fn clamped_lookup_count() -> u64 {
    CLAMPED_LOOKUPS.load(Ordering::Relaxed)
}

/// Uniform 1-D grid of cell centers `start + k·step`, k < len.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Grid {
    pub fn spanning(start: f64, end: f64, step: f64) -> Self {
        let len = ((end - start) / step + 1e-9).floor() as usize + 1;
        Self { start, step, len }
    }

    pub fn center(&self, k: usize) -> f64 {
        self.start + self.step * k as f64
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|k| self.center(k))
    }

    /// Nearest cell, and whether `x` lay outside the grid.
    pub fn nearest(&self, x: f64) -> (usize, bool) {
        let last = self.center(self.len - 1);
        let outside = x < self.start - self.step / 2.0 || x > last + self.step / 2.0;
        let k = ((x - self.start) / self.step).round();
        let k = k.clamp(0.0, (self.len - 1) as f64) as usize;
        (k, outside)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub path: PathCandidate,
    pub gain_db: f64,
}

/// One blocker position's worth of cells. `blocker_x = None` is the
/// no-blocker row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapRow {
    pub blocker_x: Option<f64>,
    pub cells: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub ue_grid: Grid,
    /// Blocker cells; rows[0] is the no-blocker row, rows[k + 1] matches
    /// `blocker_grid.center(k)` when the grid is uniform.
    pub blocker_grid: Option<Grid>,
    pub rows: Vec<MapRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionMapOptions {
    pub grid_step: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// Average this many fading draws of the optimized gain per cell instead
    /// of using the deterministic large-scale gain.
    pub monte_carlo_draws: Option<usize>,
}

impl Default for RegionMapOptions {
    fn default() -> Self {
        Self {
            grid_step: 2.0,
            x_min: 0.0,
            x_max: 400.0,
            monte_carlo_draws: None,
        }
    }
}

/// Blocker template used for map cells: the scenario's own blocker if it has
/// one, otherwise a standard truck.
pub fn template_blocker(scenario: &Scenario) -> BlockerBox {
    scenario
        .blocker
        .clone()
        .unwrap_or_else(|| BlockerBox::truck(0.0, 0.0))
}

fn ue_point(scenario: &Scenario, x: f64) -> Point {
    Point::new(x, scenario.ue.position.y, scenario.ue.position.z)
}

fn cell_gain(
    scenario: &Scenario,
    path: PathCandidate,
    ue: &Point,
    blocker: Option<&BlockerBox>,
    mc: Option<(usize, u64)>,
) -> f64 {
    match mc {
        None => large_scale_gain_db(scenario, path, ue, blocker),
        Some((draws, key)) => {
            let pose = Pose {
                position: *ue,
                velocity: Point::zeros(),
            };
            let mut acc = 0.0;
            for d in 0..draws {
                let mut rng = substream(scenario.seed, &[0x004d_4150, key, d as u64]);
                let mut r = realize_channels(scenario, &pose, blocker, &mut rng);
                if matches!(path, PathCandidate::ViaRis(_)) {
                    // Cascade only, like the deterministic cell gain.
                    r.direct.matrix.fill(num_complex::Complex64::new(0.0, 0.0));
                }
                acc += optimize_beamforming(&r, path, OptimizerOptions::default())
                    .map(|l| l.effective_gain)
                    .unwrap_or(0.0);
            }
            linear_to_db(acc / draws as f64)
        }
    }
}

fn build_row(
    scenario: &Scenario,
    ue_grid: &Grid,
    blocker: Option<&BlockerBox>,
    mc: Option<(usize, u64)>,
) -> MapRow {
    let candidates = PathCandidate::map_candidates(scenario);
    let cells = ue_grid
        .centers()
        .enumerate()
        .map(|(k, x)| {
            let ue = ue_point(scenario, x);
            let mut best: Option<Cell> = None;
            for &p in &candidates {
                let g = cell_gain(
                    scenario,
                    p,
                    &ue,
                    blocker,
                    mc.map(|(d, key)| (d, key.wrapping_mul(1_000_003) + k as u64)),
                );
                if best.is_none_or(|b| g > b.gain_db) {
                    best = Some(Cell { path: p, gain_db: g });
                }
            }
            best.expect("Direct is always a candidate")
        })
        .collect();
    MapRow {
        blocker_x: blocker.map(|b| b.pose.position.x),
        cells,
    }
}

/// Map over a uniform blocker grid equal to the UE grid, plus the
/// no-blocker row.
pub fn build_region_map(scenario: &Scenario, opts: &RegionMapOptions) -> RegionMap {
    let grid = Grid::spanning(opts.x_min, opts.x_max, opts.grid_step);
    let blocker_xs: Vec<f64> = grid.centers().collect();
    let mut map = build_region_map_at(scenario, opts, &blocker_xs);
    map.blocker_grid = Some(grid);
    map
}

/// Map for an explicit list of blocker x positions (rows in the given order
/// after the no-blocker row).
pub fn build_region_map_at(
    scenario: &Scenario,
    opts: &RegionMapOptions,
    blocker_xs: &[f64],
) -> RegionMap {
    let ue_grid = Grid::spanning(opts.x_min, opts.x_max, opts.grid_step);
    let template = template_blocker(scenario);
    let mc = opts.monte_carlo_draws;
    let blockers: Vec<Option<BlockerBox>> = std::iter::once(None)
        .chain(blocker_xs.iter().map(|&x| Some(template.at_x(x))))
        .collect();
    let rows = blockers
        .par_iter()
        .enumerate()
        .map(|(k, b)| build_row(scenario, &ue_grid, b.as_ref(), mc.map(|d| (d, k as u64))))
        .collect();
    RegionMap {
        ue_grid,
        blocker_grid: None,
        rows,
    }
}

impl RegionMap {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() || self.ue_grid.len == 0
    }

    fn row_for(&self, blocker_x: Option<f64>) -> (&MapRow, bool) {
        let Some(bx) = blocker_x else {
            return (&self.rows[0], false);
        };
        if let Some(grid) = &self.blocker_grid {
            let (k, clamped) = grid.nearest(bx);
            return (&self.rows[k + 1], clamped);
        }
        // Explicit rows: nearest listed blocker position.
        let row = self.rows[1..]
            .iter()
            .min_by(|a, b| {
                let da = (a.blocker_x.unwrap() - bx).abs();
                let db = (b.blocker_x.unwrap() - bx).abs();
                da.total_cmp(&db)
            })
            .unwrap_or(&self.rows[0]);
        (row, false)
    }

    /// Cell for the given positions, clamping out-of-grid coordinates.
    pub fn lookup(&self, ue_x: f64, blocker_x: Option<f64>) -> Result<(Cell, bool)> {
        if self.is_empty() {
            return Err(Error::EmptyMap);
        }
        let (row, clamped_b) = self.row_for(blocker_x);
        let (k, clamped_u) = self.ue_grid.nearest(ue_x);
        Ok((row.cells[k], clamped_b || clamped_u))
    }

    /// Serving path for the given positions; counts clamped lookups.
    pub fn decide(&self, ue_x: f64, blocker_x: Option<f64>) -> Result<PathCandidate> {
        let (cell, clamped) = self.lookup(ue_x, blocker_x)?;
        if clamped {
            CLAMPED_LOOKUPS.fetch_add(1, Ordering::Relaxed);
        }
        Ok(cell.path)
    }

    /// Number of cells (rows × UE cells).
    pub fn cell_count(&self) -> usize {
        self.rows.len() * self.ue_grid.len
    }
}

/// Cache key of a map: hash of the scenario and the build options.
pub fn cache_key(scenario: &Scenario, opts: &RegionMapOptions) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(scenario).expect("scenario serializes"));
    h.update(serde_json::to_vec(opts).expect("options serialize"));
    hex::encode(&h.finalize()[..12])
}

/// Load the map from `cache_dir` when present, otherwise build and store it.
pub fn load_or_build(
    scenario: &Scenario,
    opts: &RegionMapOptions,
    cache_dir: Option<&Path>,
) -> Result<RegionMap> {
    let Some(dir) = cache_dir else {
        return Ok(build_region_map(scenario, opts));
    };
    let path: PathBuf = dir.join(format!("regionmap-{}.json", cache_key(scenario, opts)));
    if let Ok(bytes) = std::fs::read(&path) {
        if let Ok(map) = serde_json::from_slice::<RegionMap>(&bytes) {
            return Ok(map);
        }
    }
    let map = build_region_map(scenario, opts);
    std::fs::create_dir_all(dir)?;
    std::fs::write(&path, serde_json::to_vec(&map)?)?;
    Ok(map)
}

/// Report from the UE at slot `report_slot`, used to plan slot `target_slot`.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionInput {
    pub ue_pose_at_report: Pose,
    pub blocker_pose_at_report: Option<Pose>,
    pub report_slot: u64,
    pub target_slot: u64,
}

/// Constant-velocity extrapolation of both poses to the target slot.
pub fn predict(input: &PredictionInput, slot_duration: f64) -> (Point, Option<Point>) {
    let dt = input.target_slot.saturating_sub(input.report_slot) as f64 * slot_duration;
    (
        input.ue_pose_at_report.advance(dt).position,
        input
            .blocker_pose_at_report
            .as_ref()
            .map(|b| b.advance(dt).position),
    )
}

/// One exported map cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FigureRow {
    /// Empty for the no-blocker row.
    pub blocker_x: Option<f64>,
    pub ue_x: f64,
    pub candidate: String,
    pub mean_gain_db: f64,
}

/// Flatten the map into rows ordered by (blocker_x, ue_x), no-blocker first.
pub fn map_to_figure_rows(map: &RegionMap) -> Vec<FigureRow> {
    let mut rows: Vec<FigureRow> = map
        .rows
        .iter()
        .flat_map(|r| {
            map.ue_grid.centers().zip(&r.cells).map(move |(x, c)| FigureRow {
                blocker_x: r.blocker_x,
                ue_x: x,
                candidate: c.path.to_string(),
                mean_gain_db: c.gain_db,
            })
        })
        .collect();
    rows.sort_by(|a, b| {
        let ka = a.blocker_x.unwrap_or(f64::NEG_INFINITY);
        let kb = b.blocker_x.unwrap_or(f64::NEG_INFINITY);
        ka.total_cmp(&kb).then(a.ue_x.total_cmp(&b.ue_x))
    });
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{UE_HEIGHT, UE_LANE_Y};

    fn small_opts(step: f64) -> RegionMapOptions {
        RegionMapOptions {
            grid_step: step,
            x_min: 0.0,
            x_max: 400.0,
            monte_carlo_draws: None,
        }
    }

    #[test]
    fn grid_nearest_and_clamp() {
        let g = Grid::spanning(0.0, 400.0, 2.0);
        assert_eq!(g.len, 201);
        assert_eq!(g.nearest(3.1), (2, false));
        assert_eq!(g.nearest(10_400.0), (200, true));
        assert_eq!(g.nearest(-50.0), (0, true));
    }

    #[test]
    fn no_blocker_row_is_all_direct() {
        let s = crate::presets::calibrated_scenario();
        let map = build_region_map(&s, &small_opts(2.0));
        assert!(map.rows[0].blocker_x.is_none());
        assert!(map.rows[0].cells.iter().all(|c| c.path == PathCandidate::Direct));
        for x in [0.0, 123.0, 399.0] {
            assert_eq!(map.decide(x, None).unwrap(), PathCandidate::Direct);
        }
    }

    #[test]
    fn matches_independent_argmax() {
        let s = crate::presets::calibrated_scenario();
        let opts = small_opts(4.0);
        let map = build_region_map(&s, &opts);
        let truck = template_blocker(&s);
        for row in &map.rows {
            for (k, cell) in row.cells.iter().enumerate() {
                let ue = Point::new(map.ue_grid.center(k), UE_LANE_Y, UE_HEIGHT);
                let b = row.blocker_x.map(|x| truck.at_x(x));
                let mut gains = vec![(PathCandidate::Direct, large_scale_gain_db(&s, PathCandidate::Direct, &ue, b.as_ref()))];
                for i in 0..s.ris.len() {
                    let p = PathCandidate::ViaRis(i);
                    gains.push((p, large_scale_gain_db(&s, p, &ue, b.as_ref())));
                }
                let best = gains.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
                let winner = gains.iter().find(|g| g.1 == best).unwrap().0;
                assert_eq!(cell.path, winner);
            }
        }
    }

    #[test]
    fn empty_map_is_an_error() {
        let map = RegionMap {
            ue_grid: Grid { start: 0.0, step: 1.0, len: 0 },
            blocker_grid: None,
            rows: vec![],
        };
        assert!(matches!(map.decide(1.0, None), Err(Error::EmptyMap)));
    }

    #[test]
    fn far_ue_is_clamped_and_counted() {
        let s = crate::presets::calibrated_scenario();
        let map = build_region_map(&s, &small_opts(4.0));
        let before = clamped_lookup_count();
        let edge = map.decide(400.0, Some(150.0)).unwrap();
        assert_eq!(map.decide(10_400.0, Some(150.0)).unwrap(), edge);
        assert!(clamped_lookup_count() > before);
    }

    #[test]
    fn refinement_is_consistent() {
        let s = crate::presets::calibrated_scenario();
        let coarse = build_region_map(&s, &small_opts(4.0));
        let fine = build_region_map(&s, &small_opts(2.0));
        let mut agree = 0usize;
        let mut total = 0usize;
        for (ci, row) in coarse.rows.iter().enumerate() {
            let fine_row = &fine.rows[if ci == 0 { 0 } else { 2 * (ci - 1) + 1 }];
            for (k, cell) in row.cells.iter().enumerate() {
                // Children of coarse cell k (center 4k) are fine cells 2k-1, 2k, 2k+1
                // (centers 4k-2, 4k, 4k+2); take the majority.
                let kids: Vec<PathCandidate> = [2 * k as i64 - 1, 2 * k as i64, 2 * k as i64 + 1]
                    .iter()
                    .filter(|&&j| j >= 0 && (j as usize) < fine.ue_grid.len)
                    .map(|&j| fine_row.cells[j as usize].path)
                    .collect();
                let majority = kids
                    .iter()
                    .max_by_key(|p| kids.iter().filter(|q| q == p).count())
                    .copied()
                    .unwrap();
                total += 1;
                if majority == cell.path {
                    agree += 1;
                }
            }
        }
        assert!(agree as f64 / total as f64 >= 0.95, "{agree}/{total}");
    }

    #[test]
    fn prediction_examples() {
        let ue = Pose::new([100.0, 0.0, 1.5], [30.0, 0.0, 0.0]);
        let blk = Pose::new([90.0, 3.5, 2.0], [20.0, 0.0, 0.0]);
        let same = PredictionInput {
            ue_pose_at_report: ue.clone(),
            blocker_pose_at_report: Some(blk.clone()),
            report_slot: 5,
            target_slot: 5,
        };
        let (u, b) = predict(&same, 0.1);
        assert_eq!(u, ue.position);
        assert_eq!(b, Some(blk.position));

        let ten = PredictionInput { target_slot: 15, ..same.clone() };
        let (u, _) = predict(&ten, 0.1);
        assert!((u.x - 130.0).abs() < 1e-9);

        let one_second = PredictionInput { target_slot: 15, ..same };
        let (u, b) = predict(&one_second, 0.1);
        let gap_before = ue.position.x - blk.position.x;
        let gap_after = u.x - b.unwrap().x;
        assert!((gap_after - gap_before - 10.0).abs() < 1e-9);
    }

    #[test]
    fn figure_rows_cardinality_and_order() {
        let s = crate::presets::calibrated_scenario();
        let opts = RegionMapOptions { grid_step: 100.0, x_min: 0.0, x_max: 300.0, monte_carlo_draws: None };
        let map = build_region_map_at(&s, &opts, &[250.0, 50.0]);
        // (no-blocker + 2 blockers) × 4 UE cells.
        let rows = map_to_figure_rows(&map);
        assert_eq!(rows.len(), 12);
        let keys: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.blocker_x.unwrap_or(f64::NEG_INFINITY), r.ue_x))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        assert_eq!(keys, sorted);
        for r in &rows {
            let p: PathCandidate = r.candidate.parse().unwrap();
            assert!(p.exists_in(&s));
        }
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = crate::presets::calibrated_scenario();
        let opts = small_opts(20.0);
        let a = load_or_build(&s, &opts, Some(dir.path())).unwrap();
        let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 1);
        let b = load_or_build(&s, &opts, Some(dir.path())).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monte_carlo_map_agrees_on_clear_cells() {
        let s = crate::presets::calibrated_scenario();
        let opts = RegionMapOptions { grid_step: 50.0, x_min: 50.0, x_max: 250.0, monte_carlo_draws: Some(20) };
        let map = build_region_map_at(&s, &opts, &[]);
        assert!(map.rows[0].cells.iter().all(|c| c.path == PathCandidate::Direct));
    }
}
