//! CSV tables, run manifests and the preset / custom runners that write them.
//!
//! Column orders are fixed:
//!
//! * `metrics*.csv`: sweep_name, sweep_value, scheme, throughput_bps,
//!   outage_prob, mean_se_bpshz, n_slots, ci_halfwidth_bps
//! * `trajectory.csv`: slot, time_s, ue_x, blocker_x, blocked_direct, scheme,
//!   path, spectral_efficiency, rate_bps, unblocked_direct_bps
//! * `regionmap.csv`: blocker_x, ue_x, candidate, mean_gain_db (empty
//!   blocker_x is the no-blocker row)

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{load_config, scenario_hash};
use crate::engine::{sweep, trajectory_snapshot, MetricsTable, SweepConfig, SweepVariable, TrajectoryRow};
use crate::error::{Error, Result};
use crate::presets::{preset, PresetName, PresetOptions, Variant};
use crate::regionmap::{
    build_region_map, build_region_map_at, map_to_figure_rows, FigureRow, RegionMapOptions,
};
use crate::scenario::Scenario;
use crate::schemes::SchemeId;

pub const METRICS_COLUMNS: [&str; 8] = [
    "sweep_name",
    "sweep_value",
    "scheme",
    "throughput_bps",
    "outage_prob",
    "mean_se_bpshz",
    "n_slots",
    "ci_halfwidth_bps",
];

#[derive(Serialize)]
struct MetricsRecord<'a> {
    sweep_name: &'a str,
    sweep_value: f64,
    scheme: &'a str,
    throughput_bps: f64,
    outage_prob: f64,
    mean_se_bpshz: f64,
    n_slots: u64,
    ci_halfwidth_bps: f64,
}

pub fn write_metrics_csv(path: &Path, table: &MetricsTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &table.rows {
        w.serialize(MetricsRecord {
            sweep_name: &table.sweep_name,
            sweep_value: r.sweep_value,
            scheme: r.scheme.name(),
            throughput_bps: r.metrics.throughput_bps,
            outage_prob: r.metrics.outage_prob,
            mean_se_bpshz: r.metrics.mean_se_bpshz,
            n_slots: r.metrics.n_slots,
            ci_halfwidth_bps: r.metrics.ci_halfwidth_bps,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_csv(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_regionmap_csv(path: &Path, rows: &[FigureRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Metadata written as `manifest.json` next to every run's tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub preset: Option<String>,
    pub config: Option<String>,
    pub ris_count: Option<usize>,
    pub sweep: Option<String>,
    pub seed: u64,
    pub trials: u64,
    pub out_dir: String,
    pub version: String,
    pub scenario_hash: String,
    pub files: Vec<String>,
}

impl RunManifest {
    fn write(&self, dir: &Path) -> Result<PathBuf> {
        let p = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&p, text)?;
        Ok(p)
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Evenly stepped values from `from` to `to` inclusive.
pub fn stepped_values(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) {
        return Err(Error::Validation("sweep bounds must be finite".into()));
    }
    if step <= 0.0 {
        return Err(Error::Validation("sweep step > 0".into()));
    }
    if to < from {
        return Err(Error::Validation("sweep to ≥ from".into()));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| from + k as f64 * step).collect())
}

fn run_variants(
    scenario: &Scenario,
    variants: &[Variant],
    cfg: &SweepConfig,
    dir: &Path,
    files: &mut Vec<String>,
) -> Result<()> {
    for v in variants {
        let table = sweep(&v.apply(scenario), cfg)?;
        write_metrics_csv(&dir.join(v.file_name()), &table)?;
        files.push(v.file_name().to_string());
    }
    Ok(())
}

/// Run a figure preset and write its tables and manifest into `out_dir`.
/// Returns the written file names.
pub fn run_preset(
    name: PresetName,
    opts: &PresetOptions,
    seed: u64,
    trials: u64,
    out_dir: &Path,
) -> Result<Vec<String>> {
    if trials == 0 {
        return Err(Error::Validation("trials ≥ 1".into()));
    }
    let p = preset(name, opts)?;
    prepare_dir(out_dir)?;
    let map_opts = RegionMapOptions::default();
    let mut files = Vec::new();

    if let Some((variable, values)) = &p.sweep {
        let cfg = SweepConfig {
            variable: *variable,
            values: values.clone(),
            schemes: p.schemes.clone(),
            trials,
            n_slots: p.n_slots,
            seed,
            map: map_opts.clone(),
        };
        run_variants(&p.scenario, &p.variants, &cfg, out_dir, &mut files)?;
    }
    if let Some(n) = p.trajectory_slots {
        let map = build_region_map(&p.scenario, &map_opts);
        let rows = trajectory_snapshot(&p.scenario, &p.schemes, &map, n, seed)?;
        write_trajectory_csv(&out_dir.join("trajectory.csv"), &rows)?;
        files.push("trajectory.csv".into());
    }
    if let Some(xs) = &p.map_blockers {
        let map = build_region_map_at(&p.scenario, &map_opts, xs);
        write_regionmap_csv(&out_dir.join("regionmap.csv"), &map_to_figure_rows(&map))?;
        files.push("regionmap.csv".into());
    }

    let manifest = RunManifest {
        preset: Some(name.to_string()),
        config: None,
        ris_count: Some(opts.ris_count),
        sweep: p.sweep.as_ref().map(|(v, _)| v.to_string()),
        seed,
        trials,
        out_dir: out_dir.display().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario_hash: scenario_hash(&p.scenario),
        files: files.clone(),
    };
    manifest.write(out_dir)?;
    files.push("manifest.json".into());
    Ok(files)
}

/// Sweep request for a custom scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct CustomSweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

/// Run every applicable scheme on a scenario file. Without a sweep the
/// scenario's own transmit power is the single sweep point.
pub fn run_custom(
    config: &Path,
    custom: Option<&CustomSweep>,
    seed: u64,
    trials: u64,
    out_dir: &Path,
) -> Result<Vec<String>> {
    if trials == 0 {
        return Err(Error::Validation("trials ≥ 1".into()));
    }
    let scenario = load_config(config)?;
    let (variable, values) = match custom {
        Some(c) => (c.variable, c.values.clone()),
        None => (SweepVariable::TxPower, vec![scenario.tx_power]),
    };
    if values.is_empty() {
        return Err(Error::Validation("sweep needs at least one value".into()));
    }
    for &v in &values {
        variable.apply(&scenario, v)?;
    }
    prepare_dir(out_dir)?;
    let schemes = applicable_schemes(&scenario);
    let cfg = SweepConfig {
        variable,
        values,
        schemes,
        trials,
        n_slots: crate::presets::DEFAULT_SLOTS,
        seed,
        map: RegionMapOptions::default(),
    };
    let table = sweep(&scenario, &cfg)?;
    write_metrics_csv(&out_dir.join("metrics.csv"), &table)?;
    let files = vec!["metrics.csv".to_string()];
    let manifest = RunManifest {
        preset: None,
        config: Some(config.display().to_string()),
        ris_count: None,
        sweep: Some(variable.to_string()),
        seed,
        trials,
        out_dir: out_dir.display().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario_hash: scenario_hash(&scenario),
        files: files.clone(),
    };
    manifest.write(out_dir)?;
    let mut out = files;
    out.push("manifest.json".into());
    Ok(out)
}

/// Region map of a scenario file at the given blocker positions (the full
/// blocker grid when empty).
pub fn run_regionmap(config: &Path, blockers: &[f64], out_dir: &Path) -> Result<Vec<String>> {
    let scenario = load_config(config)?;
    prepare_dir(out_dir)?;
    let opts = RegionMapOptions::default();
    let map = if blockers.is_empty() {
        build_region_map(&scenario, &opts)
    } else {
        build_region_map_at(&scenario, &opts, blockers)
    };
    write_regionmap_csv(&out_dir.join("regionmap.csv"), &map_to_figure_rows(&map))?;
    let manifest = RunManifest {
        preset: None,
        config: Some(config.display().to_string()),
        ris_count: None,
        sweep: None,
        seed: scenario.seed,
        trials: 0,
        out_dir: out_dir.display().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario_hash: scenario_hash(&scenario),
        files: vec!["regionmap.csv".into()],
    };
    manifest.write(out_dir)?;
    Ok(vec!["regionmap.csv".into(), "manifest.json".into()])
}

/// Schemes whose required entities exist in the scenario.
pub fn applicable_schemes(s: &Scenario) -> Vec<SchemeId> {
    SchemeId::ALL
        .into_iter()
        .filter(|id| match id {
            SchemeId::NoRisSub6 => s.fallback.is_some(),
            SchemeId::AdditionalBs => s.extra_bs.is_some(),
            SchemeId::Repeater => !s.repeater.is_empty(),
            _ => true,
        })
        .collect()
}
