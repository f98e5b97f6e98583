//! Simulation of RIS-assisted mmWave links on a highway with moving
//! blockers: channel model, beamforming, serving schemes, region maps and
//! the Monte Carlo engine.

pub mod channel;
pub mod config;
pub mod engine;
pub mod error;
pub mod output;
pub mod phy;
pub mod presets;
pub mod regionmap;
pub mod rng;
pub mod scenario;
pub mod schemes;

pub use config::{load_config, parse_config, scenario_hash};
pub use engine::{
    aggregate, run_trial, run_trial_schemes, sweep, trajectory_snapshot, Aggregate, MetricsRow,
    MetricsTable, SlotResult, SweepConfig, SweepVariable, TrajectoryRow,
};
pub use error::{Error, Result};
pub use output::{run_custom, run_preset, run_regionmap, CustomSweep, RunManifest};
pub use phy::{BeamformedLink, ImpairmentSpec, OptimizerOptions, PhaseConfig, Rate};
pub use presets::{calibrated_scenario, preset, Preset, PresetName, PresetOptions, Variant};
pub use regionmap::{build_region_map, build_region_map_at, RegionMap, RegionMapOptions};
pub use scenario::{BlockerBox, Point, Pose, RisSpec, Scenario};
pub use schemes::{PathCandidate, SchemeId};
