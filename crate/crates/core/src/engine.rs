//! Monte Carlo slot loop, metric aggregation and parameter sweeps.
//!
//! Randomness is keyed by `(seed, trial, slot)` only, never by scheme or
//! sweep value, so every scheme and every sweep point sees the same fading
//! and the same trajectory (common random numbers).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::realize_channels;
use crate::error::{Error, Result};
use crate::regionmap::{build_region_map, predict, PredictionInput, RegionMap, RegionMapOptions};
use crate::rng::{substream, CHANNEL, PREDICTION};
use crate::scenario::{Scenario, ThroughputMode};
use crate::schemes::{serve_slot, PathCandidate, SchemeId, SlotContext, SlotState};

#[derive(Clone, Debug, PartialEq)]
pub struct SlotResult {
    pub slot: u64,
    pub scheme: SchemeId,
    pub path: PathCandidate,
    /// bit/s/Hz.
    pub spectral_efficiency: f64,
    /// bit/s.
    pub rate: f64,
    pub outage: bool,
    pub blocked_direct: bool,
}

impl SlotResult {
    /// Bits per second actually delivered in this slot.
    pub fn delivered(&self, mode: ThroughputMode, threshold: f64) -> f64 {
        if self.outage {
            return 0.0;
        }
        match mode {
            ThroughputMode::Adaptive => self.rate,
            ThroughputMode::FixedRate if self.spectral_efficiency > 0.0 => {
                self.rate / self.spectral_efficiency * threshold
            }
            ThroughputMode::FixedRate => 0.0,
        }
    }
}

fn lsrpa_state(scenario: &Scenario, seed: u64, trial: u64, slot: u64) -> SlotState {
    let dt = scenario.slot_duration;
    let report = slot.saturating_sub(scenario.prediction_horizon as u64);
    let t_report = report as f64 * dt;
    let input = PredictionInput {
        ue_pose_at_report: scenario.ue_at(t_report),
        blocker_pose_at_report: scenario.blocker_at(t_report).map(|b| b.pose),
        report_slot: report,
        target_slot: slot,
    };
    let (mut ue, mut blocker) = predict(&input, dt);
    if scenario.prediction_noise_std > 0.0 {
        let mut rng = substream(seed, &[trial, slot, PREDICTION]);
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        ue.x += scenario.prediction_noise_std * e1;
        if let Some(b) = blocker.as_mut() {
            b.x += scenario.prediction_noise_std * e2;
        }
    }
    SlotState {
        predicted_ue: ue,
        predicted_blocker: blocker,
    }
}

/// One trial for several schemes on a shared trajectory and shared fading.
/// Returns one result list per scheme, in the order given.
pub fn run_trial_schemes(
    scenario: &Scenario,
    schemes: &[SchemeId],
    map: &RegionMap,
    n_slots: u64,
    seed: u64,
    trial: u64,
) -> Result<Vec<Vec<SlotResult>>> {
    if n_slots == 0 {
        return Err(Error::Validation("n_slots ≥ 1".into()));
    }
    let mut out: Vec<Vec<SlotResult>> = schemes
        .iter()
        .map(|_| Vec::with_capacity(n_slots as usize))
        .collect();
    // Handover bookkeeping for AdditionalBs: (last path, penalty slots left).
    let mut handover: Vec<(Option<PathCandidate>, u32)> = vec![(None, 0); schemes.len()];

    for slot in 0..n_slots {
        let t = slot as f64 * scenario.slot_duration;
        let ue = scenario.ue_at(t);
        let blocker = scenario.blocker_at(t);
        let mut rng = substream(seed, &[trial, slot, CHANNEL]);
        let realization = realize_channels(scenario, &ue, blocker.as_ref(), &mut rng);
        let ctx = SlotContext::new(scenario, &realization, seed, trial, slot);
        let state = lsrpa_state(scenario, seed, trial, slot);

        for (k, &scheme) in schemes.iter().enumerate() {
            let outcome = serve_slot(scheme, &state, &ctx, map)?;
            let (mut se, mut rate) = (outcome.rate.spectral_efficiency, outcome.rate.bps);
            if scheme == SchemeId::AdditionalBs {
                let (last, left) = &mut handover[k];
                if last.is_some_and(|p| p != outcome.path) {
                    *left = scenario.handover_penalty_slots;
                }
                *last = Some(outcome.path);
                if *left > 0 {
                    *left -= 1;
                    se = 0.0;
                    rate = 0.0;
                }
            }
            out[k].push(SlotResult {
                slot,
                scheme,
                path: outcome.path,
                spectral_efficiency: se,
                rate,
                outage: se < scenario.rate_threshold,
                blocked_direct: realization.direct.blocked,
            });
        }
    }
    Ok(out)
}

/// One trial of a single scheme.
pub fn run_trial(
    scenario: &Scenario,
    scheme: SchemeId,
    map: &RegionMap,
    n_slots: u64,
    seed: u64,
    trial: u64,
) -> Result<Vec<SlotResult>> {
    Ok(run_trial_schemes(scenario, &[scheme], map, n_slots, seed, trial)?
        .pop()
        .expect("one scheme in, one list out"))
}

const MICRO: f64 = 1e6;
const PICO: f64 = 1e12;

/// Exact, order-independent running sums (fixed point) so that merging
/// partial results in any order reproduces the sequential aggregate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Accumulator {
    pub n: u64,
    pub outages: u64,
    /// Σ delivered, µbit/s.
    delivered: i128,
    /// Σ round(delivered)², (bit/s)².
    delivered_sq: i128,
    /// Σ round(delivered), bit/s.
    delivered_whole: i128,
    /// Σ spectral efficiency, pbit/s/Hz.
    se: i128,
}

impl Accumulator {
    pub fn push(&mut self, r: &SlotResult, mode: ThroughputMode, threshold: f64) {
        let d = r.delivered(mode, threshold);
        let whole = d.round() as i128;
        self.n += 1;
        self.outages += r.outage as u64;
        self.delivered += (d * MICRO).round() as i128;
        self.delivered_whole += whole;
        self.delivered_sq += whole * whole;
        self.se += (r.spectral_efficiency * PICO).round() as i128;
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.n += other.n;
        self.outages += other.outages;
        self.delivered += other.delivered;
        self.delivered_sq += other.delivered_sq;
        self.delivered_whole += other.delivered_whole;
        self.se += other.se;
    }

    pub fn finish(&self) -> Aggregate {
        let n = self.n as f64;
        let throughput = self.delivered as f64 / MICRO / n;
        let ci = if self.n > 1 {
            let nn = self.n as i128;
            // n·Σx² − (Σx)², exact in integers.
            let spread = nn * self.delivered_sq - self.delivered_whole * self.delivered_whole;
            let var = spread.max(0) as f64 / (n * (n - 1.0));
            1.96 * (var / n).sqrt()
        } else {
            0.0
        };
        Aggregate {
            throughput_bps: throughput,
            outage_prob: self.outages as f64 / n,
            mean_se_bpshz: self.se as f64 / PICO / n,
            n_slots: self.n,
            ci_halfwidth_bps: ci,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub throughput_bps: f64,
    pub outage_prob: f64,
    pub mean_se_bpshz: f64,
    pub n_slots: u64,
    /// 1.96 · sample std of per-slot delivered rate / √n.
    pub ci_halfwidth_bps: f64,
}

/// Throughput, outage and confidence width of a list of slots.
pub fn aggregate(results: &[SlotResult], scenario: &Scenario) -> Result<Aggregate> {
    if results.is_empty() {
        return Err(Error::Validation("aggregate needs at least one slot".into()));
    }
    let mut acc = Accumulator::default();
    for r in results {
        acc.push(r, scenario.throughput_mode, scenario.rate_threshold);
    }
    Ok(acc.finish())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    TxPower,
    RisElements,
    PhaseNoiseBound,
    VplDb,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::TxPower => "tx_power_dbm",
            SweepVariable::RisElements => "ris_elements",
            SweepVariable::PhaseNoiseBound => "phase_noise_bound",
            SweepVariable::VplDb => "vpl_db",
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            SweepVariable::TxPower => "dBm",
            SweepVariable::RisElements => "elements",
            SweepVariable::PhaseNoiseBound => "rad",
            SweepVariable::VplDb => "dB",
        }
    }

    /// Scenario with this variable set to `value`.
    pub fn apply(&self, scenario: &Scenario, value: f64) -> Result<Scenario> {
        let mut s = scenario.clone();
        match self {
            SweepVariable::TxPower => s.tx_power = value,
            SweepVariable::RisElements => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Validation(format!(
                        "ris_elements must be a positive integer (got {value})"
                    )));
                }
                s.ris.iter_mut().for_each(|r| r.n_elements = value as usize);
            }
            SweepVariable::PhaseNoiseBound => {
                s.ris.iter_mut().for_each(|r| r.phase_noise_bound = value)
            }
            SweepVariable::VplDb => s.vpl = value,
        }
        s.validate()?;
        Ok(s)
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepVariable::TxPower,
            SweepVariable::RisElements,
            SweepVariable::PhaseNoiseBound,
            SweepVariable::VplDb,
        ]
        .into_iter()
        .find(|v| v.name() == s)
        .ok_or_else(|| Error::UnknownSweep(s.to_string()))
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub schemes: Vec<SchemeId>,
    pub trials: u64,
    pub n_slots: u64,
    pub seed: u64,
    pub map: RegionMapOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRow {
    pub sweep_value: f64,
    pub scheme: SchemeId,
    #[serde(flatten)]
    pub metrics: Aggregate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsTable {
    pub sweep_name: String,
    pub sweep_unit: String,
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn get(&self, value: f64, scheme: SchemeId) -> Option<&Aggregate> {
        self.rows
            .iter()
            .find(|r| r.sweep_value == value && r.scheme == scheme)
            .map(|r| &r.metrics)
    }

    /// `(value, metrics)` pairs of one scheme in sweep order.
    pub fn series(&self, scheme: SchemeId) -> Vec<(f64, Aggregate)> {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme)
            .map(|r| (r.sweep_value, r.metrics))
            .collect()
    }
}

/// Accumulators per scheme for a batch of trials at one sweep point.
pub fn run_trials(
    scenario: &Scenario,
    schemes: &[SchemeId],
    map: &RegionMap,
    trials: u64,
    n_slots: u64,
    seed: u64,
) -> Result<Vec<Accumulator>> {
    let per_trial: Vec<Vec<Accumulator>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let lists = run_trial_schemes(scenario, schemes, map, n_slots, seed, trial)?;
            Ok(lists
                .iter()
                .map(|slots| {
                    let mut acc = Accumulator::default();
                    for r in slots {
                        acc.push(r, scenario.throughput_mode, scenario.rate_threshold);
                    }
                    acc
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut total = vec![Accumulator::default(); schemes.len()];
    for accs in &per_trial {
        for (t, a) in total.iter_mut().zip(accs) {
            t.merge(a);
        }
    }
    Ok(total)
}

/// Run every scheme at every sweep value and aggregate.
pub fn sweep(scenario: &Scenario, cfg: &SweepConfig) -> Result<MetricsTable> {
    if cfg.values.is_empty() {
        return Err(Error::Validation("sweep needs at least one value".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::Validation("trials ≥ 1".into()));
    }
    let mut rows = Vec::with_capacity(cfg.values.len() * cfg.schemes.len());
    for &value in &cfg.values {
        let s = cfg.variable.apply(scenario, value)?;
        let map = build_region_map(&s, &cfg.map);
        let accs = run_trials(&s, &cfg.schemes, &map, cfg.trials, cfg.n_slots, cfg.seed)?;
        for (&scheme, acc) in cfg.schemes.iter().zip(&accs) {
            rows.push(MetricsRow {
                sweep_value: value,
                scheme,
                metrics: acc.finish(),
            });
        }
    }
    Ok(MetricsTable {
        sweep_name: cfg.variable.name().to_string(),
        sweep_unit: cfg.variable.unit().to_string(),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub slot: u64,
    pub time_s: f64,
    pub ue_x: f64,
    pub blocker_x: Option<f64>,
    pub blocked_direct: bool,
    pub scheme: SchemeId,
    pub path: PathCandidate,
    pub spectral_efficiency: f64,
    pub rate_bps: f64,
    /// Main-band direct-link rate on the same fading with the blocker removed.
    pub unblocked_direct_bps: f64,
}

/// Per-slot rates of several schemes along trial 0's trajectory.
pub fn trajectory_snapshot(
    scenario: &Scenario,
    schemes: &[SchemeId],
    map: &RegionMap,
    n_slots: u64,
    seed: u64,
) -> Result<Vec<TrajectoryRow>> {
    let lists = run_trial_schemes(scenario, schemes, map, n_slots, seed, 0)?;
    let mut clear = scenario.clone();
    clear.blocker = None;
    let reference = run_trial(&clear, SchemeId::NoRisMmw, map, n_slots, seed, 0)?;
    let mut rows = Vec::with_capacity(lists.len() * n_slots as usize);
    for slot in 0..n_slots as usize {
        let t = slot as f64 * scenario.slot_duration;
        for list in &lists {
            let r = &list[slot];
            rows.push(TrajectoryRow {
                slot: r.slot,
                time_s: t,
                ue_x: scenario.ue_at(t).position.x,
                blocker_x: scenario.blocker_at(t).map(|b| b.pose.position.x),
                blocked_direct: r.blocked_direct,
                scheme: r.scheme,
                path: r.path,
                spectral_efficiency: r.spectral_efficiency,
                rate_bps: r.rate,
                unblocked_direct_bps: reference[slot].rate,
            });
        }
    }
    Ok(rows)
}
