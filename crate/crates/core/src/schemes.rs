//! The serving strategies compared by the simulator.
//!
//! Every scheme is evaluated on a [`SlotContext`], which owns the slot's
//! channel realization and memoizes per-path beamforming results. Schemes
//! that consider the same path therefore see identical numbers, so the
//! genie benchmark dominates LSRPA slot by slot.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::{noise_power_dbm_for, ChannelRealization};
use crate::error::{Error, Result};
use crate::phy::{
    apply_phase_noise, beam_gain, beamform_direct, beamform_with_phases, effective_channel,
    optimize_beamforming, repeater_rate, sinr, BeamformedLink, ImpairmentSpec, OptimizerOptions,
    PhaseConfig, Rate,
};
use crate::regionmap::RegionMap;
use crate::rng::{substream, PHASE_NOISE, RANDOM_PHASE};
use crate::scenario::{Point, Scenario};

/// A way of reaching the UE.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathCandidate {
    Direct,
    /// 0-based RIS index.
    ViaRis(usize),
    /// 0-based repeater index.
    ViaRepeater(usize),
    ViaExtraBs,
}

impl PathCandidate {
    pub fn index(&self) -> Option<usize> {
        match self {
            PathCandidate::ViaRis(i) | PathCandidate::ViaRepeater(i) => Some(*i),
            _ => None,
        }
    }

    /// Whether the scenario defines the entity this path needs.
    pub fn exists_in(&self, scenario: &Scenario) -> bool {
        match *self {
            PathCandidate::Direct => true,
            PathCandidate::ViaRis(i) => i < scenario.ris.len(),
            PathCandidate::ViaRepeater(i) => i < scenario.repeater.len(),
            PathCandidate::ViaExtraBs => scenario.extra_bs.is_some(),
        }
    }

    /// Direct first, then RIS paths in index order.
    pub fn map_candidates(scenario: &Scenario) -> Vec<PathCandidate> {
        std::iter::once(PathCandidate::Direct)
            .chain((0..scenario.ris.len()).map(PathCandidate::ViaRis))
            .collect()
    }
}

impl fmt::Display for PathCandidate {
    /// 1-based names: `Direct`, `RIS1`, `Repeater2`, `ExtraBS`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathCandidate::Direct => write!(f, "Direct"),
            PathCandidate::ViaRis(i) => write!(f, "RIS{}", i + 1),
            PathCandidate::ViaRepeater(i) => write!(f, "Repeater{}", i + 1),
            PathCandidate::ViaExtraBs => write!(f, "ExtraBS"),
        }
    }
}

impl FromStr for PathCandidate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("unknown path `{s}`"));
        let one_based = |rest: &str| -> Result<usize> {
            match rest.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(k - 1),
                _ => Err(bad()),
            }
        };
        match s {
            "Direct" => Ok(PathCandidate::Direct),
            "ExtraBS" => Ok(PathCandidate::ViaExtraBs),
            _ => {
                if let Some(rest) = s.strip_prefix("RIS") {
                    one_based(rest).map(PathCandidate::ViaRis)
                } else if let Some(rest) = s.strip_prefix("Repeater") {
                    one_based(rest).map(PathCandidate::ViaRepeater)
                } else {
                    Err(bad())
                }
            }
        }
    }
}

impl Serialize for PathCandidate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PathCandidate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    Lsrpa,
    Benchmark,
    RandomPhase,
    NoRisMmw,
    NoRisSub6,
    AdditionalBs,
    Repeater,
}

impl SchemeId {
    pub const ALL: [SchemeId; 7] = [
        SchemeId::Lsrpa,
        SchemeId::Benchmark,
        SchemeId::RandomPhase,
        SchemeId::NoRisMmw,
        SchemeId::NoRisSub6,
        SchemeId::AdditionalBs,
        SchemeId::Repeater,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SchemeId::Lsrpa => "LSRPA",
            SchemeId::Benchmark => "Benchmark",
            SchemeId::RandomPhase => "RandomPhase",
            SchemeId::NoRisMmw => "NoRisMmw",
            SchemeId::NoRisSub6 => "NoRisSub6",
            SchemeId::AdditionalBs => "AdditionalBs",
            SchemeId::Repeater => "Repeater",
        }
    }

    /// Schemes running on the cheap RIS-equipped system; transceiver
    /// impairments apply to these only.
    pub fn uses_ris(&self) -> bool {
        matches!(
            self,
            SchemeId::Lsrpa | SchemeId::Benchmark | SchemeId::RandomPhase
        )
    }

    /// Paths whose instantaneous CSIT the scheme acquires each slot.
    pub fn measured_paths(&self, scenario: &Scenario) -> usize {
        match self {
            SchemeId::Lsrpa | SchemeId::RandomPhase => 1,
            SchemeId::Benchmark => 1 + scenario.ris.len(),
            SchemeId::NoRisMmw | SchemeId::NoRisSub6 => 1,
            SchemeId::AdditionalBs => 2,
            SchemeId::Repeater => 1 + scenario.repeater.len(),
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for SchemeId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown scheme `{s}`")))
    }
}

/// Everything a scheme may look at in one slot, plus a memo of the
/// per-path results that several schemes share.
pub struct SlotContext<'a> {
    pub scenario: &'a Scenario,
    pub realization: &'a ChannelRealization,
    pub seed: u64,
    pub trial: u64,
    pub slot: u64,
    pub opts: OptimizerOptions,
    ris_family: RefCell<HashMap<PathCandidate, Rate>>,
}

impl<'a> SlotContext<'a> {
    pub fn new(
        scenario: &'a Scenario,
        realization: &'a ChannelRealization,
        seed: u64,
        trial: u64,
        slot: u64,
    ) -> Self {
        Self {
            scenario,
            realization,
            seed,
            trial,
            slot,
            opts: OptimizerOptions::default(),
            ris_family: RefCell::new(HashMap::new()),
        }
    }

    fn stream(&self, tag: u64, index: usize) -> crate::rng::SimRng {
        substream(self.seed, &[self.trial, self.slot, tag, index as u64])
    }

    fn ris_impairments(&self) -> ImpairmentSpec {
        self.scenario.impairments
    }

    fn main_rate(&self, gain: f64, imp: &ImpairmentSpec) -> Rate {
        let s = self.scenario;
        let noise = noise_power_dbm_for(s.noise_psd, s.bandwidth, s.noise_figure);
        Rate::from_sinr(sinr(gain, s.tx_power, noise, imp), s.bandwidth)
    }

    /// Rate of `path` on the RIS-equipped system: optimized phases, phase
    /// noise on the chosen RIS, transceiver impairments.
    pub fn ris_family_rate(&self, path: PathCandidate) -> Result<Rate> {
        if let Some(r) = self.ris_family.borrow().get(&path) {
            return Ok(*r);
        }
        let link = optimize_beamforming(self.realization, path, self.opts)?;
        let gain = match path {
            PathCandidate::ViaRis(i) => {
                let bound = self.scenario.ris[i].phase_noise_bound;
                if bound > 0.0 {
                    let noisy = apply_phase_noise(
                        link.phase_config.as_ref().expect("RIS link has phases"),
                        bound,
                        &mut self.stream(PHASE_NOISE, i),
                    );
                    let h = effective_channel(
                        &self.realization.direct.matrix,
                        &self.realization.inbound[i].matrix,
                        &noisy,
                        &self.realization.outbound[i].matrix,
                    )?;
                    beam_gain(&h, &link.combiner, &link.precoder)
                } else {
                    link.effective_gain
                }
            }
            _ => link.effective_gain,
        };
        let rate = self.main_rate(gain, &self.ris_impairments());
        self.ris_family.borrow_mut().insert(path, rate);
        Ok(rate)
    }

    /// Rate with i.i.d. uniform RIS phases and SVD-matched beamformers.
    pub fn random_phase_rate(&self, path: PathCandidate) -> Result<Rate> {
        match path {
            PathCandidate::ViaRis(i) => {
                let r = self.realization;
                let n = self.scenario.ris[i].n_elements;
                let phases = PhaseConfig::random(n, &mut self.stream(RANDOM_PHASE, i));
                let link = beamform_with_phases(
                    &r.direct.matrix,
                    &r.inbound[i].matrix,
                    &r.outbound[i].matrix,
                    phases,
                )?;
                Ok(self.main_rate(link.effective_gain, &self.ris_impairments()))
            }
            other => self.ris_family_rate(other),
        }
    }

    /// Plain SVD rate over the main-band direct link, no impairments.
    pub fn direct_rate(&self) -> Result<Rate> {
        let link = beamform_direct(&self.realization.direct.matrix)?;
        Ok(self.main_rate(link.effective_gain, &ImpairmentSpec::IDEAL))
    }

    pub fn extra_bs_rate(&self) -> Result<Rate> {
        let link = self
            .realization
            .extra_bs_direct
            .as_ref()
            .ok_or_else(|| Error::Config("AdditionalBs needs an extra_bs".into()))?;
        let bf = beamform_direct(&link.matrix)?;
        Ok(self.main_rate(bf.effective_gain, &ImpairmentSpec::IDEAL))
    }

    pub fn fallback_rate(&self) -> Result<Rate> {
        let s = self.scenario;
        let band = s
            .fallback
            .as_ref()
            .ok_or_else(|| Error::Config("NoRisSub6 needs a fallback band".into()))?;
        let link = self
            .realization
            .fallback_direct
            .as_ref()
            .ok_or_else(|| Error::Config("NoRisSub6 needs a fallback band".into()))?;
        let bf = beamform_direct(&link.matrix)?;
        let noise = noise_power_dbm_for(s.noise_psd, band.bandwidth, s.noise_figure);
        let g = sinr(bf.effective_gain, s.tx_power, noise, &ImpairmentSpec::IDEAL);
        Ok(Rate::from_sinr(g, band.bandwidth))
    }

    pub fn repeater_path_rate(&self, i: usize) -> Result<Rate> {
        let hops = self
            .realization
            .repeater_hops
            .get(i)
            .ok_or_else(|| Error::Config(format!("scenario has no repeater {}", i + 1)))?;
        let h1: BeamformedLink = beamform_direct(&hops[0].matrix)?;
        let h2: BeamformedLink = beamform_direct(&hops[1].matrix)?;
        Ok(repeater_rate(
            &h1,
            &h2,
            self.scenario.repeater[i].tx_power,
            self.scenario,
            &ImpairmentSpec::IDEAL,
        ))
    }
}

/// First strictly-best entry wins, so earlier candidates win ties.
fn argmax<I: IntoIterator<Item = Result<(PathCandidate, Rate)>>>(
    items: I,
) -> Result<(PathCandidate, Rate)> {
    let mut best: Option<(PathCandidate, Rate)> = None;
    for item in items {
        let (p, r) = item?;
        if best.is_none_or(|(_, b)| r.bps > b.bps) {
            best = Some((p, r));
        }
    }
    best.ok_or_else(|| Error::Config("no candidate paths".into()))
}

/// Genie-aided exhaustive search over the direct path and every RIS path.
/// Ties go to Direct, then to the lowest RIS index.
pub fn decide_benchmark(ctx: &SlotContext<'_>) -> Result<(PathCandidate, Rate)> {
    argmax(
        PathCandidate::map_candidates(ctx.scenario)
            .into_iter()
            .map(|p| ctx.ris_family_rate(p).map(|r| (p, r))),
    )
}

/// Region-map lookup at predicted positions.
pub fn decide_lsrpa(
    map: &RegionMap,
    predicted_ue: &Point,
    predicted_blocker: Option<&Point>,
) -> Result<PathCandidate> {
    map.decide(predicted_ue.x, predicted_blocker.map(|b| b.x))
}

/// Per-slot inputs that are not part of the channel: LSRPA's predicted
/// positions.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotState {
    pub predicted_ue: Point,
    pub predicted_blocker: Option<Point>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlotOutcome {
    pub path: PathCandidate,
    pub rate: Rate,
}

/// Serve one slot with `scheme`.
pub fn serve_slot(
    scheme: SchemeId,
    state: &SlotState,
    ctx: &SlotContext<'_>,
    map: &RegionMap,
) -> Result<SlotOutcome> {
    let s = ctx.scenario;
    let (path, rate) = match scheme {
        SchemeId::Lsrpa => {
            let p = decide_lsrpa(map, &state.predicted_ue, state.predicted_blocker.as_ref())?;
            (p, ctx.ris_family_rate(p)?)
        }
        SchemeId::Benchmark => decide_benchmark(ctx)?,
        SchemeId::RandomPhase => {
            let p = decide_lsrpa(map, &state.predicted_ue, state.predicted_blocker.as_ref())?;
            (p, ctx.random_phase_rate(p)?)
        }
        SchemeId::NoRisMmw => (PathCandidate::Direct, ctx.direct_rate()?),
        SchemeId::NoRisSub6 => (PathCandidate::Direct, ctx.fallback_rate()?),
        SchemeId::AdditionalBs => argmax([
            ctx.direct_rate().map(|r| (PathCandidate::Direct, r)),
            ctx.extra_bs_rate().map(|r| (PathCandidate::ViaExtraBs, r)),
        ])?,
        SchemeId::Repeater => {
            if s.repeater.is_empty() {
                return Err(Error::Config("Repeater scheme needs at least one repeater".into()));
            }
            argmax(
                std::iter::once(ctx.direct_rate().map(|r| (PathCandidate::Direct, r))).chain(
                    (0..s.repeater.len())
                        .map(|i| ctx.repeater_path_rate(i).map(|r| (PathCandidate::ViaRepeater(i), r))),
                ),
            )?
        }
    };
    let overhead = (s.csit_overhead_per_path * scheme.measured_paths(s) as f64).min(1.0);
    let rate = if overhead > 0.0 {
        Rate {
            spectral_efficiency: rate.spectral_efficiency * (1.0 - overhead),
            bps: rate.bps * (1.0 - overhead),
        }
    } else {
        rate
    };
    Ok(SlotOutcome { path, rate })
}
