//! Figure presets and the calibrated base scenario they share.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::engine::SweepVariable;
use crate::error::{Error, Result};
use crate::scenario::{roadside_at_distance, BsSpec, RepeaterSpec, RisSpec, Scenario};
use crate::schemes::SchemeId;

/// Per-element RIS gain (dBi) counted on both hops.
pub const RIS_ELEMENT_GAIN_DBI: f64 = 9.0;
/// Main-band endpoint antenna gains, dBi.
pub const MMW_BS_GAIN_DBI: f64 = 20.0;
pub const MMW_UE_GAIN_DBI: f64 = 12.0;
/// Start of the UE and blocker runs, meters along the road.
pub const UE_START_X: f64 = 145.0;
pub const BLOCKER_START_X: f64 = 136.3;
/// Phase-noise bound used by the phase-noise variants.
pub const DEFAULT_PHASE_NOISE_BOUND: f64 = PI / 8.0;
/// Slots per trial.
pub const DEFAULT_SLOTS: u64 = 200;

/// Default scenario with the antenna and element gains that bring the
/// free-space RIS cascade and the two bands into a realistic balance.
pub fn calibrated_scenario() -> Scenario {
    let mut s = Scenario {
        bs_gain_dbi: MMW_BS_GAIN_DBI,
        ue_gain_dbi: MMW_UE_GAIN_DBI,
        ..Scenario::default()
    };
    for r in &mut s.ris {
        r.element_gain_dbi = RIS_ELEMENT_GAIN_DBI;
    }
    for r in &mut s.repeater {
        r.gain_dbi = MMW_BS_GAIN_DBI;
    }
    if let Some(x) = s.extra_bs.as_mut() {
        x.gain_dbi = MMW_BS_GAIN_DBI;
    }
    s.ue.position.x = UE_START_X;
    if let Some(b) = s.blocker.as_mut() {
        b.pose.position.x = BLOCKER_START_X;
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PresetName {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl PresetName {
    pub const ALL: [PresetName; 5] = [
        PresetName::Fig2,
        PresetName::Fig3,
        PresetName::Fig4,
        PresetName::Fig5,
        PresetName::Fig6,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PresetName::Fig2 => "fig2",
            PresetName::Fig3 => "fig3",
            PresetName::Fig4 => "fig4",
            PresetName::Fig5 => "fig5",
            PresetName::Fig6 => "fig6",
        }
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Hardware variant of a run. Each variant goes to its own metrics file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Ideal,
    /// Transceiver distortion noise on the RIS schemes.
    Impaired,
    /// Uniform phase noise on every RIS.
    PhaseNoise,
}

impl Variant {
    pub fn file_name(&self) -> &'static str {
        match self {
            Variant::Ideal => "metrics.csv",
            Variant::Impaired => "metrics_impaired.csv",
            Variant::PhaseNoise => "metrics_phase_noise.csv",
        }
    }

    pub fn apply(&self, scenario: &Scenario) -> Scenario {
        let mut s = scenario.clone();
        s.impairments.enabled = *self == Variant::Impaired;
        let bound = if *self == Variant::PhaseNoise {
            DEFAULT_PHASE_NOISE_BOUND
        } else {
            0.0
        };
        s.ris.iter_mut().for_each(|r| r.phase_noise_bound = bound);
        s
    }
}

/// Everything needed to run one figure's experiment from a seed.
#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: PresetName,
    pub scenario: Scenario,
    pub sweep: Option<(SweepVariable, Vec<f64>)>,
    pub schemes: Vec<SchemeId>,
    pub variants: Vec<Variant>,
    pub n_slots: u64,
    /// Slots in the trajectory table (fig4).
    pub trajectory_slots: Option<u64>,
    /// Blocker x positions of the region-map panels (fig5).
    pub map_blockers: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PresetOptions {
    /// 2 or 3 RIS; 3 adds RIS 3 at 150 m (fig2 only).
    pub ris_count: usize,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self { ris_count: 2 }
    }
}

fn power_axis() -> Vec<f64> {
    (0..=25).map(|k| 2.0 * k as f64).collect()
}

pub const FIG6_ELEMENTS: [f64; 7] = [10.0, 25.0, 50.0, 100.0, 200.0, 350.0, 500.0];
pub const FIG5_BLOCKERS: [f64; 3] = [130.0, 140.0, 150.0];

fn add_third_ris(s: &mut Scenario) {
    let pos = roadside_at_distance(&s.bs_position, 150.0);
    let template = s.ris[0].clone();
    s.ris.push(RisSpec {
        position: pos,
        ..template
    });
    s.repeater.push(RepeaterSpec {
        position: pos,
        ..s.repeater[0].clone()
    });
}

fn extra_bs_at(s: &mut Scenario, hop: f64) {
    let bs = s.bs_position;
    s.extra_bs = Some(BsSpec {
        position: bs + crate::scenario::Point::new(hop, 0.0, 0.0),
        antennas: s.bs_antennas,
        gain_dbi: s.bs_gain_dbi,
    });
}

/// Preset definition.
pub fn preset(name: PresetName, opts: &PresetOptions) -> Result<Preset> {
    if !(2..=3).contains(&opts.ris_count) {
        return Err(Error::Validation(format!(
            "ris count must be 2 or 3 (got {})",
            opts.ris_count
        )));
    }
    if opts.ris_count == 3 && name != PresetName::Fig2 {
        return Err(Error::Validation("a third RIS is only defined for fig2".into()));
    }
    let mut s = calibrated_scenario();
    let all = SchemeId::ALL.to_vec();
    let p = match name {
        PresetName::Fig2 => {
            if opts.ris_count == 3 {
                add_third_ris(&mut s);
            }
            Preset {
                name,
                scenario: s,
                sweep: Some((SweepVariable::TxPower, power_axis())),
                schemes: all,
                variants: vec![Variant::Ideal, Variant::Impaired],
                n_slots: DEFAULT_SLOTS,
                trajectory_slots: None,
                map_blockers: None,
            }
        }
        PresetName::Fig3 => {
            s.ris.iter_mut().for_each(|r| r.n_elements = 100);
            extra_bs_at(&mut s, 5000.0);
            s.rate_threshold = 8.0;
            Preset {
                name,
                scenario: s,
                sweep: Some((SweepVariable::TxPower, power_axis())),
                schemes: all,
                variants: vec![Variant::Ideal, Variant::Impaired, Variant::PhaseNoise],
                n_slots: DEFAULT_SLOTS,
                trajectory_slots: None,
                map_blockers: None,
            }
        }
        PresetName::Fig4 => {
            s.tx_power = 50.0;
            Preset {
                name,
                scenario: s,
                sweep: Some((SweepVariable::TxPower, vec![50.0])),
                schemes: all,
                variants: vec![Variant::Ideal],
                n_slots: DEFAULT_SLOTS,
                trajectory_slots: Some(DEFAULT_SLOTS),
                map_blockers: None,
            }
        }
        PresetName::Fig5 => Preset {
            name,
            scenario: s,
            sweep: None,
            schemes: vec![],
            variants: vec![],
            n_slots: 0,
            trajectory_slots: None,
            map_blockers: Some(FIG5_BLOCKERS.to_vec()),
        },
        PresetName::Fig6 => {
            s.tx_power = 15.0;
            s.bandwidth = 20e6;
            if let Some(f) = s.fallback.as_mut() {
                f.bandwidth = 5e6;
                f.vpl = 25.0;
                f.bs_antennas = Some(8);
            }
            Preset {
                name,
                scenario: s,
                sweep: Some((SweepVariable::RisElements, FIG6_ELEMENTS.to_vec())),
                schemes: all,
                variants: vec![Variant::Ideal, Variant::Impaired, Variant::PhaseNoise],
                n_slots: DEFAULT_SLOTS,
                trajectory_slots: None,
                map_blockers: None,
            }
        }
    };
    p.scenario.validate()?;
    Ok(p)
}
