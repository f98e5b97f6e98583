//! Road world: geometry, node placement, mobility and the line-of-sight test.
//!
//! Frame: x along the road, y across the lanes, z up. All lengths in meters.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::ImpairmentSpec;

pub type Point = Vector3<f64>;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// BS mast position used by the default geometry.
pub const DEFAULT_BS_POSITION: [f64; 3] = [0.0, 20.0, 10.0];
/// Lateral offset and height of roadside RIS panels and repeaters.
pub const ROADSIDE_Y: f64 = -5.0;
pub const ROADSIDE_Z: f64 = 5.0;
/// UE antenna height and lane.
pub const UE_LANE_Y: f64 = 0.0;
pub const UE_HEIGHT: f64 = 1.5;
/// Truck lane (between the UE lane and the roadside infrastructure).
pub const BLOCKER_LANE_Y: f64 = 3.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub position: Point,
    #[serde(default = "Point::zeros")]
    pub velocity: Point,
}

impl Pose {
    pub fn new(position: [f64; 3], velocity: [f64; 3]) -> Self {
        Self {
            position: Point::from(position),
            velocity: Point::from(velocity),
        }
    }

    /// Constant-velocity extrapolation by `dt` seconds.
    pub fn advance(&self, dt: f64) -> Pose {
        debug_assert!(dt >= 0.0);
        Pose {
            position: self.position + self.velocity * dt,
            velocity: self.velocity,
        }
    }
}

/// Free-function form of [`Pose::advance`].
pub fn advance(pose: &Pose, dt: f64) -> Pose {
    pose.advance(dt)
}

/// A vehicle modeled as an axis-aligned box centered on `pose.position`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockerBox {
    pub pose: Pose,
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl BlockerBox {
    /// A truck in the blocker lane, resting on the road surface.
    pub fn truck(x: f64, speed: f64) -> Self {
        Self {
            pose: Pose::new([x, BLOCKER_LANE_Y, 2.0], [speed, 0.0, 0.0]),
            length: 12.0,
            width: 2.5,
            height: 4.0,
        }
    }

    pub fn half_extents(&self) -> Point {
        Point::new(self.length, self.width, self.height) * 0.5
    }

    pub fn advance(&self, dt: f64) -> BlockerBox {
        BlockerBox {
            pose: self.pose.advance(dt),
            ..self.clone()
        }
    }

    /// Same box moved so its center sits at `x` along the road.
    pub fn at_x(&self, x: f64) -> BlockerBox {
        let mut b = self.clone();
        b.pose.position.x = x;
        b
    }

    /// Box with every dimension multiplied by `s`, same center.
    pub fn scaled(&self, s: f64) -> BlockerBox {
        BlockerBox {
            pose: self.pose.clone(),
            length: self.length * s,
            width: self.width * s,
            height: self.height * s,
        }
    }
}

/// True iff the segment `tx -> rx` intersects the blocker box.
pub fn is_blocked(tx: &Point, rx: &Point, blocker: &BlockerBox) -> bool {
    let center = blocker.pose.position;
    let half = blocker.half_extents();
    let dir = rx - tx;
    let (mut t_enter, mut t_exit) = (0.0f64, 1.0f64);
    for axis in 0..3 {
        let lo = center[axis] - half[axis];
        let hi = center[axis] + half[axis];
        let p = tx[axis];
        let d = dir[axis];
        if d.abs() < 1e-12 {
            if p < lo || p > hi {
                return false;
            }
            continue;
        }
        let (mut t0, mut t1) = ((lo - p) / d, (hi - p) / d);
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_enter = t_enter.max(t0);
        t_exit = t_exit.min(t1);
        if t_enter > t_exit {
            return false;
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisSpec {
    pub position: Point,
    pub n_elements: usize,
    /// Element spacing in wavelengths.
    #[serde(default = "half_wavelength")]
    pub element_spacing: f64,
    /// Half-width of the uniform phase-noise interval, radians.
    #[serde(default)]
    pub phase_noise_bound: f64,
    /// Per-hop gain of a reflecting element over an isotropic scatterer, dBi.
    #[serde(default)]
    pub element_gain_dbi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepeaterSpec {
    pub position: Point,
    #[serde(default = "default_repeater_antennas")]
    pub antennas: usize,
    /// Repeater transmit power, dBm.
    #[serde(default = "default_repeater_power")]
    pub tx_power: f64,
    #[serde(default)]
    pub gain_dbi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsSpec {
    pub position: Point,
    pub antennas: usize,
    #[serde(default)]
    pub gain_dbi: f64,
}

/// Lower-band radio the BS falls back to when serving without RIS.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FallbackBand {
    pub carrier_freq: f64,
    pub bandwidth: f64,
    pub vpl: f64,
    /// Defaults to the main BS antenna count.
    #[serde(default)]
    pub bs_antennas: Option<usize>,
    #[serde(default)]
    pub bs_gain_dbi: f64,
    #[serde(default)]
    pub ue_gain_dbi: f64,
}

/// Path-loss exponents and Rician K-factors per link type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub exponent_direct: f64,
    pub exponent_bs_ris: f64,
    pub exponent_ris_ue: f64,
    pub exponent_repeater: f64,
    pub k_direct_db: f64,
    pub k_ris_db: f64,
    pub k_repeater_db: f64,
    /// Antenna spacing of BS/UE arrays, wavelengths.
    pub antenna_spacing: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            exponent_direct: 2.0,
            exponent_bs_ris: 2.0,
            exponent_ris_ue: 2.0,
            exponent_repeater: 2.0,
            k_direct_db: 6.0,
            k_ris_db: 10.0,
            k_repeater_db: 10.0,
            antenna_spacing: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThroughputMode {
    /// Non-outage slots deliver their Shannon rate.
    #[default]
    Adaptive,
    /// Non-outage slots deliver exactly `rate_threshold` bit/s/Hz.
    FixedRate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Hz.
    pub carrier_freq: f64,
    /// Hz.
    pub bandwidth: f64,
    pub bs_position: Point,
    pub bs_antennas: usize,
    pub ue_antennas: usize,
    #[serde(default)]
    pub bs_gain_dbi: f64,
    #[serde(default)]
    pub ue_gain_dbi: f64,
    /// BS transmit power, dBm.
    pub tx_power: f64,
    /// dBm/Hz.
    #[serde(default = "default_noise_psd")]
    pub noise_psd: f64,
    /// dB.
    #[serde(default = "default_noise_figure")]
    pub noise_figure: f64,
    /// Vehicle penetration loss, dB.
    pub vpl: f64,
    /// Outage threshold on spectral efficiency, bit/s/Hz.
    #[serde(default)]
    pub rate_threshold: f64,
    /// Seconds.
    #[serde(default = "default_slot_duration")]
    pub slot_duration: f64,
    #[serde(default)]
    pub seed: u64,

    pub ue: Pose,
    #[serde(default)]
    pub blocker: Option<BlockerBox>,

    #[serde(default)]
    pub ris: Vec<RisSpec>,
    #[serde(default)]
    pub repeater: Vec<RepeaterSpec>,
    #[serde(default)]
    pub extra_bs: Option<BsSpec>,
    #[serde(default)]
    pub fallback: Option<FallbackBand>,

    #[serde(default)]
    pub impairments: ImpairmentSpec,
    #[serde(default)]
    pub channel: ChannelParams,

    /// Slots between a position report and the slot it is used for.
    #[serde(default = "default_horizon")]
    pub prediction_horizon: u32,
    /// Std of Gaussian noise added to predicted x positions, meters.
    #[serde(default)]
    pub prediction_noise_std: f64,
    /// Outage slots charged after each AdditionalBs handover.
    #[serde(default)]
    pub handover_penalty_slots: u32,
    /// Fraction of a slot spent on pilots per measured path.
    #[serde(default)]
    pub csit_overhead_per_path: f64,
    #[serde(default)]
    pub throughput_mode: ThroughputMode,
}

fn half_wavelength() -> f64 {
    0.5
}
fn default_repeater_antennas() -> usize {
    16
}
fn default_repeater_power() -> f64 {
    32.0
}
fn default_noise_psd() -> f64 {
    -174.0
}
fn default_noise_figure() -> f64 {
    9.0
}
fn default_slot_duration() -> f64 {
    0.01
}
fn default_horizon() -> u32 {
    10
}

/// Roadside point whose straight-line distance from `bs` is `hop`.
pub fn roadside_at_distance(bs: &Point, hop: f64) -> Point {
    let dy = ROADSIDE_Y - bs.y;
    let dz = ROADSIDE_Z - bs.z;
    let dx = (hop * hop - dy * dy - dz * dz).max(0.0).sqrt();
    Point::new(bs.x + dx, ROADSIDE_Y, ROADSIDE_Z)
}

impl Default for Scenario {
    /// Two-RIS highway segment: RIS 1 and RIS 2 at 200 m and 126 m from the
    /// BS, repeaters co-located with them, an extra BS 1500 m down the road
    /// and a 2.8 GHz fallback band.
    fn default() -> Self {
        let bs = Point::from(DEFAULT_BS_POSITION);
        let ris = [200.0, 126.0]
            .iter()
            .map(|&d| RisSpec {
                position: roadside_at_distance(&bs, d),
                n_elements: 200,
                element_spacing: 0.5,
                phase_noise_bound: 0.0,
                element_gain_dbi: 0.0,
            })
            .collect::<Vec<_>>();
        let repeater = ris
            .iter()
            .map(|r| RepeaterSpec {
                position: r.position,
                antennas: 16,
                tx_power: 32.0,
                gain_dbi: 0.0,
            })
            .collect();
        Self {
            carrier_freq: 28e9,
            bandwidth: 10e6,
            bs_position: bs,
            bs_antennas: 16,
            ue_antennas: 4,
            bs_gain_dbi: 0.0,
            ue_gain_dbi: 0.0,
            tx_power: 30.0,
            noise_psd: default_noise_psd(),
            noise_figure: default_noise_figure(),
            vpl: 40.0,
            rate_threshold: 0.0,
            slot_duration: default_slot_duration(),
            seed: 0,
            ue: Pose::new([150.0, UE_LANE_Y, UE_HEIGHT], [30.0, 0.0, 0.0]),
            blocker: Some(BlockerBox::truck(130.0, 20.0)),
            ris,
            repeater,
            extra_bs: Some(BsSpec {
                position: Point::new(bs.x + 1500.0, bs.y, bs.z),
                antennas: 16,
                gain_dbi: 0.0,
            }),
            fallback: Some(FallbackBand {
                carrier_freq: 2.8e9,
                bandwidth: 5e6,
                vpl: 20.0,
                bs_antennas: None,
                bs_gain_dbi: 0.0,
                ue_gain_dbi: 0.0,
            }),
            impairments: ImpairmentSpec::default(),
            channel: ChannelParams::default(),
            prediction_horizon: default_horizon(),
            prediction_noise_std: 0.0,
            handover_penalty_slots: 0,
            csit_overhead_per_path: 0.0,
            throughput_mode: ThroughputMode::Adaptive,
        }
    }
}

fn check(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Validation(what.to_string()))
    }
}

fn finite(p: &Point) -> bool {
    p.iter().all(|v| v.is_finite())
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        check(self.carrier_freq > 0.0, "carrier_freq > 0")?;
        check(self.bandwidth > 0.0, "bandwidth > 0")?;
        check(self.bs_antennas >= 1, "bs_antennas ≥ 1")?;
        check(self.ue_antennas >= 1, "ue_antennas ≥ 1")?;
        check(self.vpl >= 0.0, "vpl ≥ 0")?;
        check(self.slot_duration > 0.0, "slot_duration > 0")?;
        check(self.rate_threshold >= 0.0, "rate_threshold ≥ 0")?;
        check(self.tx_power.is_finite(), "tx_power finite")?;
        check(finite(&self.bs_position), "bs_position finite")?;
        check(
            finite(&self.ue.position) && finite(&self.ue.velocity),
            "ue pose finite",
        )?;
        if let Some(b) = &self.blocker {
            check(
                b.length > 0.0 && b.width > 0.0 && b.height > 0.0,
                "blocker dimensions > 0",
            )?;
            check(
                finite(&b.pose.position) && finite(&b.pose.velocity),
                "blocker pose finite",
            )?;
        }
        for (i, r) in self.ris.iter().enumerate() {
            check(r.n_elements >= 1, &format!("ris[{i}].n_elements ≥ 1"))?;
            check(
                (0.0..=std::f64::consts::PI).contains(&r.phase_noise_bound),
                &format!("ris[{i}].phase_noise_bound ∈ [0, π]"),
            )?;
            check(
                r.element_spacing > 0.0,
                &format!("ris[{i}].element_spacing > 0"),
            )?;
            check(
                (r.position - self.bs_position).norm() > 1e-9,
                &format!("ris[{i}].position ≠ bs_position"),
            )?;
        }
        for (i, r) in self.repeater.iter().enumerate() {
            check(r.antennas >= 1, &format!("repeater[{i}].antennas ≥ 1"))?;
        }
        if let Some(x) = &self.extra_bs {
            check(x.antennas >= 1, "extra_bs.antennas ≥ 1")?;
        }
        if let Some(f) = &self.fallback {
            check(f.carrier_freq > 0.0, "fallback.carrier_freq > 0")?;
            check(f.bandwidth > 0.0, "fallback.bandwidth > 0")?;
            check(f.vpl >= 0.0, "fallback.vpl ≥ 0")?;
            check(
                f.bs_antennas.is_none_or(|n| n >= 1),
                "fallback.bs_antennas ≥ 1",
            )?;
        }
        let imp = &self.impairments;
        check(
            imp.kappa_tx_sq >= 0.0 && imp.kappa_rx_sq >= 0.0,
            "impairments κ_t², κ_r² ≥ 0",
        )?;
        let ch = &self.channel;
        for (name, e) in [
            ("channel.exponent_direct", ch.exponent_direct),
            ("channel.exponent_bs_ris", ch.exponent_bs_ris),
            ("channel.exponent_ris_ue", ch.exponent_ris_ue),
            ("channel.exponent_repeater", ch.exponent_repeater),
        ] {
            check(e >= 2.0, &format!("{name} ≥ 2"))?;
        }
        check(ch.antenna_spacing > 0.0, "channel.antenna_spacing > 0")?;
        check(
            self.prediction_noise_std >= 0.0,
            "prediction_noise_std ≥ 0",
        )?;
        check(
            (0.0..1.0).contains(&self.csit_overhead_per_path),
            "csit_overhead_per_path ∈ [0, 1)",
        )?;
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Blocker state at time `t` seconds into a trial.
    pub fn blocker_at(&self, t: f64) -> Option<BlockerBox> {
        self.blocker.as_ref().map(|b| b.advance(t))
    }

    pub fn ue_at(&self, t: f64) -> Pose {
        self.ue.advance(t)
    }
}

/// Per-link blockage flags for one UE/blocker configuration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinkFlags {
    pub direct: bool,
    pub bs_ris: Vec<bool>,
    pub ris_ue: Vec<bool>,
    /// (BS→repeater, repeater→UE) per repeater.
    pub repeater: Vec<[bool; 2]>,
    pub extra_bs: Option<bool>,
}

pub fn los_state(scenario: &Scenario, ue: &Point, blocker: Option<&BlockerBox>) -> LinkFlags {
    let hit = |a: &Point, b: &Point| blocker.is_some_and(|bx| is_blocked(a, b, bx));
    let bs = &scenario.bs_position;
    LinkFlags {
        direct: hit(bs, ue),
        bs_ris: scenario.ris.iter().map(|r| hit(bs, &r.position)).collect(),
        ris_ue: scenario.ris.iter().map(|r| hit(&r.position, ue)).collect(),
        repeater: scenario
            .repeater
            .iter()
            .map(|r| [hit(bs, &r.position), hit(&r.position, ue)])
            .collect(),
        extra_bs: scenario.extra_bs.as_ref().map(|x| hit(&x.position, ue)),
    }
}
