//! Per-slot channel synthesis: log-distance path loss, Rician fading with
//! ULA steering, and vehicle penetration loss on blocked links.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::scenario::{los_state, BlockerBox, Point, Pose, Scenario, SPEED_OF_LIGHT};
use crate::schemes::PathCandidate;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

static CLAMPED_DISTANCES: AtomicU64 = AtomicU64::new(0);

/// Number of path-loss evaluations that clamped a sub-meter distance.
pub fn clamped_distance_count() -> u64 {
    CLAMPED_DISTANCES.load(Ordering::Relaxed)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Free-space loss at 1 m plus a log-distance slope, dB.
pub fn path_loss_db(distance: f64, freq: f64, exponent: f64) -> f64 {
    let d = if distance < 1.0 {
        CLAMPED_DISTANCES.fetch_add(1, Ordering::Relaxed);
        1.0
    } else {
        distance
    };
    20.0 * (4.0 * PI * freq / SPEED_OF_LIGHT).log10() + 10.0 * exponent * d.log10()
}

pub fn noise_power_dbm_for(noise_psd: f64, bandwidth: f64, noise_figure: f64) -> f64 {
    noise_psd + 10.0 * bandwidth.log10() + noise_figure
}

pub fn noise_power_dbm(scenario: &Scenario) -> f64 {
    noise_power_dbm_for(scenario.noise_psd, scenario.bandwidth, scenario.noise_figure)
}

/// Line-of-sight geometry of one link as seen by two uniform linear arrays
/// laid out along the road (x) axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LosGeometry {
    /// Cosine between the array axis and the direction towards the peer.
    pub rx_cos: f64,
    pub tx_cos: f64,
    /// Element spacing, wavelengths.
    pub rx_spacing: f64,
    pub tx_spacing: f64,
    /// Carrier phase accumulated over the link, radians.
    pub phase: f64,
}

impl LosGeometry {
    pub fn between(
        tx: &Point,
        rx: &Point,
        tx_spacing: f64,
        rx_spacing: f64,
        wavelength: f64,
    ) -> Self {
        let d = rx - tx;
        let dist = d.norm();
        let (tx_cos, rx_cos) = if dist > 0.0 {
            (d.x / dist, -d.x / dist)
        } else {
            (0.0, 0.0)
        };
        Self {
            rx_cos,
            tx_cos,
            rx_spacing,
            tx_spacing,
            phase: -2.0 * PI * (dist / wavelength).fract(),
        }
    }

    /// Broadside geometry with zero carrier phase.
    pub fn broadside() -> Self {
        Self {
            rx_cos: 0.0,
            tx_cos: 0.0,
            rx_spacing: 0.5,
            tx_spacing: 0.5,
            phase: 0.0,
        }
    }
}

/// ULA response `exp(j 2π s k cosψ)`, k = 0..n.
pub fn steering(n: usize, spacing: f64, cos_angle: f64) -> CVector {
    CVector::from_fn(n, |k, _| {
        Complex64::from_polar(1.0, 2.0 * PI * spacing * k as f64 * cos_angle)
    })
}

/// Rician matrix with unit-power entries: `√(K/(K+1))·a_r a_tᴴ + √(1/(K+1))·W`,
/// W i.i.d. CN(0, 1). `k_factor_db = +∞` gives the pure LoS outer product,
/// `-∞` gives Rayleigh. The NLoS part is always drawn so the rng advances by
/// the same amount for every K.
pub fn draw_fading<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    k_factor_db: f64,
    los: &LosGeometry,
    rng: &mut R,
) -> CMatrix {
    let scatter = CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let (w_los, w_nlos) = if k_factor_db == f64::INFINITY {
        (1.0, 0.0)
    } else {
        let k = db_to_linear(k_factor_db);
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    };
    if w_los == 0.0 {
        return scatter;
    }
    let a_r = steering(rows, los.rx_spacing, los.rx_cos);
    let a_t = steering(cols, los.tx_spacing, los.tx_cos);
    let rot = Complex64::from_polar(w_los, los.phase);
    let los_part = (&a_r * a_t.adjoint()) * rot;
    if w_nlos == 0.0 {
        los_part
    } else {
        los_part + scatter * Complex64::from(w_nlos)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkChannel {
    /// rows = receive ports, cols = transmit ports, large-scale gain included.
    pub matrix: CMatrix,
    pub path_gain_db: f64,
    pub blocked: bool,
}

impl LinkChannel {
    fn new(fading: CMatrix, path_gain_db: f64, blocked: bool) -> Self {
        let amp = db_to_linear(path_gain_db).sqrt();
        Self {
            matrix: fading * Complex64::from(amp),
            path_gain_db,
            blocked,
        }
    }
}

/// One slot's worth of link matrices, all for the same poses.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// BS → UE.
    pub direct: LinkChannel,
    /// BS → RIS i (N × M_bs).
    pub inbound: Vec<LinkChannel>,
    /// RIS i → UE (M_ue × N).
    pub outbound: Vec<LinkChannel>,
    /// (BS → repeater, repeater → UE).
    pub repeater_hops: Vec<[LinkChannel; 2]>,
    pub extra_bs_direct: Option<LinkChannel>,
    /// BS → UE on the fallback band.
    pub fallback_direct: Option<LinkChannel>,
}

struct LinkSpec<'a> {
    tx: &'a Point,
    rx: &'a Point,
    tx_ports: usize,
    rx_ports: usize,
    tx_spacing: f64,
    rx_spacing: f64,
    freq: f64,
    exponent: f64,
    k_db: f64,
    extra_gain_db: f64,
    vpl: f64,
    blocked: bool,
}

impl LinkSpec<'_> {
    fn gain_db(&self) -> f64 {
        let d = (self.rx - self.tx).norm();
        -path_loss_db(d, self.freq, self.exponent) + self.extra_gain_db
            - if self.blocked { self.vpl } else { 0.0 }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> LinkChannel {
        let los = LosGeometry::between(
            self.tx,
            self.rx,
            self.tx_spacing,
            self.rx_spacing,
            SPEED_OF_LIGHT / self.freq,
        );
        let h = draw_fading(self.rx_ports, self.tx_ports, self.k_db, &los, rng);
        LinkChannel::new(h, self.gain_db(), self.blocked)
    }
}

/// Ground-truth channels of every link for one slot.
///
/// Draw order is fixed (direct, then inbound/outbound per RIS, repeater
/// hops, extra BS, fallback) so two calls with equal rng state produce equal
/// fading regardless of which links are blocked.
pub fn realize_channels<R: Rng + ?Sized>(
    scenario: &Scenario,
    ue: &Pose,
    blocker: Option<&BlockerBox>,
    rng: &mut R,
) -> ChannelRealization {
    let flags = los_state(scenario, &ue.position, blocker);
    let f = scenario.carrier_freq;
    let ch = &scenario.channel;
    let sp = ch.antenna_spacing;
    let bs = &scenario.bs_position;
    let uep = &ue.position;

    let direct = LinkSpec {
        tx: bs,
        rx: uep,
        tx_ports: scenario.bs_antennas,
        rx_ports: scenario.ue_antennas,
        tx_spacing: sp,
        rx_spacing: sp,
        freq: f,
        exponent: ch.exponent_direct,
        k_db: ch.k_direct_db,
        extra_gain_db: scenario.bs_gain_dbi + scenario.ue_gain_dbi,
        vpl: scenario.vpl,
        blocked: flags.direct,
    }
    .draw(rng);

    let mut inbound = Vec::with_capacity(scenario.ris.len());
    let mut outbound = Vec::with_capacity(scenario.ris.len());
    for (i, ris) in scenario.ris.iter().enumerate() {
        inbound.push(
            LinkSpec {
                tx: bs,
                rx: &ris.position,
                tx_ports: scenario.bs_antennas,
                rx_ports: ris.n_elements,
                tx_spacing: sp,
                rx_spacing: ris.element_spacing,
                freq: f,
                exponent: ch.exponent_bs_ris,
                k_db: ch.k_ris_db,
                extra_gain_db: scenario.bs_gain_dbi + ris.element_gain_dbi,
                vpl: scenario.vpl,
                blocked: flags.bs_ris[i],
            }
            .draw(rng),
        );
        outbound.push(
            LinkSpec {
                tx: &ris.position,
                rx: uep,
                tx_ports: ris.n_elements,
                rx_ports: scenario.ue_antennas,
                tx_spacing: ris.element_spacing,
                rx_spacing: sp,
                freq: f,
                exponent: ch.exponent_ris_ue,
                k_db: ch.k_ris_db,
                extra_gain_db: ris.element_gain_dbi + scenario.ue_gain_dbi,
                vpl: scenario.vpl,
                blocked: flags.ris_ue[i],
            }
            .draw(rng),
        );
    }

    let repeater_hops = scenario
        .repeater
        .iter()
        .zip(&flags.repeater)
        .map(|(rep, blk)| {
            let hop1 = LinkSpec {
                tx: bs,
                rx: &rep.position,
                tx_ports: scenario.bs_antennas,
                rx_ports: rep.antennas,
                tx_spacing: sp,
                rx_spacing: sp,
                freq: f,
                exponent: ch.exponent_repeater,
                k_db: ch.k_repeater_db,
                extra_gain_db: scenario.bs_gain_dbi + rep.gain_dbi,
                vpl: scenario.vpl,
                blocked: blk[0],
            }
            .draw(rng);
            let hop2 = LinkSpec {
                tx: &rep.position,
                rx: uep,
                tx_ports: rep.antennas,
                rx_ports: scenario.ue_antennas,
                tx_spacing: sp,
                rx_spacing: sp,
                freq: f,
                exponent: ch.exponent_repeater,
                k_db: ch.k_repeater_db,
                extra_gain_db: rep.gain_dbi + scenario.ue_gain_dbi,
                vpl: scenario.vpl,
                blocked: blk[1],
            }
            .draw(rng);
            [hop1, hop2]
        })
        .collect();

    let extra_bs_direct = scenario.extra_bs.as_ref().map(|x| {
        LinkSpec {
            tx: &x.position,
            rx: uep,
            tx_ports: x.antennas,
            rx_ports: scenario.ue_antennas,
            tx_spacing: sp,
            rx_spacing: sp,
            freq: f,
            exponent: ch.exponent_direct,
            k_db: ch.k_direct_db,
            extra_gain_db: x.gain_dbi + scenario.ue_gain_dbi,
            vpl: scenario.vpl,
            blocked: flags.extra_bs.unwrap_or(false),
        }
        .draw(rng)
    });

    let fallback_direct = scenario.fallback.as_ref().map(|fb| {
        LinkSpec {
            tx: bs,
            rx: uep,
            tx_ports: fb.bs_antennas.unwrap_or(scenario.bs_antennas),
            rx_ports: scenario.ue_antennas,
            tx_spacing: sp,
            rx_spacing: sp,
            freq: fb.carrier_freq,
            exponent: ch.exponent_direct,
            k_db: ch.k_direct_db,
            extra_gain_db: fb.bs_gain_dbi + fb.ue_gain_dbi,
            vpl: fb.vpl,
            blocked: flags.direct,
        }
        .draw(rng)
    });

    ChannelRealization {
        direct,
        inbound,
        outbound,
        repeater_hops,
        extra_bs_direct,
        fallback_direct,
    }
}

/// Deterministic long-term gain of a serving path, dB, excluding array gain.
///
/// RIS paths add `20·log10(N)` for the co-phased aperture. Repeater paths
/// report their weaker hop, with the second hop credited for the repeater's
/// extra transmit power.
pub fn large_scale_gain_db(
    scenario: &Scenario,
    path: PathCandidate,
    ue: &Point,
    blocker: Option<&BlockerBox>,
) -> f64 {
    let flags = los_state(scenario, ue, blocker);
    let f = scenario.carrier_freq;
    let ch = &scenario.channel;
    let vpl = |b: bool| if b { scenario.vpl } else { 0.0 };
    let bs = &scenario.bs_position;
    let endpoint_gain = scenario.bs_gain_dbi + scenario.ue_gain_dbi;
    match path {
        PathCandidate::Direct => {
            -path_loss_db((ue - bs).norm(), f, ch.exponent_direct) - vpl(flags.direct)
                + endpoint_gain
        }
        PathCandidate::ViaRis(i) => {
            let ris = &scenario.ris[i];
            let pl_in = path_loss_db((ris.position - bs).norm(), f, ch.exponent_bs_ris);
            let pl_out = path_loss_db((ue - ris.position).norm(), f, ch.exponent_ris_ue);
            -(pl_in + pl_out) - vpl(flags.bs_ris[i]) - vpl(flags.ris_ue[i])
                + 20.0 * (ris.n_elements as f64).log10()
                + 2.0 * ris.element_gain_dbi
                + endpoint_gain
        }
        PathCandidate::ViaRepeater(i) => {
            let rep = &scenario.repeater[i];
            let hop1 = -path_loss_db((rep.position - bs).norm(), f, ch.exponent_repeater)
                - vpl(flags.repeater[i][0])
                + scenario.bs_gain_dbi
                + rep.gain_dbi;
            let hop2 = -path_loss_db((ue - rep.position).norm(), f, ch.exponent_repeater)
                - vpl(flags.repeater[i][1])
                + rep.gain_dbi
                + scenario.ue_gain_dbi
                + (rep.tx_power - scenario.tx_power);
            hop1.min(hop2)
        }
        PathCandidate::ViaExtraBs => {
            let x = scenario
                .extra_bs
                .as_ref()
                .expect("ViaExtraBs needs an extra BS");
            -path_loss_db((ue - x.position).norm(), f, ch.exponent_direct)
                - vpl(flags.extra_bs.unwrap_or(false))
                + x.gain_dbi
                + scenario.ue_gain_dbi
        }
    }
}
