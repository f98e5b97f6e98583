//! Beamforming, RIS phase optimization, impairment-aware SINR and rates.
//!
//! All links carry a single stream on the dominant eigenmode. For an RIS
//! path the received scalar is `uᴴ (H_d + H_out·diag(e^{jθ})·H_in) w`, and
//! the optimizer alternates between the SVD-matched beamformer pair `(u, w)`
//! and a closed-form co-phasing of every element against the direct term.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, noise_power_dbm, CMatrix, CVector, ChannelRealization};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::schemes::PathCandidate;

/// RIS reflection phases, radians. Coefficients are `e^{jθ}`, unit modulus.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseConfig {
    pub phases: Vec<f64>,
}

impl PhaseConfig {
    pub fn zeros(n: usize) -> Self {
        Self { phases: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn coefficients(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.phases.iter().map(|&t| Complex64::from_polar(1.0, t))
    }

    /// I.i.d. phases uniform on [0, 2π).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            phases: (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect(),
        }
    }
}

/// Transceiver distortion-noise model. Distortion power is proportional to
/// signal power with coefficients κ_t² (transmitter) and κ_r² (receiver).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImpairmentSpec {
    pub kappa_tx_sq: f64,
    pub kappa_rx_sq: f64,
    pub enabled: bool,
}

impl Default for ImpairmentSpec {
    fn default() -> Self {
        Self {
            kappa_tx_sq: 0.05 * 0.05,
            kappa_rx_sq: 0.05 * 0.05,
            enabled: false,
        }
    }
}

impl ImpairmentSpec {
    pub const IDEAL: ImpairmentSpec = ImpairmentSpec {
        kappa_tx_sq: 0.0,
        kappa_rx_sq: 0.0,
        enabled: false,
    };

    /// SINR ceiling `1/(κ_t² + κ_r²)`; infinite when disabled.
    pub fn ceiling(&self) -> f64 {
        let k = self.kappa_tx_sq + self.kappa_rx_sq;
        if self.enabled && k > 0.0 {
            1.0 / k
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamformedLink {
    /// `|uᴴ H_eff w|²`, linear power gain including path loss.
    pub effective_gain: f64,
    /// Unit-norm BS precoder.
    pub precoder: CVector,
    /// Unit-norm UE combiner.
    pub combiner: CVector,
    pub phase_config: Option<PhaseConfig>,
}

/// Spectral efficiency (bit/s/Hz) and rate (bit/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rate {
    pub spectral_efficiency: f64,
    pub bps: f64,
}

impl Rate {
    pub const ZERO: Rate = Rate {
        spectral_efficiency: 0.0,
        bps: 0.0,
    };

    pub fn from_sinr(sinr: f64, bandwidth: f64) -> Rate {
        let se = (1.0 + sinr).log2();
        Rate {
            spectral_efficiency: se,
            bps: se * bandwidth,
        }
    }
}

/// Tunables of the alternating optimizer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerOptions {
    pub max_iters: usize,
    /// Stop once an iteration improves the gain by less than this fraction.
    pub tol: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-6,
        }
    }
}

fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// `H_d + H_out · diag(e^{jθ}) · H_in`.
pub fn effective_channel(
    direct: &CMatrix,
    inbound: &CMatrix,
    phases: &PhaseConfig,
    outbound: &CMatrix,
) -> Result<CMatrix> {
    let n = phases.len();
    if inbound.nrows() != n || outbound.ncols() != n {
        return Err(Error::Dimension(format!(
            "{n} phases for inbound {:?} / outbound {:?}",
            inbound.shape(),
            outbound.shape()
        )));
    }
    if direct.shape() != (outbound.nrows(), inbound.ncols()) {
        return Err(Error::Dimension(format!(
            "direct {:?} vs cascade {}x{}",
            direct.shape(),
            outbound.nrows(),
            inbound.ncols()
        )));
    }
    let mut scaled = outbound.clone();
    for (mut col, c) in scaled.column_iter_mut().zip(phases.coefficients()) {
        col *= c;
    }
    Ok(direct + scaled * inbound)
}

/// Dominant singular triple `(σ², u, w)` with `H w = σ u`.
pub fn dominant_mode(h: &CMatrix) -> (f64, CVector, CVector) {
    let svd = h.clone().svd(true, true);
    let u_all = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (k, s) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, s)| {
            if s > best.1 {
                (i, s)
            } else {
                best
            }
        });
    let u = u_all.column(k).into_owned();
    let w = v_t.row(k).adjoint();
    (s * s, u, w)
}

/// Received gain `|uᴴ H w|²`.
pub fn beam_gain(h: &CMatrix, combiner: &CVector, precoder: &CVector) -> f64 {
    (combiner.adjoint() * h * precoder)[(0, 0)].norm_sqr()
}

/// SVD transmission over a plain MIMO link.
pub fn beamform_direct(h: &CMatrix) -> Result<BeamformedLink> {
    check_finite(h)?;
    let (g, u, w) = dominant_mode(h);
    Ok(BeamformedLink {
        effective_gain: g,
        precoder: w,
        combiner: u,
        phase_config: None,
    })
}

/// SVD beamformers matched to a fixed RIS configuration.
pub fn beamform_with_phases(
    direct: &CMatrix,
    inbound: &CMatrix,
    outbound: &CMatrix,
    phases: PhaseConfig,
) -> Result<BeamformedLink> {
    let h = effective_channel(direct, inbound, &phases, outbound)?;
    let mut link = beamform_direct(&h)?;
    link.phase_config = Some(phases);
    Ok(link)
}

/// Per-element scalar contributions `a_i = (uᴴ h_out,i)(h_in,iᵀ w)` and the
/// direct scalar `uᴴ H_d w`.
fn element_contributions(
    direct: &CMatrix,
    inbound: &CMatrix,
    outbound: &CMatrix,
    u: &CVector,
    w: &CVector,
) -> (Complex64, Vec<Complex64>) {
    let d = (u.adjoint() * direct * w)[(0, 0)];
    let left = u.adjoint() * outbound; // 1 × N
    let right = inbound * w; // N
    let a = left.iter().zip(right.iter()).map(|(l, r)| l * r).collect();
    (d, a)
}

/// Result of [`optimize_ris`], with the gain after every iteration.
#[derive(Clone, Debug)]
pub struct OptimizationTrace {
    pub link: BeamformedLink,
    /// Gain at initialization followed by the gain after each iteration.
    pub gains: Vec<f64>,
}

/// Alternating maximization of `|uᴴ H_eff(θ) w|²` over beamformers and RIS
/// phases, starting from all-zero phases.
pub fn optimize_ris(
    direct: &CMatrix,
    inbound: &CMatrix,
    outbound: &CMatrix,
    opts: OptimizerOptions,
) -> Result<OptimizationTrace> {
    check_finite(direct)?;
    check_finite(inbound)?;
    check_finite(outbound)?;
    let n = inbound.nrows();
    let mut phases = PhaseConfig::zeros(n);
    let h = effective_channel(direct, inbound, &phases, outbound)?;
    let (mut gain, mut u, mut w) = dominant_mode(&h);
    let mut gains = vec![gain];

    for _ in 0..opts.max_iters {
        let (d, a) = element_contributions(direct, inbound, outbound, &u, &w);
        let reference = d.arg();
        let candidate = PhaseConfig {
            phases: a.iter().map(|ai| reference - ai.arg()).collect(),
        };
        let h = effective_channel(direct, inbound, &candidate, outbound)?;
        let (g, u_new, w_new) = dominant_mode(&h);
        if g < gain {
            // Both half-steps are exact maximizers, so this is round-off only.
            break;
        }
        let rel = (g - gain) / gain.max(f64::MIN_POSITIVE);
        phases = candidate;
        gain = g;
        u = u_new;
        w = w_new;
        gains.push(gain);
        if rel < opts.tol {
            break;
        }
    }

    Ok(OptimizationTrace {
        link: BeamformedLink {
            effective_gain: gain,
            precoder: w,
            combiner: u,
            phase_config: Some(phases),
        },
        gains,
    })
}

/// Beamform the given path of a realization. Direct-type paths use plain
/// SVD transmission; RIS paths run the alternating optimizer with the direct
/// link superimposed.
pub fn optimize_beamforming(
    realization: &ChannelRealization,
    path: PathCandidate,
    opts: OptimizerOptions,
) -> Result<BeamformedLink> {
    match path {
        PathCandidate::Direct => beamform_direct(&realization.direct.matrix),
        PathCandidate::ViaExtraBs => {
            let link = realization
                .extra_bs_direct
                .as_ref()
                .ok_or_else(|| Error::Config("scenario has no extra BS".into()))?;
            beamform_direct(&link.matrix)
        }
        PathCandidate::ViaRis(i) => {
            let (inb, out) = realization
                .inbound
                .get(i)
                .zip(realization.outbound.get(i))
                .ok_or_else(|| Error::Config(format!("scenario has no RIS {}", i + 1)))?;
            Ok(optimize_ris(&realization.direct.matrix, &inb.matrix, &out.matrix, opts)?.link)
        }
        PathCandidate::ViaRepeater(_) => Err(Error::Config(
            "repeater paths are two-hop; use repeater_rate".into(),
        )),
    }
}

/// Adds i.i.d. Uniform[−bound, bound] noise to every phase.
pub fn apply_phase_noise<R: Rng + ?Sized>(
    phases: &PhaseConfig,
    bound: f64,
    rng: &mut R,
) -> PhaseConfig {
    if bound == 0.0 {
        return phases.clone();
    }
    PhaseConfig {
        phases: phases
            .phases
            .iter()
            .map(|t| t + rng.random_range(-bound..=bound))
            .collect(),
    }
}

/// Received SINR. With impairments, distortion adds `γ₀(κ_t² + κ_r²)` to
/// the unit noise, capping the SINR at `1/(κ_t² + κ_r²)`.
pub fn sinr(effective_gain: f64, tx_power_dbm: f64, noise_dbm: f64, imp: &ImpairmentSpec) -> f64 {
    let snr = db_to_linear(tx_power_dbm - noise_dbm) * effective_gain;
    if imp.enabled {
        snr / (snr * (imp.kappa_tx_sq + imp.kappa_rx_sq) + 1.0)
    } else {
        snr
    }
}

/// Shannon rate of a beamformed link on the scenario's main band.
pub fn rate_bps(link: &BeamformedLink, scenario: &Scenario, imp: &ImpairmentSpec) -> Rate {
    let g = sinr(
        link.effective_gain,
        scenario.tx_power,
        noise_power_dbm(scenario),
        imp,
    );
    Rate::from_sinr(g, scenario.bandwidth)
}

/// Amplify-and-forward end-to-end SNR `γ₁γ₂ / (γ₁ + γ₂ + 1)`.
pub fn af_end_to_end(g1: f64, g2: f64) -> f64 {
    if g1.is_infinite() {
        return g2;
    }
    if g2.is_infinite() {
        return g1;
    }
    g1 * g2 / (g1 + g2 + 1.0)
}

/// Rate through an amplify-and-forward repeater: hop 1 at the BS power,
/// hop 2 at the repeater's own power.
pub fn repeater_rate(
    hop1: &BeamformedLink,
    hop2: &BeamformedLink,
    repeater_power_dbm: f64,
    scenario: &Scenario,
    imp: &ImpairmentSpec,
) -> Rate {
    let noise = noise_power_dbm(scenario);
    let g1 = sinr(hop1.effective_gain, scenario.tx_power, noise, &ImpairmentSpec::IDEAL);
    let g2 = sinr(hop2.effective_gain, repeater_power_dbm, noise, &ImpairmentSpec::IDEAL);
    let mut g = af_end_to_end(g1, g2);
    if imp.enabled {
        g /= g * (imp.kappa_tx_sq + imp.kappa_rx_sq) + 1.0;
    }
    Rate::from_sinr(g, scenario.bandwidth)
}
