//! Channel realizations for the AP → user link with RIS reflection, and the
//! link metrics built on them.
//!
//! With the uniform transmit vector `√(p/M)·1_M·s`, the received sample is
//! `z = √p · g · s + n` where the effective scalar gain is
//!
//! ```text
//! g = (h2 · Φ · H1 + h1) · 1_M / √M
//!   = (Σ_n e^{jφ_n} · h2_n · (H1·1_M)_n + h1·1_M) / √M
//! ```
//!
//! and the SNR is `(p/σ²)·|g|²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cgauss_sample, wrap_phase, Complex, ComplexMatrix, ComplexVector, SimRng};
use crate::scene::{Position, Scene};

/// Log-distance reference distance in meters.
pub const REFERENCE_DISTANCE: f64 = 1.0;
/// Log-distance pathloss slope, dB per decade.
pub const PATHLOSS_SLOPE_DB: f64 = 20.4;

/// Pathloss `20.4·log10(d/d0)` in dB. Distances below `d0` clamp to `d0`.
pub fn pathloss_db(d: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::domain(format!(
            "distance must be positive and finite, got {d}"
        )));
    }
    Ok(PATHLOSS_SLOPE_DB * (d.max(REFERENCE_DISTANCE) / REFERENCE_DISTANCE).log10())
}

/// Linear power gain `10^(-PL/10)`.
pub fn pathloss_linear(d: f64) -> Result<f64> {
    Ok(10f64.powf(-pathloss_db(d)? / 10.0))
}

/// One realization of the three channels of the link.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    /// AP → user, length M.
    pub direct: ComplexVector,
    /// AP → RIS, N × M.
    pub ap_ris: ComplexMatrix,
    /// RIS → user, length N.
    pub ris_user: ComplexVector,
}

impl ChannelSet {
    pub fn new(
        direct: ComplexVector,
        ap_ris: ComplexMatrix,
        ris_user: ComplexVector,
    ) -> Result<Self> {
        if ap_ris.cols() != direct.len() {
            return Err(Error::dim(
                direct.len(),
                ap_ris.cols(),
                "AP-RIS columns vs antennas",
            ));
        }
        if ap_ris.rows() != ris_user.len() {
            return Err(Error::dim(
                ris_user.len(),
                ap_ris.rows(),
                "AP-RIS rows vs elements",
            ));
        }
        let ch = Self {
            direct,
            ap_ris,
            ris_user,
        };
        if !(ch.direct.is_finite() && ch.ap_ris.is_finite() && ch.ris_user.is_finite()) {
            return Err(Error::domain("channel entries must be finite"));
        }
        Ok(ch)
    }

    pub fn antennas(&self) -> usize {
        self.direct.len()
    }

    pub fn elements(&self) -> usize {
        self.ris_user.len()
    }

    /// `h1 · 1_M`.
    pub fn direct_sum(&self) -> Complex {
        self.direct.sum()
    }

    /// Per-element cascaded coefficients `a_n = h2_n · (H1·1_M)_n`.
    pub fn cascaded(&self) -> Vec<Complex> {
        let row_sums = self.ap_ris.row_sums();
        self.ris_user
            .iter()
            .zip(row_sums.iter())
            .map(|(h2, r)| h2 * r)
            .collect()
    }

    /// The same link with the RIS path removed (`h2 = 0`).
    pub fn without_ris(&self) -> ChannelSet {
        ChannelSet {
            direct: self.direct.clone(),
            ap_ris: self.ap_ris.clone(),
            ris_user: ComplexVector::zeros(self.elements()),
        }
    }
}

/// RIS phase shifts, each wrapped into `[-π, π)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseConfig(Vec<f64>);

impl PhaseConfig {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::domain(
                "phase configuration must have at least one element",
            ));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("phases must be finite"));
        }
        Ok(Self(phases.into_iter().map(wrap_phase).collect()))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n.max(1)])
    }

    pub fn random(n: usize, rng: &mut SimRng) -> Self {
        use std::f64::consts::PI;
        Self(
            (0..n.max(1))
                .map(|_| wrap_phase(rng.uniform(-PI, PI)))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.0
    }

    /// Diagonal entry `e^{jφ_n}` of Φ.
    pub fn phasor(&self, n: usize) -> Complex {
        Complex::from_polar(1.0, self.0[n])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub transmit_power: f64,
    pub noise_variance: f64,
    pub carrier_hz: f64,
    pub reference_distance: f64,
}

impl LinkBudget {
    pub fn new(transmit_power: f64, noise_variance: f64) -> Result<Self> {
        if !(transmit_power >= 0.0) || !(noise_variance >= 0.0) {
            return Err(Error::domain(
                "transmit power and noise variance must be >= 0",
            ));
        }
        Ok(Self {
            transmit_power,
            noise_variance,
            carrier_hz: 2.6e9,
            reference_distance: REFERENCE_DISTANCE,
        })
    }

    /// Unit noise variance with `p/σ²` given in dB.
    pub fn from_snr_db(snr_db: f64) -> Self {
        Self::new(10f64.powf(snr_db / 10.0), 1.0).expect("finite dB value")
    }
}

/// Draw `(h1, H1, h2)` for a user position.
///
/// Entries are `√(pathloss_linear(d)) · CN(0, 1)`, drawn in the order H1 (row
/// major), h1, h2. With `blockage` on, any path whose segment crosses an obstacle
/// gets the scene's extra blockage loss.
pub fn draw_channels(
    scene: &Scene,
    user: &Position,
    rng: &mut SimRng,
    blockage: bool,
) -> Result<ChannelSet> {
    if !scene.contains(user) || user.z != 0.0 {
        return Err(Error::domain(format!(
            "user position ({}, {}, {}) must lie on the room floor",
            user.x, user.y, user.z
        )));
    }
    let penalty = 10f64.powf(-scene.blockage_penalty_db() / 20.0);
    let amplitude = |a: &Position, b: &Position| -> Result<f64> {
        let mut amp = pathloss_linear(a.distance(b))?.sqrt();
        if blockage && scene.segment_blocked(a, b) {
            amp *= penalty;
        }
        Ok(amp)
    };

    let ap = scene.ap_position();
    let (n, m) = (scene.ris_elements(), scene.ap_antennas());
    let elements = scene.ris_element_positions();

    let mut ap_ris = Vec::with_capacity(n * m);
    for element in elements {
        let amp = amplitude(&ap, element)?;
        for _ in 0..m {
            ap_ris.push(cgauss_sample(rng, 1.0)? * amp);
        }
    }
    let amp = amplitude(&ap, user)?;
    let direct = (0..m)
        .map(|_| Ok(cgauss_sample(rng, 1.0)? * amp))
        .collect::<Result<Vec<_>>>()?;
    let ris_user = elements
        .iter()
        .map(|e| Ok(cgauss_sample(rng, 1.0)? * amplitude(e, user)?))
        .collect::<Result<Vec<_>>>()?;

    ChannelSet::new(
        ComplexVector::new(direct)?,
        ComplexMatrix::new(n, m, ap_ris)?,
        ComplexVector::new(ris_user)?,
    )
}

/// Effective scalar gain seen by the unit-power symbol.
pub fn effective_gain(ch: &ChannelSet, cfg: &PhaseConfig) -> Result<Complex> {
    if cfg.len() != ch.elements() {
        return Err(Error::dim(
            ch.elements(),
            cfg.len(),
            "phase config vs RIS elements",
        ));
    }
    let reflected: Complex = ch
        .cascaded()
        .iter()
        .enumerate()
        .map(|(n, a)| cfg.phasor(n) * a)
        .sum();
    Ok((reflected + ch.direct_sum()) / (ch.antennas() as f64).sqrt())
}

/// Received sample `z = √p · g · s + n`, `n ~ CN(0, σ²)`.
pub fn received_signal(
    ch: &ChannelSet,
    cfg: &PhaseConfig,
    budget: &LinkBudget,
    symbol: Complex,
    rng: &mut SimRng,
) -> Result<Complex> {
    if (symbol.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!(
            "information symbol must have unit modulus, got |s| = {}",
            symbol.norm()
        )));
    }
    let g = effective_gain(ch, cfg)?;
    let noise = cgauss_sample(rng, budget.noise_variance)?;
    Ok(g * symbol * budget.transmit_power.sqrt() + noise)
}

/// `γ = (p/σ²)·|g|²`.
pub fn snr(ch: &ChannelSet, cfg: &PhaseConfig, budget: &LinkBudget) -> Result<f64> {
    if !(budget.noise_variance > 0.0) {
        return Err(Error::domain("SNR needs a positive noise variance"));
    }
    let g = effective_gain(ch, cfg)?;
    Ok(budget.transmit_power / budget.noise_variance * g.norm_sqr())
}

/// Achievable rate `log2(1 + γ)` in bits/s/Hz.
pub fn rate(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::domain(format!("SNR must be >= 0, got {gamma}")));
    }
    Ok((1.0 + gamma).log2())
}
