//! The helper's full-duplex reception of Alice's bit and its energy detector.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NcmsError, Result};
use crate::network::NetworkConfig;
use crate::sampling::cscg;
use crate::special::{gamma_p, gamma_q};

/// Energy threshold and crossover probabilities of the helper's detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverProfile {
    pub tau: f64,
    pub p01: f64,
    pub p10: f64,
    pub p00: f64,
    pub p11: f64,
    pub sigma0_sq: f64,
    pub sigma1_sq: f64,
}

impl CrossoverProfile {
    /// Detector profile for a configuration at its own `alpha`.
    pub fn for_config(cfg: &NetworkConfig) -> Result<Self> {
        let (s0, s1) = branch_variances(cfg);
        let tau = optimal_threshold(s0, s1, cfg.relay_antennas)?;
        let (p01, p10) = crossover_probabilities(tau, s0, s1, cfg.relay_antennas);
        Ok(CrossoverProfile { tau, p01, p10, p00: 1.0 - p01, p11: 1.0 - p10, sigma0_sq: s0, sigma1_sq: s1 })
    }

    /// A detector that never errs.
    pub fn perfect() -> Self {
        CrossoverProfile { tau: 1.0, p01: 0.0, p10: 0.0, p00: 1.0, p11: 1.0, sigma0_sq: 0.0, sigma1_sq: 0.0 }
    }

    /// Probability that the embedded decision is `x_hat`, with Alice's bit uniform.
    pub fn decision_prior(&self, x_hat: u8) -> f64 {
        if x_hat == 0 {
            0.5 * (self.p00 + self.p10)
        } else {
            0.5 * (self.p01 + self.p11)
        }
    }

    /// `P(x̂ | x)`.
    pub fn transition(&self, x: u8, x_hat: u8) -> f64 {
        match (x, x_hat) {
            (0, 0) => self.p00,
            (0, _) => self.p01,
            (_, 0) => self.p10,
            _ => self.p11,
        }
    }
}

/// Per-antenna received variance without and with Alice's bit.
pub fn branch_variances(cfg: &NetworkConfig) -> (f64, f64) {
    let s0 = cfg.noise_power + cfg.alpha * cfg.loop_interference;
    (s0, s0 + (1.0 - cfg.alpha) * cfg.relay_channel_variance)
}

/// Draws the helper's `N_C`-antenna sample for Alice's bit `x`.
pub fn receive_at_charlie<R: Rng + ?Sized>(x: u8, cfg: &NetworkConfig, rng: &mut R) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(cfg.relay_antennas);
    for_each_antenna(x, cfg, rng, |y| out.push(y));
    out
}

/// Total received energy for bit `x`; same draws as [`receive_at_charlie`].
#[inline]
pub fn charlie_energy<R: Rng + ?Sized>(x: u8, cfg: &NetworkConfig, rng: &mut R) -> f64 {
    let mut e = 0.0;
    for_each_antenna(x, cfg, rng, |y| e += y.norm_sqr());
    e
}

#[inline]
fn for_each_antenna<R: Rng + ?Sized>(x: u8, cfg: &NetworkConfig, rng: &mut R, mut f: impl FnMut(Complex64)) {
    let a = (1.0 - cfg.alpha).sqrt() * x as f64;
    let li = cfg.alpha * cfg.loop_interference;
    for _ in 0..cfg.relay_antennas {
        let h_ac = cscg(rng, cfg.relay_channel_variance);
        let h_cc = cscg(rng, li);
        let w = cscg(rng, cfg.noise_power);
        f(h_ac * a + h_cc + w);
    }
}

/// Equal-prior likelihood-ratio threshold on total energy.
pub fn optimal_threshold(sigma0_sq: f64, sigma1_sq: f64, antennas: usize) -> Result<f64> {
    if !(sigma0_sq > 0.0) || !sigma1_sq.is_finite() || antennas == 0 {
        return Err(NcmsError::arg("sigma0_sq", "variances must be positive and N_C ≥ 1"));
    }
    if !(sigma1_sq > sigma0_sq) {
        return Err(NcmsError::NonIdentifiable);
    }
    // ln(σ1/σ0) as ln_1p keeps precision when the variances nearly coincide
    let gap = sigma1_sq - sigma0_sq;
    let ln = (gap / sigma0_sq).ln_1p();
    Ok(antennas as f64 * sigma0_sq * sigma1_sq * ln / gap)
}

/// Decides 1 iff the total energy strictly exceeds `tau`.
#[inline]
pub fn detect_energy(y: &[Complex64], tau: f64) -> u8 {
    let e: f64 = y.iter().map(|z| z.norm_sqr()).sum();
    (e > tau) as u8
}

/// `(P01, P10)` for total energy that is Erlang-`N_C` under each hypothesis.
pub fn crossover_probabilities(tau: f64, sigma0_sq: f64, sigma1_sq: f64, antennas: usize) -> (f64, f64) {
    (gamma_q(antennas, tau / sigma0_sq), gamma_p(antennas, tau / sigma1_sq))
}

/// Helper pass over a frame: decisions `x̂` for Alice's bits.
pub fn relay_decisions<R: Rng + ?Sized>(bits: &[u8], cfg: &NetworkConfig, tau: f64, rng: &mut R) -> Vec<u8> {
    bits.iter().map(|&x| (charlie_energy(x, cfg, rng) > tau) as u8).collect()
}
