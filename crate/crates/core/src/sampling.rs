//! Random number contract and primitive channel/noise draws.
//!
//! One master seed fans out into independent ChaCha8 substreams. The key is
//! derived from `(master, domain)` and the 64-bit ChaCha stream id carries the
//! worker-local index (trial chunk, band, frame), so any substream can be
//! regenerated on its own without replaying the others.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{NcmsError, Result};

pub type SimRng = ChaCha8Rng;

/// Independent purposes that draw randomness. Each gets its own key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    HelperBand,
    MimicBand,
    NormalBand,
    AliceBand,
    Adversary,
    Oracle,
    Custom(u64),
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::HelperBand => 0x01,
            Domain::MimicBand => 0x02,
            Domain::NormalBand => 0x03,
            Domain::AliceBand => 0x04,
            Domain::Adversary => 0x05,
            Domain::Oracle => 0x06,
            Domain::Custom(x) => 0x1000 ^ x.rotate_left(17),
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based derivation of per-worker generators from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Substreams {
    master: u64,
}

impl Substreams {
    pub fn new(master: u64) -> Self {
        Substreams { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Generator for `(domain, index)`; `index` selects the ChaCha stream.
    pub fn stream(&self, domain: Domain, index: u64) -> SimRng {
        let mut state = self.master ^ domain.tag().wrapping_mul(0xd6e8_feb8_6659_fd93);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }

    /// Generator for a two-level index such as `(chunk, band)`.
    pub fn stream2(&self, domain: Domain, outer: u64, inner: u64) -> SimRng {
        self.stream(domain, (outer << 20) ^ inner)
    }
}

/// One circularly-symmetric complex Gaussian draw with total variance `variance`.
#[inline]
pub fn cscg<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `dim` i.i.d. CN(0, variance) samples.
pub fn sample_cscg<R: Rng + ?Sized>(rng: &mut R, variance: f64, dim: usize) -> Result<Vec<Complex64>> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(NcmsError::arg("variance", format!("must be finite and ≥ 0, got {variance}")));
    }
    Ok((0..dim).map(|_| cscg(rng, variance)).collect())
}

#[inline]
pub fn random_bit<R: Rng + ?Sized>(rng: &mut R) -> u8 {
    (rng.next_u32() >> 31) as u8
}

/// Uniform index in `0..order` for a power-of-two `order`.
#[inline]
pub fn random_index<R: Rng + ?Sized>(rng: &mut R, order: usize) -> usize {
    debug_assert!(order.is_power_of_two());
    (rng.next_u32() as usize) & (order - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn zero_variance_is_all_zero() {
        let mut rng = Substreams::new(1).stream(Domain::Oracle, 0);
        let v = sample_cscg(&mut rng, 0.0, 16).unwrap();
        assert!(v.iter().all(|z| z.re == 0.0 && z.im == 0.0));
    }

    #[test]
    fn negative_variance_rejected() {
        let mut rng = Substreams::new(1).stream(Domain::Oracle, 0);
        assert!(sample_cscg(&mut rng, -1.0, 4).is_err());
        assert!(sample_cscg(&mut rng, f64::NAN, 4).is_err());
    }

    #[test]
    fn unit_variance_moments() {
        let mut rng = Substreams::new(7).stream(Domain::Oracle, 3);
        let n = 1_000_000;
        let v = sample_cscg(&mut rng, 1.0, n).unwrap();
        let power = v.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        let mean = v.iter().sum::<Complex64>() / n as f64;
        assert!((0.99..=1.01).contains(&power), "power {power}");
        assert!(mean.re.abs() < 0.005 && mean.im.abs() < 0.005, "mean {mean}");
        // real and imaginary parts each carry half the variance
        let re_var = v.iter().map(|z| z.re * z.re).sum::<f64>() / n as f64;
        assert!((re_var - 0.5).abs() < 0.005);
    }

    #[test]
    fn second_moment_within_four_standard_errors() {
        for (i, var) in [0.1, 1.0, 4.0].into_iter().enumerate() {
            let mut rng = Substreams::new(99).stream(Domain::Oracle, i as u64);
            let n = 100_000;
            let p: Vec<f64> = (0..n).map(|_| cscg(&mut rng, var).norm_sqr()).collect();
            let mean = p.iter().sum::<f64>() / n as f64;
            // |h|^2 is exponential with mean var, so its std is var
            let se = var / (n as f64).sqrt();
            assert!((mean - var).abs() < 4.0 * se, "var {var}: {mean}");
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let s = Substreams::new(42);
        let a: Vec<u64> = (0..8)
            .map({
                let mut r = s.stream(Domain::MimicBand, 5);
                move |_| r.next_u64()
            })
            .collect();
        let b: Vec<u64> = (0..8)
            .map({
                let mut r = Substreams::new(42).stream(Domain::MimicBand, 5);
                move |_| r.next_u64()
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn substreams_differ() {
        let s = Substreams::new(42);
        let mut a = s.stream(Domain::MimicBand, 5);
        let mut b = s.stream(Domain::MimicBand, 6);
        let mut c = s.stream(Domain::NormalBand, 5);
        let x = a.next_u64();
        assert_ne!(x, b.next_u64());
        assert_ne!(x, c.next_u64());
        assert_ne!(s.stream2(Domain::Oracle, 1, 2).next_u64(), s.stream2(Domain::Oracle, 2, 1).next_u64());
    }

    #[test]
    fn random_bits_balanced() {
        let mut rng = Substreams::new(3).stream(Domain::Oracle, 0);
        let n = 100_000;
        let ones: u32 = (0..n).map(|_| random_bit(&mut rng) as u32).sum();
        let frac = ones as f64 / n as f64;
        assert!((frac - 0.5).abs() < 4.0 * 0.5 / (n as f64).sqrt());
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[random_index(&mut rng, 4)] += 1;
        }
        assert!(counts.iter().all(|&c| (c as f64 / n as f64 - 0.25).abs() < 0.01));
    }
}
