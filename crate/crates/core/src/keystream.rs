//! Shared-secret bit sequences (`a`, `p`, `q`) and key-rate accounting.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{NcmsError, Result};

/// Common randomness each mimic pair consumes, in bits per channel use.
pub const PAIR_KEY_RATE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyMaterial {
    pub key_id: String,
    pub bits: Vec<u8>,
}

impl KeyMaterial {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

/// Deterministic pseudo-random bits keyed by `(master_secret, key_id)`.
///
/// The pair is hashed into a ChaCha20 key; bits are taken LSB-first from the
/// output words. Statistical uniformity is all the simulator needs.
pub fn derive_bits(master_secret: &[u8], key_id: &str, length: usize) -> Result<KeyMaterial> {
    if length == 0 {
        return Err(NcmsError::arg("length", "key length must be at least 1"));
    }
    let mut h = Sha256::new();
    h.update((master_secret.len() as u64).to_le_bytes());
    h.update(master_secret);
    h.update(key_id.as_bytes());
    let seed: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha20Rng::from_seed(seed);

    let mut bits = Vec::with_capacity(length);
    while bits.len() < length {
        let word = rng.next_u64();
        let take = (length - bits.len()).min(64);
        bits.extend((0..take).map(|i| ((word >> i) & 1) as u8));
    }
    Ok(KeyMaterial { key_id: key_id.to_owned(), bits })
}

/// Network-wide key rate needed by `mimic_users` users (`L_C / 2` bits per channel use).
pub fn key_rate_overhead(mimic_users: usize) -> Result<f64> {
    if !mimic_users.is_multiple_of(2) {
        return Err(NcmsError::arg("mimic_users", format!("L_C must be even, got {mimic_users}")));
    }
    Ok(mimic_users as f64 * PAIR_KEY_RATE)
}
