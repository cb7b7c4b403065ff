//! Scenario configuration shared by every other module.
//!
//! A [`NetworkConfig`] describes one operating point of the countermeasure:
//! `users` bands in total (Alice, the helper Charlie, `mimic_users` users that
//! imitate the helper band in pairs, and the remaining normal users), the
//! energy-splitting factor, the PSK order and the channel/noise parameters.
//! Transmit energy per symbol is normalised to one, so the noise power is
//! `N0 = 10^(-snr_db/10)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigErrors, NcmsError, Result};

/// Noise power `N0` for a given SNR in dB under unit symbol energy.
pub fn snr_to_noise_power(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Total number of users `L`.
    #[serde(alias = "L")]
    pub users: usize,
    /// Users mimicking the helper band `L_C` (even).
    #[serde(alias = "L_C")]
    pub mimic_users: usize,
    /// Receive antennas at the helper `N_C`.
    #[serde(alias = "N_C")]
    pub relay_antennas: usize,
    /// Energy-splitting factor, strictly inside (0, 1).
    pub alpha: f64,
    /// PSK order `M`.
    #[serde(alias = "M")]
    pub psk_order: usize,
    pub snr_db: f64,
    /// Derived from `snr_db` by [`NetworkConfig::validate`].
    #[serde(alias = "N_0")]
    pub noise_power: f64,
    /// Loop-interference parameter at the helper.
    #[serde(alias = "rho")]
    pub loop_interference: f64,
    /// Alice-to-helper channel variance.
    #[serde(alias = "sigma2_ac")]
    pub relay_channel_variance: f64,
    /// Slots per half frame `n`.
    #[serde(alias = "n")]
    pub half_frame: usize,
    /// Adversary observation length `f` in symbols; always `2n`.
    #[serde(alias = "f")]
    pub frame_len: usize,
    /// Softmax scale `d` used by the adversary.
    #[serde(alias = "d")]
    pub softmax_scale: f64,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let snr_db = 35.0;
        NetworkConfig {
            users: 42,
            mimic_users: 10,
            relay_antennas: 4,
            alpha: 0.9987,
            psk_order: 4,
            snr_db,
            noise_power: snr_to_noise_power(snr_db),
            loop_interference: 1e-5,
            relay_channel_variance: 4.0,
            half_frame: 100,
            frame_len: 200,
            softmax_scale: 10.0,
            seed: 0x5eed_2024,
        }
    }
}

/// Names accepted by [`NetworkConfig::set_param`], canonical first.
pub const PARAM_NAMES: &[(&str, &[&str])] = &[
    ("users", &["L"]),
    ("mimic_users", &["L_C", "lc"]),
    ("relay_antennas", &["N_C", "nc"]),
    ("alpha", &[]),
    ("psk_order", &["M"]),
    ("snr_db", &["snr"]),
    ("loop_interference", &["rho"]),
    ("relay_channel_variance", &["sigma2_ac"]),
    ("half_frame", &["n"]),
    ("softmax_scale", &["d"]),
    ("seed", &[]),
];

fn canonical_param(name: &str) -> Option<&'static str> {
    PARAM_NAMES.iter().find(|(canon, aliases)| *canon == name || aliases.contains(&name)).map(|(canon, _)| *canon)
}

fn as_count(name: &'static str, value: f64) -> Result<usize> {
    if value < 0.0 || value.fract() != 0.0 || !value.is_finite() {
        return Err(NcmsError::arg(name, format!("{value} is not a non-negative integer")));
    }
    Ok(value as usize)
}

impl NetworkConfig {
    /// Reads a key/value (TOML) file; missing keys keep their defaults.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: NetworkConfig = toml::from_str(text)?;
        // noise power always follows the SNR; a stale value in the file is ignored
        cfg.noise_power = snr_to_noise_power(cfg.snr_db);
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Sets a field by canonical name or alias. `half_frame` also moves `frame_len`.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let canon =
            canonical_param(name).ok_or_else(|| NcmsError::arg("param", format!("unknown parameter `{name}`")))?;
        match canon {
            "users" => self.users = as_count("users", value)?,
            "mimic_users" => self.mimic_users = as_count("mimic_users", value)?,
            "relay_antennas" => self.relay_antennas = as_count("relay_antennas", value)?,
            "alpha" => self.alpha = value,
            "psk_order" => self.psk_order = as_count("psk_order", value)?,
            "snr_db" => {
                self.snr_db = value;
                self.noise_power = snr_to_noise_power(value);
            }
            "loop_interference" => self.loop_interference = value,
            "relay_channel_variance" => self.relay_channel_variance = value,
            "half_frame" => {
                self.half_frame = as_count("half_frame", value)?;
                self.frame_len = 2 * self.half_frame;
            }
            "softmax_scale" => self.softmax_scale = value,
            "seed" => self.seed = as_count("seed", value)? as u64,
            _ => unreachable!("every canonical name is handled"),
        }
        Ok(())
    }

    pub fn is_param(name: &str) -> bool {
        canonical_param(name).is_some()
    }

    /// Normal (non-participating) users: `L - L_C - 2`.
    pub fn normal_users(&self) -> usize {
        self.users.saturating_sub(self.mimic_users + 2)
    }

    /// Bands the adversary observes: every band except Alice's.
    pub fn observed_bands(&self) -> usize {
        self.users - 1
    }

    /// Checks every invariant and returns the config with derived fields filled in.
    pub fn validate(&self) -> std::result::Result<NetworkConfig, ConfigErrors> {
        let mut errs = ConfigErrors::default();
        let c = self;

        if c.users < 4 {
            errs.push("users", format!("L must be at least 4, got {}", c.users));
        }
        if !c.mimic_users.is_multiple_of(2) {
            errs.push("mimic_users", format!("L_C must be even, got {}", c.mimic_users));
        }
        if c.users >= 2 && c.mimic_users > c.users - 2 {
            errs.push("mimic_users", format!("L_C must not exceed L-2 = {}, got {}", c.users - 2, c.mimic_users));
        }
        if c.relay_antennas < 1 {
            errs.push("relay_antennas", "N_C must be at least 1");
        }
        if !(c.alpha > 0.0 && c.alpha < 1.0) {
            errs.push("alpha", format!("α must lie strictly in (0,1), got {}", c.alpha));
        }
        if c.psk_order < 2 || !c.psk_order.is_power_of_two() {
            errs.push("psk_order", format!("M must be a power of two ≥ 2, got {}", c.psk_order));
        }
        if !c.snr_db.is_finite() {
            errs.push("snr_db", "SNR must be finite");
        }
        if !(c.loop_interference > 0.0 && c.loop_interference < 1.0) {
            errs.push("loop_interference", format!("ρ must lie strictly in (0,1), got {}", c.loop_interference));
        }
        if !(c.relay_channel_variance > 0.0 && c.relay_channel_variance.is_finite()) {
            errs.push("relay_channel_variance", "σ²_AC must be positive and finite");
        }
        if c.half_frame < 1 {
            errs.push("half_frame", "n must be at least 1");
        }
        if c.frame_len != 2 * c.half_frame {
            errs.push("frame_len", format!("f must equal 2n = {}, got {}", 2 * c.half_frame, c.frame_len));
        }
        if !(c.softmax_scale > 0.0 && c.softmax_scale.is_finite()) {
            errs.push("softmax_scale", "d must be positive and finite");
        }

        if !errs.is_empty() {
            return Err(errs);
        }
        let mut out = c.clone();
        out.noise_power = snr_to_noise_power(c.snr_db);
        Ok(out)
    }

    /// Stable content hash (hex SHA-256 of the canonical JSON form).
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    /// `key=value` pairs in declaration order, for self-describing output files.
    pub fn describe(&self) -> Vec<(&'static str, String)> {
        vec![
            ("users", self.users.to_string()),
            ("mimic_users", self.mimic_users.to_string()),
            ("relay_antennas", self.relay_antennas.to_string()),
            ("alpha", format!("{}", self.alpha)),
            ("psk_order", self.psk_order.to_string()),
            ("snr_db", format!("{}", self.snr_db)),
            ("noise_power", format!("{:e}", self.noise_power)),
            ("loop_interference", format!("{}", self.loop_interference)),
            ("relay_channel_variance", format!("{}", self.relay_channel_variance)),
            ("half_frame", self.half_frame.to_string()),
            ("frame_len", self.frame_len.to_string()),
            ("softmax_scale", format!("{}", self.softmax_scale)),
            ("seed", self.seed.to_string()),
        ]
    }
}
