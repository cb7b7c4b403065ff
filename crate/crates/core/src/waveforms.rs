//! Transmit programs for every band type and received-sample synthesis.
//!
//! A slot transmission is a short list of contributions. Each one names the
//! transmitter (`Source::Primary` is the band's own symbol transmitter,
//! `Source::Helper` is the user pouring energy into it), an amplitude, a
//! payload and a phase offset. Receivers combine contributions with their own
//! channel to each source and add noise.

use std::f64::consts::PI;
use std::io::Write;

use arrayvec::ArrayVec;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NcmsError, Result};
use crate::network::NetworkConfig;
use crate::sampling::{cscg, random_bit, random_index, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PskSymbol {
    pub index: usize,
    pub value: Complex64,
}

/// `M`-PSK points `e^{-i 2π s / M}`.
///
/// Points are generated over the first quarter turn and rotated by exact
/// multiples of `-i`, so symmetric constellations are exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(NcmsError::arg("psk_order", format!("M must be a power of two ≥ 2, got {order}")));
        }
        let points = if order.is_multiple_of(4) {
            let q = order / 4;
            let base: Vec<Complex64> = (0..q)
                .map(|s| {
                    let (sin, cos) = (2.0 * PI * s as f64 / order as f64).sin_cos();
                    Complex64::new(cos, -sin)
                })
                .collect();
            let mut pts = Vec::with_capacity(order);
            for turn in 0..4 {
                for z in &base {
                    let mut w = *z;
                    for _ in 0..turn {
                        w = Complex64::new(w.im, -w.re);
                    }
                    pts.push(w);
                }
            }
            pts
        } else {
            vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]
        };
        Ok(Constellation { points })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    #[inline]
    pub fn symbol(&self, index: usize) -> PskSymbol {
        PskSymbol { index, value: self.points[index] }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// `e^{iπ/M}`, the rotation marking an embedded zero.
    pub fn offset(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.phase_offset())
    }

    pub fn phase_offset(&self) -> f64 {
        PI / self.order() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BandKind {
    /// Helper band: Alice's OOK riding on Charlie's PSK.
    Cb,
    /// Alice's own band, filled by the pour.
    Ab,
    /// Mimic band: a pair member imitating the helper band.
    Hb,
    Normal,
}

impl BandKind {
    pub fn label(self) -> &'static str {
        match self {
            BandKind::Cb => "CB",
            BandKind::Ab => "AB",
            BandKind::Hb => "HB",
            BandKind::Normal => "NORMAL",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotPhase {
    K,
    Nk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Primary,
    Helper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    Bit(u8),
    Symbol(PskSymbol),
}

impl Payload {
    #[inline]
    fn value(self) -> Complex64 {
        match self {
            Payload::Bit(b) => Complex64::new(b as f64, 0.0),
            Payload::Symbol(s) => s.value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub source: Source,
    pub amplitude: f64,
    pub payload: Payload,
    pub phase: f64,
}

impl Contribution {
    #[inline]
    pub fn value(&self) -> Complex64 {
        let v = self.payload.value() * self.amplitude;
        if self.phase == 0.0 {
            v
        } else {
            v * Complex64::from_polar(1.0, self.phase)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotTransmission {
    pub band: BandKind,
    pub slot: SlotPhase,
    pub contributions: ArrayVec<Contribution, 2>,
}

impl SlotTransmission {
    fn new(band: BandKind, slot: SlotPhase) -> Self {
        SlotTransmission { band, slot, contributions: ArrayVec::new() }
    }

    fn push(&mut self, source: Source, amplitude: f64, payload: Payload, phase: f64) {
        if let Payload::Bit(0) = payload {
            return;
        }
        self.contributions.push(Contribution { source, amplitude, payload, phase });
    }

    /// Total transmitted energy, summed over contributions.
    pub fn energy(&self) -> f64 {
        self.contributions.iter().map(|c| c.value().norm_sqr()).sum()
    }

    pub fn amplitude_of(&self, source: Source) -> Option<f64> {
        self.contributions.iter().find(|c| c.source == source).map(|c| c.amplitude)
    }

    /// Noise-free sample seen through the given per-source channels.
    #[inline]
    pub fn through(&self, h_primary: Complex64, h_helper: Complex64) -> Complex64 {
        self.contributions
            .iter()
            .map(|c| {
                let h = match c.source {
                    Source::Primary => h_primary,
                    Source::Helper => h_helper,
                };
                c.value() * h
            })
            .sum()
    }

    /// Amplitude/phase program with payloads erased, for structural comparisons.
    pub fn program(&self) -> Vec<(Source, f64, f64)> {
        self.contributions.iter().map(|c| (c.source, c.amplitude, c.phase)).collect()
    }
}

/// Helper band, slot `k`: Alice's bit on `√(1-α)` plus Charlie's symbol on `√α`.
pub fn tx_cb_slot_k(x: u8, z: PskSymbol, alpha: f64) -> SlotTransmission {
    let mut t = SlotTransmission::new(BandKind::Cb, SlotPhase::K);
    t.push(Source::Primary, alpha.sqrt(), Payload::Symbol(z), 0.0);
    t.push(Source::Helper, (1.0 - alpha).sqrt(), Payload::Bit(x), 0.0);
    t
}

/// Helper band, slot `n+k`: Charlie embeds his decision `x̂`.
pub fn tx_cb_slot_nk(x_hat: u8, z: PskSymbol, alpha: f64, order: usize) -> SlotTransmission {
    let mut t = SlotTransmission::new(BandKind::Cb, SlotPhase::Nk);
    push_embedded(&mut t, x_hat, z, alpha, order);
    t
}

fn push_embedded(t: &mut SlotTransmission, bit: u8, z: PskSymbol, alpha: f64, order: usize) {
    if bit == 0 {
        t.push(Source::Primary, (2.0 - alpha).sqrt(), Payload::Symbol(z), PI / order as f64);
    } else {
        t.push(Source::Primary, 1.0, Payload::Symbol(z), 0.0);
    }
}

/// Alice's band, slot `k`: Alice and Charlie both pour on keystream bit `a`.
pub fn tx_ab_slot_k(a: u8, alpha: f64) -> SlotTransmission {
    let mut t = SlotTransmission::new(BandKind::Ab, SlotPhase::K);
    t.push(Source::Primary, alpha.sqrt(), Payload::Bit(a), 0.0);
    t.push(Source::Helper, (1.0 - alpha).sqrt(), Payload::Bit(a), 0.0);
    t
}

/// Alice's band, slot `n+k`: Alice alone sends unit-energy OOK; Charlie is silent.
pub fn tx_ab_slot_nk(b: u8) -> SlotTransmission {
    let mut t = SlotTransmission::new(BandKind::Ab, SlotPhase::Nk);
    t.push(Source::Primary, 1.0, Payload::Bit(b), 0.0);
    t
}

/// Mimic band, slot `k`: Tom pours on `p`, Henry sends his symbol.
pub fn tx_hb_slot_k(p: u8, u: PskSymbol, alpha: f64) -> SlotTransmission {
    let mut t = tx_cb_slot_k(p, u, alpha);
    t.band = BandKind::Hb;
    t
}

/// Mimic band, slot `n+k`: Henry applies the helper's embedding rule to `p`.
pub fn tx_hb_slot_nk(p: u8, u: PskSymbol, alpha: f64, order: usize) -> SlotTransmission {
    let mut t = SlotTransmission::new(BandKind::Hb, SlotPhase::Nk);
    push_embedded(&mut t, p, u, alpha, order);
    t
}

pub fn tx_normal(s: PskSymbol, slot: SlotPhase) -> SlotTransmission {
    let mut t = SlotTransmission::new(BandKind::Normal, slot);
    t.push(Source::Primary, 1.0, Payload::Symbol(s), 0.0);
    t
}

/// One receiver's view of a slot pair: samples plus the channel to the
/// band's primary transmitter in each slot (known to that receiver).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotPair {
    pub y_k: Complex64,
    pub y_nk: Complex64,
    pub h_k: Complex64,
    pub h_nk: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observers {
    pub bob: bool,
    pub dave: bool,
}

impl Observers {
    pub const ALL: Observers = Observers { bob: true, dave: true };
    pub const BOB: Observers = Observers { bob: true, dave: false };
    pub const DAVE: Observers = Observers { bob: false, dave: true };
}

/// Per-frame inputs other than randomness.
#[derive(Debug, Clone, Copy)]
pub struct FrameInputs<'a> {
    pub band: BandKind,
    /// Alice's data bits (CB), pour keystream `a` (AB) or mimic keystream `p` (HB).
    pub bits: &'a [u8],
    /// Alice's locally formed slot-`n+k` OOK bits (AB only).
    pub aux_bits: &'a [u8],
    /// Charlie's decisions `x̂` (CB only).
    pub relay_decisions: Option<&'a [u8]>,
}

/// Independent generators for ground-truth symbols and each receiver's
/// channels and noise. Keeping them apart lets a caller skip a receiver
/// without shifting the draws seen by the others.
#[derive(Debug, Clone)]
pub struct FrameRngs {
    pub truth: SimRng,
    pub bob: SimRng,
    pub dave: SimRng,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameObservation {
    pub band: BandKind,
    pub half_frame: usize,
    /// The OOK bit of slot `k` (`x`, `a` or `p`; zero on normal bands).
    pub bits: Vec<u8>,
    /// Bit steering slot `n+k` (`x̂` on CB, `p` on HB, Alice's OOK on AB).
    pub embedded: Vec<u8>,
    pub sym_k: Vec<usize>,
    pub sym_nk: Vec<usize>,
    pub bob: Vec<SlotPair>,
    pub dave: Vec<SlotPair>,
}

impl FrameObservation {
    pub fn frame_len(&self) -> usize {
        2 * self.half_frame
    }
}

/// The two slot transmissions of pair `k`, driven entirely by inputs.
#[inline]
pub fn slot_pair_programs(
    band: BandKind,
    bit: u8,
    embedded: u8,
    zk: PskSymbol,
    znk: PskSymbol,
    alpha: f64,
    order: usize,
) -> (SlotTransmission, SlotTransmission) {
    match band {
        BandKind::Cb => (tx_cb_slot_k(bit, zk, alpha), tx_cb_slot_nk(embedded, znk, alpha, order)),
        BandKind::Hb => (tx_hb_slot_k(bit, zk, alpha), tx_hb_slot_nk(embedded, znk, alpha, order)),
        BandKind::Ab => (tx_ab_slot_k(bit, alpha), tx_ab_slot_nk(embedded)),
        BandKind::Normal => (tx_normal(zk, SlotPhase::K), tx_normal(znk, SlotPhase::Nk)),
    }
}

/// Draws channels and noise for one receiver and one slot pair.
///
/// Always consumes six complex Gaussian draws so that the stream stays
/// aligned across operating points.
#[inline]
pub fn receive_pair<R: Rng + ?Sized>(rng: &mut R, tk: &SlotTransmission, tnk: &SlotTransmission, n0: f64) -> SlotPair {
    let h_k = cscg(rng, 1.0);
    let g_k = cscg(rng, 1.0);
    let w_k = cscg(rng, n0);
    let h_nk = cscg(rng, 1.0);
    let g_nk = cscg(rng, 1.0);
    let w_nk = cscg(rng, n0);
    SlotPair { y_k: tk.through(h_k, g_k) + w_k, y_nk: tnk.through(h_nk, g_nk) + w_nk, h_k, h_nk }
}

/// Builds a full `2n`-slot observation of one band.
pub fn synthesize_frame(
    cfg: &NetworkConfig,
    constellation: &Constellation,
    inputs: &FrameInputs<'_>,
    rngs: &mut FrameRngs,
    observers: Observers,
) -> Result<FrameObservation> {
    let n = cfg.half_frame;
    let alpha = cfg.alpha;
    let m = constellation.order();

    let bits: Vec<u8> = match inputs.band {
        BandKind::Normal => vec![0; n],
        _ => {
            check_len(n, inputs.bits.len())?;
            inputs.bits.to_vec()
        }
    };
    let embedded: Vec<u8> = match inputs.band {
        BandKind::Cb => {
            let d = inputs.relay_decisions.ok_or(NcmsError::MissingRelayDecisions)?;
            check_len(n, d.len())?;
            d.to_vec()
        }
        BandKind::Hb => bits.clone(),
        BandKind::Ab => {
            check_len(n, inputs.aux_bits.len())?;
            inputs.aux_bits.to_vec()
        }
        BandKind::Normal => vec![0; n],
    };

    let mut obs = FrameObservation {
        band: inputs.band,
        half_frame: n,
        bits,
        embedded,
        sym_k: Vec::with_capacity(n),
        sym_nk: Vec::with_capacity(n),
        bob: Vec::with_capacity(if observers.bob { n } else { 0 }),
        dave: Vec::with_capacity(if observers.dave { n } else { 0 }),
    };
    for k in 0..n {
        let sk = random_index(&mut rngs.truth, m);
        let snk = random_index(&mut rngs.truth, m);
        obs.sym_k.push(sk);
        obs.sym_nk.push(snk);
        let (tk, tnk) = slot_pair_programs(
            inputs.band,
            obs.bits[k],
            obs.embedded[k],
            constellation.symbol(sk),
            constellation.symbol(snk),
            alpha,
            m,
        );
        if observers.bob {
            obs.bob.push(receive_pair(&mut rngs.bob, &tk, &tnk, cfg.noise_power));
        }
        if observers.dave {
            obs.dave.push(receive_pair(&mut rngs.dave, &tk, &tnk, cfg.noise_power));
        }
    }
    Ok(obs)
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(NcmsError::FrameLength { expected, got });
    }
    Ok(())
}

/// `n` fair bits from a simulation stream.
pub fn draw_bits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| random_bit(rng)).collect()
}

/// Writes one comma-separated record per slot.
pub fn write_frame_dump<W: Write>(obs: &FrameObservation, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["band", "slot", "bit", "embedded", "symbol", "bob_re", "bob_im", "dave_re", "dave_im"])
        .map_err(csv_err)?;
    let n = obs.half_frame;
    for k in 0..n {
        for (slot, sym) in [(k, obs.sym_k[k]), (n + k, obs.sym_nk[k])] {
            let first = slot < n;
            let pick = |v: &Vec<SlotPair>| v.get(k).map(|p| if first { p.y_k } else { p.y_nk });
            let fmt = |c: Option<Complex64>, re: bool| {
                c.map(|c| format!("{:.9e}", if re { c.re } else { c.im })).unwrap_or_default()
            };
            let (b, d) = (pick(&obs.bob), pick(&obs.dave));
            w.write_record([
                obs.band.label().to_string(),
                slot.to_string(),
                obs.bits[k].to_string(),
                obs.embedded[k].to_string(),
                sym.to_string(),
                fmt(b, true),
                fmt(b, false),
                fmt(d, true),
                fmt(d, false),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> NcmsError {
    NcmsError::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{Domain, Substreams};

    fn c4() -> Constellation {
        Constellation::new(4).unwrap()
    }

    fn rngs(seed: u64) -> FrameRngs {
        let s = Substreams::new(seed);
        FrameRngs {
            truth: s.stream(Domain::Oracle, 1),
            bob: s.stream(Domain::Oracle, 2),
            dave: s.stream(Domain::Oracle, 3),
        }
    }

    #[test]
    fn unit_modulus_points() {
        for m in [2, 4, 8, 16, 64] {
            let c = Constellation::new(m).unwrap();
            for (s, z) in c.points().iter().enumerate() {
                assert!((z.norm() - 1.0).abs() < 1e-15);
                let want = Complex64::from_polar(1.0, -2.0 * PI * s as f64 / m as f64);
                assert!((z - want).norm() < 1e-15);
            }
        }
        let c = c4();
        assert_eq!(c.point(1), Complex64::new(0.0, -1.0));
        assert_eq!(c.point(2), Complex64::new(-1.0, 0.0));
        assert!(Constellation::new(6).is_err());
    }

    #[test]
    fn cb_slot_k_examples() {
        let z = c4().symbol(2);
        let t = tx_cb_slot_k(0, z, 0.5);
        assert_eq!(t.contributions.len(), 1);
        assert!((t.amplitude_of(Source::Primary).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);

        let t = tx_cb_slot_k(1, z, 0.75);
        assert!((t.amplitude_of(Source::Helper).unwrap() - 0.5).abs() < 1e-15);
        assert!((t.amplitude_of(Source::Primary).unwrap() - 0.8660254).abs() < 1e-7);

        let t = tx_cb_slot_k(1, z, 1.0 - 1e-12);
        assert!(t.amplitude_of(Source::Helper).unwrap() < 1e-5);
    }

    #[test]
    fn cb_slot_nk_examples() {
        let z = c4().symbol(3);
        let t = tx_cb_slot_nk(1, z, 0.9986, 4);
        assert_eq!(t.program(), vec![(Source::Primary, 1.0, 0.0)]);
        let t = tx_cb_slot_nk(0, z, 0.9986, 4);
        let (_, a, ph) = t.program()[0];
        assert!((a - 1.00070).abs() < 5e-6);
        assert!((ph - std::f64::consts::FRAC_PI_4).abs() < 5e-6);
        let eps = 1e-3;
        let (_, a, _) = tx_cb_slot_nk(0, z, 1.0 - eps, 4).program()[0];
        assert!((a - (1.0 + eps).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ab_slot_k_examples() {
        assert!(tx_ab_slot_k(0, 0.9986).contributions.is_empty());
        let t = tx_ab_slot_k(1, 0.9986);
        assert!((t.amplitude_of(Source::Primary).unwrap() - 0.99930).abs() < 5e-6);
        assert!((t.amplitude_of(Source::Helper).unwrap() - 0.03742).abs() < 5e-6);
        assert!((t.energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hb_mirrors_cb() {
        let c = c4();
        for alpha in [0.3, 0.5, 0.9986] {
            for b in 0..2 {
                for s in 0..4 {
                    let z = c.symbol(s);
                    let (cb, hb) = (tx_cb_slot_k(b, z, alpha), tx_hb_slot_k(b, z, alpha));
                    assert_eq!(cb.contributions, hb.contributions);
                    let (cb, hb) = (tx_cb_slot_nk(b, z, alpha, 4), tx_hb_slot_nk(b, z, alpha, 4));
                    assert_eq!(cb.contributions, hb.contributions);
                }
            }
        }
        let t = tx_hb_slot_k(1, c.symbol(0), 0.5);
        assert!((t.amplitude_of(Source::Helper).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
        assert!((t.amplitude_of(Source::Primary).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
        assert_eq!(tx_hb_slot_k(0, c.symbol(0), 0.5).contributions.len(), 1);
    }

    #[test]
    fn slot_nk_energy_is_one_or_two_minus_alpha() {
        let c = c4();
        for alpha in [0.1, 0.9, 0.999] {
            assert!((tx_cb_slot_nk(1, c.symbol(1), alpha, 4).energy() - 1.0).abs() < 1e-12);
            assert!((tx_cb_slot_nk(0, c.symbol(1), alpha, 4).energy() - (2.0 - alpha)).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_cb_frame_matches_program() {
        let mut cfg = NetworkConfig { alpha: 0.5, half_frame: 16, frame_len: 32, ..Default::default() };
        cfg.noise_power = 0.0;
        let c = c4();
        let mut r = rngs(5);
        let x = draw_bits(&mut r.truth, 16);
        let xh = x.clone();
        let inputs = FrameInputs { band: BandKind::Cb, bits: &x, aux_bits: &[], relay_decisions: Some(&xh) };
        let mut replay = r.clone();
        let obs = synthesize_frame(&cfg, &c, &inputs, &mut r, Observers::BOB).unwrap();
        for (k, &xk) in x.iter().enumerate() {
            let sk = random_index(&mut replay.truth, 4);
            let _ = random_index(&mut replay.truth, 4);
            let h_k = cscg(&mut replay.bob, 1.0);
            let g_k = cscg(&mut replay.bob, 1.0);
            for _ in 0..4 {
                cscg(&mut replay.bob, 1.0);
            }
            let want = 0.5f64.sqrt() * g_k * xk as f64 + 0.5f64.sqrt() * c.point(sk) * h_k;
            assert_eq!(obs.sym_k[k], sk);
            assert!((obs.bob[k].y_k - want).norm() < 1e-15);
        }
        assert!(obs.dave.is_empty());
    }

    #[test]
    fn cb_requires_relay_decisions() {
        let cfg = NetworkConfig::default();
        let x = vec![0u8; cfg.half_frame];
        let inputs = FrameInputs { band: BandKind::Cb, bits: &x, aux_bits: &[], relay_decisions: None };
        let err = synthesize_frame(&cfg, &c4(), &inputs, &mut rngs(1), Observers::ALL).unwrap_err();
        assert!(matches!(err, NcmsError::MissingRelayDecisions));
        let short = vec![0u8; 3];
        let inputs = FrameInputs { band: BandKind::Cb, bits: &x, aux_bits: &[], relay_decisions: Some(&short) };
        assert!(synthesize_frame(&cfg, &c4(), &inputs, &mut rngs(1), Observers::ALL).is_err());
    }

    fn slot_variances(band: BandKind, bits: &[u8], frames: usize) -> (f64, f64) {
        let cfg = NetworkConfig::default();
        let c = c4();
        let mut r = rngs(11);
        let (mut sk, mut snk, mut cnt) = (0.0, 0.0, 0usize);
        for _ in 0..frames {
            let inputs = FrameInputs { band, bits, aux_bits: &[], relay_decisions: None };
            let obs = synthesize_frame(&cfg, &c, &inputs, &mut r, Observers::DAVE).unwrap();
            for p in &obs.dave {
                sk += p.y_k.norm_sqr();
                snk += p.y_nk.norm_sqr();
                cnt += 1;
            }
        }
        (sk / cnt as f64, snk / cnt as f64)
    }

    #[test]
    fn normal_band_variance() {
        let n0 = NetworkConfig::default().noise_power;
        let (vk, vnk) = slot_variances(BandKind::Normal, &[], 1000);
        // 10^5 exponential samples with mean 1+N0: 4 standard errors ≈ 0.0127
        assert!((vk - (1.0 + n0)).abs() < 0.0127, "{vk}");
        assert!((vnk - (1.0 + n0)).abs() < 0.0127, "{vnk}");
    }

    #[test]
    fn hb_all_ones_slot_nk_variance() {
        let cfg = NetworkConfig::default();
        let ones = vec![1u8; cfg.half_frame];
        let (vk, vnk) = slot_variances(BandKind::Hb, &ones, 1000);
        assert!((vnk - (1.0 + cfg.noise_power)).abs() < 0.0127, "{vnk}");
        // slot k carries α + (1-α) from both transmitters
        assert!((vk - (1.0 + cfg.noise_power)).abs() < 0.0127, "{vk}");
    }

    #[test]
    fn frame_dump_has_one_row_per_slot() {
        let cfg = NetworkConfig { half_frame: 4, frame_len: 8, ..Default::default() };
        let inputs = FrameInputs { band: BandKind::Normal, bits: &[], aux_bits: &[], relay_decisions: None };
        let obs = synthesize_frame(&cfg, &c4(), &inputs, &mut rngs(2), Observers::ALL).unwrap();
        let mut buf = Vec::new();
        write_frame_dump(&obs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 8);
        assert!(text.lines().nth(1).unwrap().starts_with("NORMAL,0,"));
    }
}
