//! Monte Carlo estimate of the network-average decoding error.
//!
//! One trial is one slot pair on each user class: the helper band (Alice's
//! bit plus both of the helper's symbols), a mimic band and a normal band.
//! Bands of one class are i.i.d., so one representative per class gives an
//! unbiased estimate of the class average.
//!
//! Trials are grouped into frames of `n` slot pairs. Frame `f` draws from
//! substreams indexed by `f` only, so two runs with the same seed see the
//! same channels, noise and symbols at every `alpha` (common random numbers)
//! and results do not depend on the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::bound::pe_th_total;
use crate::decoders::{decode_coherent_psk, decode_disjoint, decode_hb_slot_k, decode_hb_slot_nk, end_to_end_bit};
use crate::error::{NcmsError, Result};
use crate::keystream::derive_bits;
use crate::network::NetworkConfig;
use crate::relay::{relay_decisions, CrossoverProfile};
use crate::sampling::{Domain, Substreams};
use crate::waveforms::{draw_bits, synthesize_frame, BandKind, Constellation, FrameInputs, FrameRngs, Observers};

const Z95: f64 = 1.959_963_984_540_054;

/// How per-class error events are combined into one rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EventWeighting {
    /// Mean over the events of a class (helper: bit, `z_k`, `z_{n+k}`; others: both slots).
    #[default]
    Average,
    /// Sum of the events of a class per slot pair.
    Sum,
}

impl EventWeighting {
    fn divisors(self) -> (f64, f64, f64) {
        match self {
            EventWeighting::Average => (3.0, 2.0, 2.0),
            EventWeighting::Sum => (1.0, 1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeOptions {
    pub trials: u64,
    pub weighting: EventWeighting,
    /// Below this many error events in a class a warning is attached.
    pub min_errors: u64,
}

impl PeOptions {
    pub fn new(trials: u64) -> Self {
        PeOptions { trials, weighting: EventWeighting::Average, min_errors: 10 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub bit: u64,
    pub z_k: u64,
    pub z_nk: u64,
    pub mimic_k: u64,
    pub mimic_nk: u64,
    pub normal_k: u64,
    pub normal_nk: u64,
    /// Helper decisions that differed from Alice's bit.
    pub relay_flips: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Halfwidths {
    pub ac: f64,
    pub h: f64,
    pub nh: f64,
    pub pe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub pe_ac: f64,
    pub pe_h: f64,
    pub pe_nh: f64,
    pub pe: f64,
    pub trials: u64,
    /// 95% half-widths.
    pub ci_halfwidth: Halfwidths,
    pub events: EventCounts,
    pub weighting: EventWeighting,
    /// Closed-form bound at the same operating point.
    pub pe_th: f64,
    pub warnings: Vec<String>,
}

impl ErrorStats {
    /// Network average recomputed from the class rates.
    pub fn aggregate(&self, users: usize, mimic_users: usize) -> f64 {
        aggregate(self.pe_ac, self.pe_h, self.pe_nh, users, mimic_users)
    }
}

pub fn aggregate(pe_ac: f64, pe_h: f64, pe_nh: f64, users: usize, mimic_users: usize) -> f64 {
    let normal = users as f64 - mimic_users as f64 - 2.0;
    (pe_ac + mimic_users as f64 * pe_h + normal * pe_nh) / users as f64
}

// Integer accumulators of per-trial error counts and their squares.
#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    trials: u64,
    ev: EventCounts,
    sq_ac: u64,
    sq_h: u64,
    sq_nh: u64,
    cross_ac_h: u64,
    cross_ac_nh: u64,
    cross_h_nh: u64,
}

impl Acc {
    fn merge(mut self, o: Acc) -> Acc {
        self.trials += o.trials;
        let (a, b) = (&mut self.ev, o.ev);
        a.bit += b.bit;
        a.z_k += b.z_k;
        a.z_nk += b.z_nk;
        a.mimic_k += b.mimic_k;
        a.mimic_nk += b.mimic_nk;
        a.normal_k += b.normal_k;
        a.normal_nk += b.normal_nk;
        a.relay_flips += b.relay_flips;
        self.sq_ac += o.sq_ac;
        self.sq_h += o.sq_h;
        self.sq_nh += o.sq_nh;
        self.cross_ac_h += o.cross_ac_h;
        self.cross_ac_nh += o.cross_ac_nh;
        self.cross_h_nh += o.cross_h_nh;
        self
    }

    fn record(&mut self, ac: u64, h: u64, nh: u64) {
        self.trials += 1;
        self.sq_ac += ac * ac;
        self.sq_h += h * h;
        self.sq_nh += nh * nh;
        self.cross_ac_h += ac * h;
        self.cross_ac_nh += ac * nh;
        self.cross_h_nh += h * nh;
    }
}

/// Shared secret for keystreams, derived from the run seed.
pub fn key_secret(seed: u64) -> [u8; 8] {
    seed.to_le_bytes()
}

/// Estimates `Pe` for `cfg` at its own `alpha`.
pub fn simulate_pe(cfg: &NetworkConfig, opts: &PeOptions, streams: &Substreams) -> Result<ErrorStats> {
    let cfg = cfg.validate()?;
    if opts.trials == 0 {
        return Err(NcmsError::arg("trials", "at least one trial is required"));
    }
    let c = Constellation::new(cfg.psk_order)?;
    let prof = CrossoverProfile::for_config(&cfg)?;
    let n = cfg.half_frame as u64;
    let frames = opts.trials.div_ceil(n);

    let acc = (0..frames)
        .into_par_iter()
        .map(|f| {
            let take = (opts.trials - f * n).min(n) as usize;
            simulate_frame(&cfg, &c, &prof, streams, f, take)
        })
        .try_reduce(Acc::default, |a, b| Ok(a.merge(b)))?;

    Ok(finish(&cfg, opts, &prof, acc))
}

fn frame_rngs(streams: &Substreams, domain: Domain, f: u64) -> FrameRngs {
    FrameRngs {
        truth: streams.stream2(domain, f, 0),
        bob: streams.stream2(domain, f, 2),
        dave: streams.stream2(domain, f, 4),
    }
}

fn simulate_frame(
    cfg: &NetworkConfig,
    c: &Constellation,
    prof: &CrossoverProfile,
    streams: &Substreams,
    f: u64,
    take: usize,
) -> Result<Acc> {
    let n = cfg.half_frame;
    let (alpha, n0) = (cfg.alpha, cfg.noise_power);
    let secret = key_secret(streams.master());

    // helper band
    let x = draw_bits(&mut streams.stream2(Domain::HelperBand, f, 3), n);
    let x_hat = relay_decisions(&x, cfg, prof.tau, &mut streams.stream2(Domain::HelperBand, f, 1));
    let cb = synthesize_frame(
        cfg,
        c,
        &FrameInputs { band: BandKind::Cb, bits: &x, aux_bits: &[], relay_decisions: Some(&x_hat) },
        &mut frame_rngs(streams, Domain::HelperBand, f),
        Observers::BOB,
    )?;

    // one mimic band
    let p = derive_bits(&secret, &format!("mimic-{f}-p"), n)?.bits;
    let hb = synthesize_frame(
        cfg,
        c,
        &FrameInputs { band: BandKind::Hb, bits: &p, aux_bits: &[], relay_decisions: None },
        &mut frame_rngs(streams, Domain::MimicBand, f),
        Observers::BOB,
    )?;

    // one normal band
    let nb = synthesize_frame(
        cfg,
        c,
        &FrameInputs { band: BandKind::Normal, bits: &[], aux_bits: &[], relay_decisions: None },
        &mut frame_rngs(streams, Domain::NormalBand, f),
        Observers::BOB,
    )?;

    let mut acc = Acc::default();
    for k in 0..take {
        let d = decode_disjoint(&cb.bob[k], alpha, c, n0, prof);
        let e_bit = end_to_end_bit(x[k], x_hat[k], d.r_hat) as u64;
        let e_zk = (d.z_hat_k != cb.sym_k[k]) as u64;
        let e_znk = (d.z_hat_nk != cb.sym_nk[k]) as u64;

        let ph = hb.bob[k];
        let e_hk = (decode_hb_slot_k(ph.y_k, p[k], ph.h_k, alpha, c, n0).index != hb.sym_k[k]) as u64;
        let e_hnk = (decode_hb_slot_nk(ph.y_nk, p[k], ph.h_nk, alpha, c, n0).index != hb.sym_nk[k]) as u64;

        let pn = nb.bob[k];
        let e_nk = (decode_coherent_psk(pn.y_k, pn.h_k, c, n0).index != nb.sym_k[k]) as u64;
        let e_nnk = (decode_coherent_psk(pn.y_nk, pn.h_nk, c, n0).index != nb.sym_nk[k]) as u64;

        let ev = &mut acc.ev;
        ev.bit += e_bit;
        ev.z_k += e_zk;
        ev.z_nk += e_znk;
        ev.mimic_k += e_hk;
        ev.mimic_nk += e_hnk;
        ev.normal_k += e_nk;
        ev.normal_nk += e_nnk;
        ev.relay_flips += (x[k] != x_hat[k]) as u64;
        acc.record(e_bit + e_zk + e_znk, e_hk + e_hnk, e_nk + e_nnk);
    }
    Ok(acc)
}

fn finish(cfg: &NetworkConfig, opts: &PeOptions, prof: &CrossoverProfile, acc: Acc) -> ErrorStats {
    let t = acc.trials as f64;
    let (da, dh, dn) = opts.weighting.divisors();
    let ev = acc.ev;
    let s_ac = (ev.bit + ev.z_k + ev.z_nk) as f64;
    let s_h = (ev.mimic_k + ev.mimic_nk) as f64;
    let s_nh = (ev.normal_k + ev.normal_nk) as f64;

    let pe_ac = s_ac / (da * t);
    let pe_h = s_h / (dh * t);
    let pe_nh = s_nh / (dn * t);
    let pe = aggregate(pe_ac, pe_h, pe_nh, cfg.users, cfg.mimic_users);

    // sample (co)variances of the per-trial class counts
    let cov = |sxy: u64, sx: f64, sy: f64| {
        if acc.trials < 2 {
            return 0.0;
        }
        (sxy as f64 - sx * sy / t) / (t - 1.0)
    };
    let v_ac = cov(acc.sq_ac, s_ac, s_ac);
    let v_h = cov(acc.sq_h, s_h, s_h);
    let v_nh = cov(acc.sq_nh, s_nh, s_nh);
    let c_ah = cov(acc.cross_ac_h, s_ac, s_h);
    let c_an = cov(acc.cross_ac_nh, s_ac, s_nh);
    let c_hn = cov(acc.cross_h_nh, s_h, s_nh);

    let l = cfg.users as f64;
    let (wa, wh, wn) = (1.0 / (da * l), cfg.mimic_users as f64 / (dh * l), cfg.normal_users() as f64 / (dn * l));
    let v_pe =
        wa * wa * v_ac + wh * wh * v_h + wn * wn * v_nh + 2.0 * (wa * wh * c_ah + wa * wn * c_an + wh * wn * c_hn);
    let hw = |v: f64, d: f64| Z95 * (v.max(0.0) / t).sqrt() / d;

    let mut warnings = Vec::new();
    for (name, count) in [("helper band", s_ac), ("mimic bands", s_h), ("normal bands", s_nh)] {
        if (count as u64) < opts.min_errors {
            warnings.push(format!(
                "only {count} error events on {name} over {} trials; confidence interval unreliable",
                acc.trials
            ));
        }
    }

    ErrorStats {
        pe_ac,
        pe_h,
        pe_nh,
        pe,
        trials: acc.trials,
        ci_halfwidth: Halfwidths { ac: hw(v_ac, da), h: hw(v_h, dh), nh: hw(v_nh, dn), pe: hw(v_pe, 1.0) },
        events: ev,
        weighting: opts.weighting,
        pe_th: pe_th_total(cfg, prof),
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(snr: f64, alpha: f64) -> NetworkConfig {
        NetworkConfig { snr_db: snr, alpha, ..Default::default() }.validate().unwrap()
    }

    #[test]
    fn aggregation_identity() {
        let s = simulate_pe(&cfg(20.0, 0.99), &PeOptions::new(3000), &Substreams::new(1)).unwrap();
        assert_eq!(s.trials, 3000);
        assert_eq!(s.pe, s.aggregate(42, 10));
        for r in [s.pe_ac, s.pe_h, s.pe_nh, s.pe] {
            assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let c = cfg(25.0, 0.995);
        let a = simulate_pe(&c, &PeOptions::new(2000), &Substreams::new(7)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| simulate_pe(&c, &PeOptions::new(2000), &Substreams::new(7)).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn vanishing_noise() {
        let s = simulate_pe(&cfg(60.0, 0.999), &PeOptions::new(10_000), &Substreams::new(2)).unwrap();
        assert!(s.pe < 1e-3, "{}", s.pe);
    }

    #[test]
    fn weighting_changes_scale_only() {
        let c = cfg(20.0, 0.99);
        let avg = simulate_pe(&c, &PeOptions::new(2000), &Substreams::new(3)).unwrap();
        let mut o = PeOptions::new(2000);
        o.weighting = EventWeighting::Sum;
        let sum = simulate_pe(&c, &o, &Substreams::new(3)).unwrap();
        assert_eq!(avg.events, sum.events);
        assert!((sum.pe_ac - 3.0 * avg.pe_ac).abs() < 1e-15);
        assert!((sum.pe_nh - 2.0 * avg.pe_nh).abs() < 1e-15);
    }

    #[test]
    fn few_errors_flagged() {
        let s = simulate_pe(&cfg(60.0, 0.999), &PeOptions::new(200), &Substreams::new(2)).unwrap();
        assert!(!s.warnings.is_empty());
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(simulate_pe(&cfg(20.0, 0.99), &PeOptions::new(0), &Substreams::new(2)).is_err());
    }
}
