//! Decision rules at Bob.
//!
//! Every decoder is an explicit hypothesis enumeration followed by an argmax,
//! so hypothesis counts can be checked directly. Enumeration runs symbol
//! indices in increasing order with the bit innermost, and only a strictly
//! larger log-density replaces the incumbent: ties go to the smallest symbol
//! index, then to bit 0.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::relay::CrossoverProfile;
use crate::waveforms::{Constellation, PskSymbol, SlotPair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub bit: Option<u8>,
    pub symbol: usize,
    pub symbol_nk: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisLikelihood {
    pub hypothesis: Hypothesis,
    pub log_density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CbDecision {
    pub r_hat: u8,
    pub z_hat_k: usize,
    pub z_hat_nk: usize,
}

/// Log-density of `CN(mean, var)` at `y`.
#[inline]
pub fn cn_log_density(y: Complex64, mean: Complex64, var: f64) -> f64 {
    -(y - mean).norm_sqr() / var - (PI * var).ln()
}

/// First hypothesis with the largest log-density.
pub fn argmax(hyps: impl Iterator<Item = HypothesisLikelihood>) -> HypothesisLikelihood {
    let mut best: Option<HypothesisLikelihood> = None;
    for h in hyps {
        match best {
            Some(b) if !(h.log_density > b.log_density) => {}
            _ => best = Some(h),
        }
    }
    best.expect("hypothesis set is never empty")
}

fn hyp(bit: Option<u8>, symbol: usize, symbol_nk: Option<usize>, log_density: f64) -> HypothesisLikelihood {
    HypothesisLikelihood { hypothesis: Hypothesis { bit, symbol, symbol_nk }, log_density }
}

/// Helper band slot `k`: `2M` hypotheses over `(s, x)`.
pub fn cb_slot_k_hypotheses<'a>(
    y: Complex64,
    h: Complex64,
    alpha: f64,
    c: &'a Constellation,
    n0: f64,
) -> impl Iterator<Item = HypothesisLikelihood> + 'a {
    let amp = alpha.sqrt();
    let var1 = n0 + (1.0 - alpha);
    (0..c.order()).flat_map(move |s| {
        let mean = amp * c.point(s) * h;
        [(0u8, n0), (1u8, var1)].into_iter().map(move |(x, var)| hyp(Some(x), s, None, cn_log_density(y, mean, var)))
    })
}

pub fn decode_cb_slot_k(y: Complex64, h: Complex64, alpha: f64, c: &Constellation, n0: f64) -> PskSymbol {
    c.symbol(argmax(cb_slot_k_hypotheses(y, h, alpha, c, n0)).hypothesis.symbol)
}

/// Mean of slot `n+k` for embedded bit `r`.
#[inline]
fn embedded_mean(r: u8, z: Complex64, h: Complex64, alpha: f64, rot: Complex64) -> Complex64 {
    if r == 0 {
        (2.0 - alpha).sqrt() * rot * z * h
    } else {
        z * h
    }
}

/// Helper band slot `n+k`: `2M` hypotheses over `(s, r)` with decision priors.
pub fn cb_slot_nk_hypotheses<'a>(
    y: Complex64,
    h: Complex64,
    alpha: f64,
    c: &'a Constellation,
    n0: f64,
    prof: &CrossoverProfile,
) -> impl Iterator<Item = HypothesisLikelihood> + 'a {
    let rot = c.offset();
    let ln_prior = [prof.decision_prior(0).ln(), prof.decision_prior(1).ln()];
    (0..c.order()).flat_map(move |s| {
        let z = c.point(s);
        (0..2u8).map(move |r| {
            let mean = embedded_mean(r, z, h, alpha, rot);
            hyp(Some(r), s, None, cn_log_density(y, mean, n0) + ln_prior[r as usize])
        })
    })
}

pub fn decode_cb_slot_nk(
    y: Complex64,
    h: Complex64,
    alpha: f64,
    c: &Constellation,
    n0: f64,
    prof: &CrossoverProfile,
) -> (u8, PskSymbol) {
    let best = argmax(cb_slot_nk_hypotheses(y, h, alpha, c, n0, prof)).hypothesis;
    (best.bit.unwrap_or(0), c.symbol(best.symbol))
}

/// Disjoint decoder: slots `k` and `n+k` decided separately.
pub fn decode_disjoint(pair: &SlotPair, alpha: f64, c: &Constellation, n0: f64, prof: &CrossoverProfile) -> CbDecision {
    let zk = decode_cb_slot_k(pair.y_k, pair.h_k, alpha, c, n0);
    let (r, znk) = decode_cb_slot_nk(pair.y_nk, pair.h_nk, alpha, c, n0, prof);
    CbDecision { r_hat: r, z_hat_k: zk.index, z_hat_nk: znk.index }
}

/// True when Bob's bit estimate differs from Alice's bit.
///
/// The helper's decision only enters through what Bob recovered: a crossover
/// followed by a correct detection of the embedded bit is an error, two
/// mistakes in a row cancel.
#[inline]
pub fn end_to_end_bit(x_true: u8, _x_hat_charlie: u8, r_hat_bob: u8) -> bool {
    r_hat_bob != x_true
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Joint MAP over `(x, s_k, s_nk)`: `2M²` hypotheses. Slot `n+k` is a
/// mixture over the helper's decision weighted by `P(x̂ | x)`.
pub fn jmap_hypotheses<'a>(
    pair: SlotPair,
    alpha: f64,
    c: &'a Constellation,
    n0: f64,
    prof: CrossoverProfile,
) -> impl Iterator<Item = HypothesisLikelihood> + 'a {
    let m = c.order();
    let rot = c.offset();
    let amp = alpha.sqrt();
    (0..m).flat_map(move |sk| {
        let mean_k = amp * c.point(sk) * pair.h_k;
        (0..m).flat_map(move |snk| {
            let z = c.point(snk);
            let l0 = cn_log_density(pair.y_nk, embedded_mean(0, z, pair.h_nk, alpha, rot), n0);
            let l1 = cn_log_density(pair.y_nk, embedded_mean(1, z, pair.h_nk, alpha, rot), n0);
            (0..2u8).map(move |x| {
                let var = n0 + x as f64 * (1.0 - alpha);
                let lk = cn_log_density(pair.y_k, mean_k, var);
                let lnk = log_add(prof.transition(x, 0).ln() + l0, prof.transition(x, 1).ln() + l1);
                hyp(Some(x), sk, Some(snk), lk + lnk)
            })
        })
    })
}

pub fn decode_jmap_reference(
    pair: &SlotPair,
    alpha: f64,
    c: &Constellation,
    n0: f64,
    prof: &CrossoverProfile,
) -> CbDecision {
    let best = argmax(jmap_hypotheses(*pair, alpha, c, n0, *prof)).hypothesis;
    CbDecision { r_hat: best.bit.unwrap_or(0), z_hat_k: best.symbol, z_hat_nk: best.symbol_nk.unwrap_or(0) }
}

/// Mimic band slot `k`: `M` hypotheses, the pour treated as Gaussian interference.
pub fn hb_slot_k_hypotheses<'a>(
    y: Complex64,
    p: u8,
    h: Complex64,
    alpha: f64,
    c: &'a Constellation,
    n0: f64,
) -> impl Iterator<Item = HypothesisLikelihood> + 'a {
    let amp = alpha.sqrt();
    let var = n0 + (1.0 - alpha) * p as f64;
    (0..c.order()).map(move |s| hyp(None, s, None, cn_log_density(y, amp * c.point(s) * h, var)))
}

pub fn decode_hb_slot_k(y: Complex64, p: u8, h: Complex64, alpha: f64, c: &Constellation, n0: f64) -> PskSymbol {
    c.symbol(argmax(hb_slot_k_hypotheses(y, p, h, alpha, c, n0)).hypothesis.symbol)
}

/// Mimic band slot `n+k`: `M` hypotheses on the constellation selected by `p`.
pub fn hb_slot_nk_hypotheses<'a>(
    y: Complex64,
    p: u8,
    h: Complex64,
    alpha: f64,
    c: &'a Constellation,
    n0: f64,
) -> impl Iterator<Item = HypothesisLikelihood> + 'a {
    let rot = c.offset();
    (0..c.order()).map(move |s| hyp(None, s, None, cn_log_density(y, embedded_mean(p, c.point(s), h, alpha, rot), n0)))
}

pub fn decode_hb_slot_nk(y: Complex64, p: u8, h: Complex64, alpha: f64, c: &Constellation, n0: f64) -> PskSymbol {
    c.symbol(argmax(hb_slot_nk_hypotheses(y, p, h, alpha, c, n0)).hypothesis.symbol)
}

pub fn coherent_psk_hypotheses<'a>(
    y: Complex64,
    h: Complex64,
    c: &'a Constellation,
    n0: f64,
) -> impl Iterator<Item = HypothesisLikelihood> + 'a {
    (0..c.order()).map(move |s| hyp(None, s, None, cn_log_density(y, c.point(s) * h, n0)))
}

pub fn decode_coherent_psk(y: Complex64, h: Complex64, c: &Constellation, n0: f64) -> PskSymbol {
    c.symbol(argmax(coherent_psk_hypotheses(y, h, c, n0)).hypothesis.symbol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{cscg, random_bit, random_index, Domain, Substreams};

    fn c4() -> Constellation {
        Constellation::new(4).unwrap()
    }

    #[test]
    fn argmax_keeps_first_of_ties() {
        let hs = (0..3).map(|s| hyp(None, s, None, 1.0));
        assert_eq!(argmax(hs).hypothesis.symbol, 0);
    }

    #[test]
    fn hypothesis_counts() {
        let c = Constellation::new(8).unwrap();
        let (y, h) = (Complex64::new(0.3, 0.1), Complex64::new(1.0, -0.2));
        let prof = CrossoverProfile::perfect();
        assert_eq!(cb_slot_k_hypotheses(y, h, 0.9, &c, 0.01).count(), 16);
        assert_eq!(cb_slot_nk_hypotheses(y, h, 0.9, &c, 0.01, &prof).count(), 16);
        let pair = SlotPair { y_k: y, y_nk: y, h_k: h, h_nk: h };
        assert_eq!(jmap_hypotheses(pair, 0.9, &c, 0.01, prof).count(), 128);
        assert_eq!(hb_slot_k_hypotheses(y, 1, h, 0.9, &c, 0.01).count(), 8);
        assert_eq!(hb_slot_nk_hypotheses(y, 0, h, 0.9, &c, 0.01).count(), 8);
        assert_eq!(coherent_psk_hypotheses(y, h, &c, 0.01).count(), 8);
    }

    #[test]
    fn noiseless_recovery() {
        let c = c4();
        let mut rng = Substreams::new(4).stream(Domain::Oracle, 0);
        let prof = CrossoverProfile::perfect();
        let alpha: f64 = 0.9;
        let n0 = 1e-9;
        for _ in 0..200 {
            let s = random_index(&mut rng, 4);
            let h = cscg(&mut rng, 1.0);
            let z = c.point(s);
            assert_eq!(decode_cb_slot_k(alpha.sqrt() * z * h, h, alpha, &c, n0).index, s);
            let y0 = (2.0 - alpha).sqrt() * z * h * c.offset();
            assert_eq!(decode_cb_slot_nk(y0, h, alpha, &c, n0, &prof), (0, c.symbol(s)));
            assert_eq!(decode_cb_slot_nk(z * h, h, alpha, &c, n0, &prof), (1, c.symbol(s)));
            assert_eq!(decode_hb_slot_k(alpha.sqrt() * z * h, 0, h, alpha, &c, n0).index, s);
            assert_eq!(decode_hb_slot_nk(y0, 0, h, alpha, &c, n0).index, s);
            assert_eq!(decode_hb_slot_nk(z * h, 1, h, alpha, &c, n0).index, s);
            assert_eq!(decode_coherent_psk(z * h, h, &c, n0).index, s);

            let s2 = random_index(&mut rng, 4);
            let h2 = cscg(&mut rng, 1.0);
            let pair = SlotPair {
                y_k: alpha.sqrt() * z * h,
                y_nk: (2.0 - alpha).sqrt() * c.point(s2) * h2 * c.offset(),
                h_k: h,
                h_nk: h2,
            };
            let d = decode_jmap_reference(&pair, alpha, &c, n0, &prof);
            assert_eq!(d, CbDecision { r_hat: 0, z_hat_k: s, z_hat_nk: s2 });
        }
    }

    #[test]
    fn alpha_near_one_is_coherent_detection() {
        let c = c4();
        let mut rng = Substreams::new(9).stream(Domain::Oracle, 0);
        let alpha = 1.0 - 1e-12;
        for _ in 0..1000 {
            let y = cscg(&mut rng, 1.0);
            let h = cscg(&mut rng, 1.0);
            assert_eq!(decode_cb_slot_k(y, h, alpha, &c, 0.01).index, decode_coherent_psk(y, h, &c, 0.01).index);
        }
    }

    #[test]
    fn hb_slot_k_decision_ignores_pour_bit() {
        let c = c4();
        let mut rng = Substreams::new(10).stream(Domain::Oracle, 0);
        for _ in 0..1000 {
            let y = cscg(&mut rng, 1.0);
            let h = cscg(&mut rng, 1.0);
            assert_eq!(decode_hb_slot_k(y, 0, h, 0.95, &c, 0.003), decode_hb_slot_k(y, 1, h, 0.95, &c, 0.003));
        }
    }

    #[test]
    fn boundary_tie_goes_to_smaller_index() {
        let c = c4();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // halfway between symbol 0 (angle 0) and symbol 1 (angle -π/2)
        let y = Complex64::new(s, -s);
        assert_eq!(decode_coherent_psk(y, Complex64::new(1.0, 0.0), &c, 0.1).index, 0);
        // halfway between symbol 3 and symbol 0
        let y = Complex64::new(s, s);
        assert_eq!(decode_coherent_psk(y, Complex64::new(1.0, 0.0), &c, 0.1).index, 0);
    }

    #[test]
    fn jmap_m2_matches_hand_table() {
        let c = Constellation::new(2).unwrap();
        let alpha: f64 = 0.8;
        let n0 = 0.05;
        let prof = CrossoverProfile { p01: 0.1, p10: 0.2, p00: 0.9, p11: 0.8, ..CrossoverProfile::perfect() };
        let pair = SlotPair {
            y_k: Complex64::new(0.7, 0.2),
            y_nk: Complex64::new(-1.1, 0.3),
            h_k: Complex64::new(0.9, 0.1),
            h_nk: Complex64::new(1.0, -0.4),
        };
        let gauss = |y: Complex64, m: Complex64, v: f64| (-(y - m).norm_sqr() / v).exp() / (PI * v);
        let rot = Complex64::from_polar(1.0, PI / 2.0);
        let mut table = Vec::new();
        for sk in 0..2 {
            for snk in 0..2 {
                for x in 0..2u8 {
                    let zk = if sk == 0 { 1.0 } else { -1.0 };
                    let znk = if snk == 0 { 1.0 } else { -1.0 };
                    let fk = gauss(pair.y_k, alpha.sqrt() * zk * pair.h_k, n0 + x as f64 * (1.0 - alpha));
                    let f0 = gauss(pair.y_nk, (2.0 - alpha).sqrt() * znk * rot * pair.h_nk, n0);
                    let f1 = gauss(pair.y_nk, znk * pair.h_nk, n0);
                    let (q0, q1) = if x == 0 { (0.9, 0.1) } else { (0.2, 0.8) };
                    table.push(((x, sk, snk), fk * (q0 * f0 + q1 * f1)));
                }
            }
        }
        assert_eq!(table.len(), 8);
        let best = table.iter().fold(table[0], |b, t| if t.1 > b.1 { *t } else { b });
        let d = decode_jmap_reference(&pair, alpha, &c, n0, &prof);
        assert_eq!((d.r_hat, d.z_hat_k, d.z_hat_nk), best.0);
        for (h, (_, p)) in jmap_hypotheses(pair, alpha, &c, n0, prof).zip(table.iter()) {
            assert!((h.log_density - p.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn end_to_end_events() {
        assert!(!end_to_end_bit(0, 0, 0));
        assert!(end_to_end_bit(1, 0, 0));
        assert!(!end_to_end_bit(1, 0, 1));
    }

    #[test]
    fn log_add_handles_zero_weights() {
        assert_eq!(log_add(f64::NEG_INFINITY, -3.0), -3.0);
        assert!((log_add(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        let _ = random_bit(&mut Substreams::new(0).stream(Domain::Oracle, 0));
    }
}
