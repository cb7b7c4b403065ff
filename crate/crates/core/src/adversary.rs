//! The sensing adversary: per-band hypothesis scoring and residual entropy.
//!
//! For every slot pair of a band Dave compares three explanations: the
//! countermeasure with an embedded zero (`D1`), the countermeasure with an
//! embedded one (`D2`), and plain traffic (`D3`). The fraction of pairs in
//! which a countermeasure explanation wins is the band's score `m_l`, and a
//! softmax over the scores gives his belief about which band is the helper.
//!
//! Dave knows `alpha`, `N0`, the frame timing and, for the coherent model,
//! his own channel gain to each band's symbol transmitter. Nothing secret is
//! an input to any function here.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoders::cn_log_density;
use crate::error::{NcmsError, Result};
use crate::keystream::derive_bits;
use crate::network::NetworkConfig;
use crate::relay::{relay_decisions, CrossoverProfile};
use crate::sampling::{Domain, Substreams};
use crate::waveforms::{
    draw_bits, synthesize_frame, BandKind, Constellation, FrameInputs, FrameRngs, Observers, SlotPair,
};

/// Which densities Dave evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CpdfModel {
    /// Symbols unknown and maximized; channel gains known.
    #[default]
    Coherent,
    /// Zero-mean Gaussians averaged over unknown Rayleigh channels.
    Marginal,
}

/// Marginal log-densities of a slot pair under `(D1, D2, D3)`.
///
/// Variances per slot: `D1` = `(α+N0, 2-α+N0)`, `D2` = `D3` = `(1+N0, 1+N0)`.
pub fn cpdf_log_triplet(y_k: Complex64, y_nk: Complex64, alpha: f64, n0: f64) -> [f64; 3] {
    let zero = Complex64::new(0.0, 0.0);
    let d1 = cn_log_density(y_k, zero, alpha + n0) + cn_log_density(y_nk, zero, 2.0 - alpha + n0);
    let plain = cn_log_density(y_k, zero, 1.0 + n0) + cn_log_density(y_nk, zero, 1.0 + n0);
    [d1, plain, plain]
}

/// Per-slot generalized likelihood: best symbol for a fixed mean scale.
#[derive(Debug, Clone, Copy)]
struct SlotModel {
    scale: Complex64,
    inv_var: f64,
    log_norm: f64,
}

impl SlotModel {
    fn new(scale: Complex64, var: f64) -> Self {
        SlotModel { scale, inv_var: 1.0 / var, log_norm: (std::f64::consts::PI * var).ln() }
    }

    #[inline]
    fn eval(&self, y: Complex64, g: Complex64, c: &Constellation) -> f64 {
        let base = self.scale * g;
        let mut best = f64::INFINITY;
        for z in c.points() {
            let d = (y - base * z).norm_sqr();
            if d < best {
                best = d;
            }
        }
        -best * self.inv_var - self.log_norm
    }
}

/// Precomputed coherent hypothesis set for one operating point.
#[derive(Debug, Clone)]
pub struct CoherentCpdf {
    d1: (SlotModel, SlotModel),
    d2: (SlotModel, SlotModel),
    d3: (SlotModel, SlotModel),
    constellation: Constellation,
}

impl CoherentCpdf {
    pub fn new(alpha: f64, n0: f64, c: &Constellation) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let a = Complex64::new(alpha.sqrt(), 0.0);
        CoherentCpdf {
            d1: (SlotModel::new(a, n0), SlotModel::new(c.offset() * (2.0 - alpha).sqrt(), n0)),
            d2: (SlotModel::new(a, n0 + 1.0 - alpha), SlotModel::new(one, n0)),
            d3: (SlotModel::new(one, n0), SlotModel::new(one, n0)),
            constellation: c.clone(),
        }
    }

    pub fn log_triplet(&self, p: &SlotPair) -> [f64; 3] {
        let c = &self.constellation;
        let pair = |m: &(SlotModel, SlotModel)| m.0.eval(p.y_k, p.h_k, c) + m.1.eval(p.y_nk, p.h_nk, c);
        [pair(&self.d1), pair(&self.d2), pair(&self.d3)]
    }
}

/// `true` when a countermeasure hypothesis strictly beats plain traffic.
#[inline]
pub fn countermeasure_wins(l: [f64; 3]) -> bool {
    l[0].max(l[1]) > l[2]
}

/// Score `m_l` of one band over a frame of `frame_len = 2 · pairs` symbols.
pub fn classify_band(
    frame: &[SlotPair],
    frame_len: usize,
    model: CpdfModel,
    alpha: f64,
    n0: f64,
    c: &Constellation,
) -> Result<f64> {
    if 2 * frame.len() != frame_len || frame.is_empty() {
        return Err(NcmsError::FrameLength { expected: frame_len, got: 2 * frame.len() });
    }
    let wins = match model {
        CpdfModel::Marginal => {
            frame.iter().filter(|p| countermeasure_wins(cpdf_log_triplet(p.y_k, p.y_nk, alpha, n0))).count()
        }
        CpdfModel::Coherent => {
            let cp = CoherentCpdf::new(alpha, n0, c);
            frame.iter().filter(|p| countermeasure_wins(cp.log_triplet(p))).count()
        }
    };
    Ok(wins as f64 / frame.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandScore {
    pub band: usize,
    pub m: f64,
    /// `exp(d · m)`, possibly after a common shift (see [`score_and_entropy`]).
    pub p: f64,
    pub p_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub h: f64,
    pub h_norm: f64,
    pub ideal: f64,
    pub scores: Vec<BandScore>,
}

/// Normalised entropy when Dave can only narrow the helper down to the mimics.
pub fn ideal_entropy(users: usize, mimic_users: usize) -> f64 {
    ((mimic_users + 1) as f64).log2() / ((users - 1) as f64).log2()
}

/// Softmax over `d · m_l` and the Shannon entropy of the result.
///
/// `p` is reported as `exp(d·m_l - d·max m)`; the shift cancels in the
/// normalisation and keeps large `d` finite.
pub fn score_and_entropy(m: &[f64], d: f64, users: usize, mimic_users: usize) -> Result<EntropyReport> {
    if users < 3 || m.len() != users - 1 {
        return Err(NcmsError::arg("m", format!("expected {} band scores, got {}", users.saturating_sub(1), m.len())));
    }
    if m.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(NcmsError::arg("m", "scores must lie in [0, 1]"));
    }
    let top = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let p: Vec<f64> = m.iter().map(|x| (d * (x - top)).exp()).collect();
    let total: f64 = p.iter().sum();
    let mut h = 0.0;
    let scores: Vec<BandScore> = m
        .iter()
        .zip(&p)
        .enumerate()
        .map(|(band, (&m, &p))| {
            let pn = p / total;
            if pn > 0.0 {
                h -= pn * pn.log2();
            }
            BandScore { band, m, p, p_norm: pn }
        })
        .collect();
    let h_norm = (h / ((users - 1) as f64).log2()).clamp(0.0, 1.0);
    Ok(EntropyReport { h, h_norm, ideal: ideal_entropy(users, mimic_users), scores })
}

/// Mean and standard error of a set of per-band scores.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub mean: f64,
    pub std_err: f64,
    pub samples: u64,
}

impl ScoreSummary {
    fn from_sums(sum: f64, sq: f64, n: u64) -> Self {
        if n == 0 {
            return ScoreSummary::default();
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 { ((sq - sum * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        ScoreSummary { mean, std_err: (var / nf).sqrt(), samples: n }
    }

    /// Two-sample z statistic of `self.mean - other.mean`.
    pub fn z_against(&self, other: &ScoreSummary) -> f64 {
        let se = (self.std_err.powi(2) + other.std_err.powi(2)).sqrt();
        (self.mean - other.mean) / se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub frames: u64,
    pub mean_h_norm: f64,
    /// 95% half-width of the mean.
    pub ci_halfwidth: f64,
    pub ideal: f64,
    pub helper: ScoreSummary,
    pub mimic: ScoreSummary,
    pub normal: ScoreSummary,
    pub model: CpdfModel,
}

#[derive(Debug, Clone, Copy, Default)]
struct FrameOutcome {
    h_norm: f64,
    sums: [(f64, f64, u64); 3],
}

/// Band class for observed band `l` (0 = helper, then mimics, then normal users).
pub fn band_kind(l: usize, mimic_users: usize) -> BandKind {
    match l {
        0 => BandKind::Cb,
        l if l <= mimic_users => BandKind::Hb,
        _ => BandKind::Normal,
    }
}

/// Dave's view of every observed band for frame `t`, as scores `m_l`.
pub fn attack_frame(
    cfg: &NetworkConfig,
    c: &Constellation,
    prof: &CrossoverProfile,
    model: CpdfModel,
    streams: &Substreams,
    t: u64,
) -> Result<Vec<f64>> {
    let n = cfg.half_frame;
    let secret = streams.master().to_le_bytes();
    let mut m = Vec::with_capacity(cfg.observed_bands());
    for l in 0..cfg.observed_bands() {
        let kind = band_kind(l, cfg.mimic_users);
        let inner = (l as u64) << 3;
        let mut rngs = FrameRngs {
            truth: streams.stream2(Domain::Adversary, t, inner),
            bob: streams.stream2(Domain::Adversary, t, inner | 1),
            dave: streams.stream2(Domain::Adversary, t, inner | 2),
        };
        let obs = match kind {
            BandKind::Cb => {
                let x = draw_bits(&mut streams.stream2(Domain::Adversary, t, inner | 3), n);
                let xh = relay_decisions(&x, cfg, prof.tau, &mut streams.stream2(Domain::Adversary, t, inner | 4));
                let inputs = FrameInputs { band: kind, bits: &x, aux_bits: &[], relay_decisions: Some(&xh) };
                synthesize_frame(cfg, c, &inputs, &mut rngs, Observers::DAVE)?
            }
            BandKind::Hb => {
                let p = derive_bits(&secret, &format!("attack-{t}-band{l}"), n)?.bits;
                let inputs = FrameInputs { band: kind, bits: &p, aux_bits: &[], relay_decisions: None };
                synthesize_frame(cfg, c, &inputs, &mut rngs, Observers::DAVE)?
            }
            _ => {
                let inputs = FrameInputs { band: kind, bits: &[], aux_bits: &[], relay_decisions: None };
                synthesize_frame(cfg, c, &inputs, &mut rngs, Observers::DAVE)?
            }
        };
        m.push(classify_band(&obs.dave, cfg.frame_len, model, cfg.alpha, cfg.noise_power, c)?);
    }
    Ok(m)
}

/// Mean normalised entropy over `frames` independent observation frames.
pub fn simulate_attack(
    cfg: &NetworkConfig,
    frames: u64,
    streams: &Substreams,
    model: CpdfModel,
) -> Result<AttackReport> {
    let cfg = cfg.validate()?;
    if frames == 0 {
        return Err(NcmsError::arg("frames", "at least one frame is required"));
    }
    let c = Constellation::new(cfg.psk_order)?;
    let prof = CrossoverProfile::for_config(&cfg)?;

    let outcomes: Vec<FrameOutcome> = (0..frames)
        .into_par_iter()
        .map(|t| {
            let m = attack_frame(&cfg, &c, &prof, model, streams, t)?;
            let rep = score_and_entropy(&m, cfg.softmax_scale, cfg.users, cfg.mimic_users)?;
            let mut out = FrameOutcome { h_norm: rep.h_norm, ..Default::default() };
            for (l, &ml) in m.iter().enumerate() {
                let slot = match band_kind(l, cfg.mimic_users) {
                    BandKind::Cb => 0,
                    BandKind::Hb => 1,
                    _ => 2,
                };
                let s = &mut out.sums[slot];
                s.0 += ml;
                s.1 += ml * ml;
                s.2 += 1;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let nf = frames as f64;
    let mut sums = [(0.0, 0.0, 0u64); 3];
    let (mut hs, mut hsq) = (0.0, 0.0);
    for o in &outcomes {
        hs += o.h_norm;
        hsq += o.h_norm * o.h_norm;
        for (acc, s) in sums.iter_mut().zip(o.sums.iter()) {
            acc.0 += s.0;
            acc.1 += s.1;
            acc.2 += s.2;
        }
    }
    let mean = hs / nf;
    let var = if frames > 1 { ((hsq - hs * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    Ok(AttackReport {
        frames,
        mean_h_norm: mean,
        ci_halfwidth: 1.959_963_984_540_054 * (var / nf).sqrt(),
        ideal: ideal_entropy(cfg.users, cfg.mimic_users),
        helper: ScoreSummary::from_sums(sums[0].0, sums[0].1, sums[0].2),
        mimic: ScoreSummary::from_sums(sums[1].0, sums[1].1, sums[1].2),
        normal: ScoreSummary::from_sums(sums[2].0, sums[2].1, sums[2].2),
        model,
    })
}
