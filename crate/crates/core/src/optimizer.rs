//! Choosing the energy-splitting factor and the number of mimic users.
//!
//! Problem 2 minimises the closed-form bound subject to the ideal entropy
//! reaching `delta`; Problem 1 minimises the simulated error subject to the
//! measured entropy reaching `delta`.

use serde::{Deserialize, Serialize};

use crate::adversary::{simulate_attack, CpdfModel};
use crate::analysis::bound::{bound_terms, pe_nh_th, pe_th_at, pe_th_components};
use crate::analysis::montecarlo::{simulate_pe, EventWeighting, PeOptions};
use crate::error::{NcmsError, Result};
use crate::network::NetworkConfig;
use crate::relay::CrossoverProfile;
use crate::sampling::Substreams;

const ALPHA_MAX: f64 = 1.0 - 1e-9;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Problem {
    /// Simulated error, measured entropy.
    Simulated,
    /// Bound, ideal entropy.
    Bound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub coarse_step: f64,
    pub tolerance: f64,
    pub evaluations: usize,
    /// Every `(L_C, alpha, objective)` point evaluated while searching.
    pub visited: Vec<(usize, f64, f64)>,
    pub budget_exhausted: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationSolution {
    pub problem: Problem,
    pub delta: f64,
    pub snr_db: f64,
    pub users: usize,
    pub alpha_opt: f64,
    pub lc_opt: usize,
    pub objective: f64,
    /// Entropy at the solution (ideal for Problem 2, measured for Problem 1).
    pub constraint: f64,
    pub meta: SolverMeta,
}

/// Smallest even `L_C` with `log2(L_C+1)/log2(L-1) ≥ delta`.
pub fn min_even_lc(users: usize, delta: f64) -> Result<usize> {
    if users < 4 {
        return Err(NcmsError::arg("users", format!("L must be at least 4, got {users}")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(NcmsError::arg("delta", format!("δ must lie in [0, 1], got {delta}")));
    }
    let need = ((users - 1) as f64).powf(delta) - 1.0;
    let mut lc = need.max(0.0).ceil() as usize;
    // absorb rounding in powf when `need` is an exact integer
    if lc > 0 && (lc as f64 - 1.0 - need).abs() < 1e-9 {
        lc -= 1;
    }
    lc += lc % 2;
    if lc > users - 2 {
        return Err(NcmsError::Infeasible(format!("δ = {delta} needs L_C ≥ {need:.3}, more than L-2 = {}", users - 2)));
    }
    Ok(lc)
}

/// Result of the one-dimensional bound minimisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSearch {
    pub alpha: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Coarse grid over (0, 1) with step `1e-3`, then golden-section to `1e-5`.
pub fn minimize_alpha_bound(cfg: &NetworkConfig) -> Result<AlphaSearch> {
    let cfg = cfg.validate()?;
    let f = |a: f64| pe_th_at(&cfg, a);
    let mut evals = 0;
    let mut best = (0.0, f64::INFINITY);
    for i in 1..=999 {
        let a = i as f64 * 1e-3;
        let v = f(a)?;
        evals += 1;
        if v < best.1 {
            best = (a, v);
        }
    }
    let (mut lo, mut hi) = (best.0 - 1e-3, (best.0 + 1e-3).min(ALPHA_MAX));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    evals += 2;
    while hi - lo > 1e-6 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
        evals += 1;
    }
    let mut out = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if best.1 < out.1 {
        out = best;
    }
    Ok(AlphaSearch { alpha: out.0, value: out.1, evaluations: evals })
}

/// `true` if each mimic user costs more bound than two normal-user symbols
/// at every coarse-grid `alpha`, so the bound is nondecreasing in `L_C`.
pub fn mimic_penalty_dominates(cfg: &NetworkConfig) -> bool {
    let nh = pe_nh_th(cfg.noise_power, cfg.psk_order);
    let prof = CrossoverProfile::perfect();
    (1..=999).all(|i| {
        let t = bound_terms(i as f64 * 1e-3, cfg.noise_power, cfg.psk_order);
        let c = pe_th_components(&t, &prof);
        c.hb1 + c.hb2 > 2.0 * nh
    })
}

/// Bound-based design for `delta` at the settings in `base` (its `L_C` and `alpha` are ignored).
pub fn solve_problem2(base: &NetworkConfig, delta: f64) -> Result<OptimizationSolution> {
    let base = base.validate()?;
    let lc0 = min_even_lc(base.users, delta)?;
    let mut meta = SolverMeta {
        coarse_step: 1e-3,
        tolerance: 1e-5,
        evaluations: 0,
        visited: Vec::new(),
        budget_exhausted: false,
        notes: Vec::new(),
    };
    let candidates: Vec<usize> = if mimic_penalty_dominates(&base) {
        vec![lc0]
    } else {
        meta.notes.push("bound not monotone in L_C; scanned every feasible even L_C".into());
        (lc0..=base.users - 2).step_by(2).collect()
    };
    let mut best: Option<(usize, AlphaSearch)> = None;
    for lc in candidates {
        let cfg = NetworkConfig { mimic_users: lc, ..base.clone() };
        let s = minimize_alpha_bound(&cfg)?;
        meta.evaluations += s.evaluations;
        meta.visited.push((lc, s.alpha, s.value));
        if best.is_none_or(|(_, b)| s.value < b.value) {
            best = Some((lc, s));
        }
    }
    let (lc, s) = best.expect("at least one candidate");
    let constraint = crate::adversary::ideal_entropy(base.users, lc);
    debug_assert!(constraint >= delta - 1e-12);
    Ok(OptimizationSolution {
        problem: Problem::Bound,
        delta,
        snr_db: base.snr_db,
        users: base.users,
        alpha_opt: s.alpha,
        lc_opt: lc,
        objective: s.value,
        constraint,
        meta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem1Options {
    /// Slot pairs per simulated error point.
    pub trials: u64,
    /// Frames per entropy measurement.
    pub attack_frames: u64,
    /// Half-width of the `alpha` window around the bound optimum.
    pub alpha_halfwidth: f64,
    pub alpha_step: f64,
    /// Additional even `L_C` values above the smallest feasible one to try.
    pub extra_candidates: usize,
    pub weighting: EventWeighting,
    pub model: CpdfModel,
}

impl Default for Problem1Options {
    fn default() -> Self {
        Problem1Options {
            trials: 100_000,
            attack_frames: 1000,
            alpha_halfwidth: 3e-3,
            alpha_step: 2.5e-4,
            extra_candidates: 0,
            weighting: EventWeighting::Average,
            model: CpdfModel::Coherent,
        }
    }
}

/// Simulation-based design for `delta`.
///
/// The outer search walks even `L_C` from the bound-feasible value until the
/// smallest value whose measured entropy reaches `delta` is bracketed; the
/// inner search evaluates the simulated error on a common-random-number
/// `alpha` grid centred on the bound optimum, smooths it with a three-point
/// moving average and takes the minimum.
pub fn solve_problem1(
    template: &NetworkConfig,
    delta: f64,
    opts: &Problem1Options,
    streams: &Substreams,
) -> Result<OptimizationSolution> {
    let base = template.validate()?;
    if opts.trials < 1 || opts.attack_frames < 1 || !(opts.alpha_step > 0.0) {
        return Err(NcmsError::arg("opts", "trials, frames and step must be positive"));
    }
    let max_lc = base.users - 2;
    let mut meta = SolverMeta {
        coarse_step: opts.alpha_step,
        tolerance: opts.alpha_step,
        evaluations: 0,
        visited: Vec::new(),
        budget_exhausted: false,
        notes: Vec::new(),
    };

    let bound_alpha = |lc: usize| -> Result<f64> {
        Ok(minimize_alpha_bound(&NetworkConfig { mimic_users: lc, ..base.clone() })?.alpha)
    };
    let entropy = |lc: usize, alpha: f64| -> Result<f64> {
        let cfg = NetworkConfig { mimic_users: lc, alpha, ..base.clone() };
        Ok(simulate_attack(&cfg, opts.attack_frames, streams, opts.model)?.mean_h_norm)
    };

    // outer walk over L_C
    let start = min_even_lc(base.users, delta).unwrap_or(max_lc);
    let mut measured = std::collections::BTreeMap::new();
    let mut h_at = |lc: usize, meta: &mut SolverMeta| -> Result<f64> {
        if let Some(&h) = measured.get(&lc) {
            return Ok(h);
        }
        let h = entropy(lc, bound_alpha(lc)?)?;
        meta.notes.push(format!("L_C = {lc}: measured H_norm = {h:.4}"));
        measured.insert(lc, h);
        Ok(h)
    };
    let mut lc = start;
    if h_at(lc, &mut meta)? >= delta {
        while lc >= 2 && h_at(lc - 2, &mut meta)? >= delta {
            lc -= 2;
        }
    } else {
        loop {
            if lc + 2 > max_lc {
                return Err(NcmsError::Infeasible(format!(
                    "measured entropy stays below δ = {delta} up to L_C = {max_lc}"
                )));
            }
            lc += 2;
            if h_at(lc, &mut meta)? >= delta {
                break;
            }
        }
    }

    let mut best: Option<(usize, f64, f64)> = None;
    let last = (lc + 2 * opts.extra_candidates).min(max_lc);
    for cand in (lc..=last).step_by(2) {
        let centre = bound_alpha(cand)?;
        let steps = (opts.alpha_halfwidth / opts.alpha_step).round() as i64;
        let mut grid = Vec::new();
        for i in -steps..=steps {
            let a = centre + i as f64 * opts.alpha_step;
            if a > 0.0 && a < 1.0 - 1e-6 {
                grid.push(a);
            }
        }
        let mut pe = Vec::with_capacity(grid.len());
        for &a in &grid {
            let cfg = NetworkConfig { mimic_users: cand, alpha: a, ..base.clone() };
            let o = PeOptions { trials: opts.trials, weighting: opts.weighting, min_errors: 10 };
            let s = simulate_pe(&cfg, &o, streams)?;
            meta.evaluations += 1;
            meta.visited.push((cand, a, s.pe));
            pe.push(s.pe);
        }
        let smooth = moving_average3(&pe);
        let (i, _) = smooth.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &v)| if v < b.1 { (i, v) } else { b });
        if i == 0 || i + 1 == grid.len() {
            meta.notes.push(format!("L_C = {cand}: minimum on the edge of the α window"));
        }
        if best.is_none_or(|(_, _, v)| smooth[i] < v) {
            best = Some((cand, grid[i], smooth[i]));
        }
    }
    let (lc_opt, alpha_opt, objective) = best.expect("at least one candidate");

    let constraint = entropy(lc_opt, alpha_opt)?;
    if constraint < delta {
        meta.notes.push(format!(
            "re-measured H_norm {constraint:.4} at the chosen α is below δ; within Monte Carlo error of the search value"
        ));
        meta.budget_exhausted = true;
    }
    Ok(OptimizationSolution {
        problem: Problem::Simulated,
        delta,
        snr_db: base.snr_db,
        users: base.users,
        alpha_opt,
        lc_opt,
        objective,
        constraint,
        meta,
    })
}

/// Three-point moving average; the ends average two points.
pub fn moving_average3(v: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(v.len() - 1);
            v[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}
