use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Rect;
use crate::randfield::{dequantize, EdgeConfig, Mode, SeedSpec, P_ONE};
use crate::sweep::{crossing_threshold, Crossing};

use super::wn::{estimate_wn, WnOptions, WnParams};
use super::{replica_id, tag, wilson_interval, Z95};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcOptions {
    pub mode: Mode,
    pub z: f64,
    pub params: WnParams,
    /// Replicas per `ŵ_n` probe.
    pub wn_trials: u64,
    pub wn_max_samples: u64,
    /// Fixed box width instead of `ŵ_n`.
    pub m_override: Option<i64>,
    /// Where the `ŵ_n` iteration of the first scale starts.
    pub p_start: f64,
    /// Passes of the `ŵ_n` / bracket iteration per scale.
    pub max_passes: usize,
}

impl Default for PcOptions {
    fn default() -> PcOptions {
        PcOptions {
            mode: Mode::Coupled,
            z: Z95,
            params: WnParams::default(),
            wn_trials: 2000,
            wn_max_samples: 1 << 14,
            m_override: None,
            p_start: 0.5,
            max_passes: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcBracket {
    pub n: i64,
    /// Box width used for the criteria.
    pub m: i64,
    /// Largest level at which the subcritical criterion holds.
    pub p_lo: f64,
    /// Smallest level at which the supercritical criterion holds.
    pub p_hi: f64,
    pub q_lo: u64,
    pub q_hi: u64,
    pub eta: f64,
    pub method: String,
    /// `p_lo >= p_hi`, or one criterion never fired.
    pub inconsistent: bool,
}

impl PcBracket {
    pub fn width(&self) -> f64 {
        self.p_hi - self.p_lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.p_lo + self.p_hi)
    }

    pub fn contains(&self, p: f64) -> bool {
        self.p_lo <= p && p <= self.p_hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcResult {
    pub seed: u64,
    pub trials: u64,
    pub brackets: Vec<PcBracket>,
    /// Midpoint of the last bracket.
    pub p_hat: f64,
}

/// Sorted crossing thresholds of `b` over `trials` coupled replicas.
fn thresholds(b: &Rect, kind: Crossing, trials: u64, seed: u64, index: u16) -> Vec<u64> {
    let mut t: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let cfg = EdgeConfig::new(SeedSpec::new(seed, replica_id(tag::PC, index, i)), 0.0, Mode::Coupled)
                .expect("p = 0 is valid");
            crossing_threshold(&cfg, b, kind).unwrap_or(u64::MAX)
        })
        .collect();
    t.sort_unstable();
    t
}

fn hits(sorted: &[u64], q: u64) -> u64 {
    sorted.partition_point(|&t| t <= q) as u64
}

/// Largest `q` in `[0, P_ONE]` with `pred(q)`, for `pred` true then false.
fn last_true(pred: impl Fn(u64) -> bool) -> Option<u64> {
    if !pred(0) {
        return None;
    }
    let (mut lo, mut hi) = (0u64, P_ONE + 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Smallest `q` in `[0, P_ONE]` with `pred(q)`, for `pred` false then true.
fn first_true(pred: impl Fn(u64) -> bool) -> Option<u64> {
    if !pred(P_ONE) {
        return None;
    }
    let (mut lo, mut hi) = (0u64, P_ONE);
    if pred(0) {
        return Some(0);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Bracket at scale `n` with box width `m`.
///
/// Every replica's crossing threshold is computed once per box, so the four
/// crossing counts are exact step functions of the level `q` and the two
/// criteria are monotone in `q`.
fn bracket(n: i64, m: i64, trials: u64, eta: f64, z: f64, seed: u64, scale: usize) -> Result<PcBracket> {
    let wide = Rect::with_dims(2 * m, n)?;
    let tall = Rect::with_dims(m, 2 * n)?;
    let base = (scale * 4) as u16;
    let v_wide = thresholds(&wide, Crossing::Vertical, trials, seed, base);
    let h_tall = thresholds(&tall, Crossing::LeftRight, trials, seed, base + 1);
    let v_tall = thresholds(&tall, Crossing::Vertical, trials, seed, base + 2);
    let h_wide = thresholds(&wide, Crossing::LeftRight, trials, seed, base + 3);
    let upper = |k: u64| wilson_interval(k, trials, z).expect("trials > 0").1;
    let lower = |k: u64| wilson_interval(k, trials, z).expect("trials > 0").0;
    let sub = |q: u64| upper(hits(&v_wide, q)) < eta && upper(hits(&h_tall, q)) < eta;
    let sup = |q: u64| lower(hits(&v_tall, q)) > 1.0 - eta && lower(hits(&h_wide, q)) > 1.0 - eta;
    let q_lo = last_true(sub);
    let q_hi = first_true(sup);
    let inconsistent = match (q_lo, q_hi) {
        (Some(a), Some(b)) => a >= b,
        _ => true,
    };
    let q_lo = q_lo.unwrap_or(0);
    let q_hi = q_hi.unwrap_or(P_ONE);
    Ok(PcBracket {
        n,
        m,
        p_lo: dequantize(q_lo),
        p_hi: dequantize(q_hi),
        q_lo,
        q_hi,
        eta,
        method: "finite-size criteria on coupled crossing thresholds".into(),
        inconsistent,
    })
}

/// Critical-point brackets from finite-size criteria at each scale.
///
/// At scale `n` with width `m`, a level is subcritical when the upper Wilson
/// bounds of `V(2m, n)` and `H(m, 2n)` are both below `eta`, and
/// supercritical when the lower bounds of `V(m, 2n)` and `H(2m, n)` both
/// exceed `1 - eta`. `m` is `ŵ_n` at the current guess of `p_c`, iterated
/// with the bracket midpoint until it stabilises (at most `max_passes`).
pub fn find_pc(n_list: &[i64], trials: u64, eta: f64, seed: u64, opts: &PcOptions) -> Result<PcResult> {
    if opts.mode != Mode::Coupled {
        return Err(Error::CoupledModeRequired);
    }
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::invalid(format!("eta must lie in (0, 1/2), got {eta}")));
    }
    if trials == 0 || n_list.is_empty() {
        return Err(Error::invalid("need at least one replica and one scale"));
    }
    if n_list.iter().any(|&n| n < 1) {
        return Err(Error::invalid("scales must be >= 1"));
    }
    if n_list.len() > u16::MAX as usize / 4 {
        return Err(Error::invalid("too many scales"));
    }
    let wn_opts = WnOptions {
        mode: opts.mode,
        z: opts.z,
        max_samples: opts.wn_max_samples,
    };
    let mut guess = opts.p_start;
    let mut brackets: Vec<PcBracket> = Vec::with_capacity(n_list.len());
    for (j, &n) in n_list.iter().enumerate() {
        let mut m_prev = None;
        let mut br = None;
        for _ in 0..opts.max_passes.max(1) {
            let m = match opts.m_override {
                Some(m) => m,
                None => estimate_wn(guess, n, opts.params, opts.wn_trials, seed, &wn_opts)?.w_hat,
            };
            if m < 1 {
                return Err(Error::invalid(format!("box width must be >= 1, got {m}")));
            }
            if m_prev == Some(m) {
                break;
            }
            let b = bracket(n, m, trials, eta, opts.z, seed, j)?;
            guess = b.midpoint();
            br = Some(b);
            m_prev = Some(m);
            if opts.m_override.is_some() {
                break;
            }
        }
        brackets.push(br.expect("at least one pass"));
    }
    let p_hat = brackets.last().map(PcBracket::midpoint).unwrap_or(f64::NAN);
    Ok(PcResult {
        seed,
        trials,
        brackets,
        p_hat,
    })
}
