use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Rect;
use crate::randfield::Mode;
use crate::sweep::Crossing;

use super::{crossing_count, tag, Estimate, Z95};

/// Shape parameters of the width scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WnParams {
    pub alpha: f64,
    pub eps: f64,
}

impl WnParams {
    pub fn new(alpha: f64, eps: f64) -> Result<WnParams> {
        if !(alpha > 0.75 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0.75, 1), got {alpha}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
        }
        Ok(WnParams { alpha, eps })
    }

    /// Box of the horizontal side, `[0, ⌈αm⌉] x [0, ⌈εn⌉]`.
    pub fn h_box(&self, m: i64, n: i64) -> Rect {
        Rect::with_dims(ceil_dim(self.alpha * m as f64), ceil_dim(self.eps * n as f64))
            .expect("positive dimensions")
    }

    /// Box of the vertical side, `[0, m] x [0, ⌈αεn⌉]`.
    pub fn v_box(&self, m: i64, n: i64) -> Rect {
        Rect::with_dims(m, ceil_dim(self.alpha * self.eps * n as f64)).expect("positive dimensions")
    }
}

impl Default for WnParams {
    fn default() -> WnParams {
        WnParams {
            alpha: 0.8,
            eps: 0.25,
        }
    }
}

/// Ceiling that ignores float noise such as `0.8 * 5 = 4.000000000000001`.
pub(crate) fn ceil_dim(x: f64) -> i64 {
    ((x - 1e-9).ceil() as i64).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WnOptions {
    pub mode: Mode,
    pub z: f64,
    /// Per-estimate sample cap for the doubling escalation.
    pub max_samples: u64,
}

impl Default for WnOptions {
    fn default() -> WnOptions {
        WnOptions {
            mode: Mode::Fast,
            z: Z95,
            max_samples: 1 << 22,
        }
    }
}

/// One evaluation of the sign of `Ĥ - V̂` at width `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WnProbe {
    pub m: i64,
    pub h: Estimate,
    pub v: Estimate,
    /// `Ĥ <= V̂` was decided.
    pub h_le_v: bool,
    /// The two intervals separated.
    pub resolved: bool,
    /// Both estimates are the same 0 or 1, so no sample size separates them.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WnEstimate {
    pub n: i64,
    pub p: f64,
    pub w_hat: i64,
    pub params: WnParams,
    /// `Ĥ > V̂` at `m_lo` (or `m_lo = 0`), `Ĥ <= V̂` at `m_hi = w_hat`.
    pub bracket: (i64, i64),
    pub samples_used: u64,
    /// Some probe on the search path hit the sample cap.
    pub unresolved: bool,
    /// The deciding probe compared two identical 0/1 estimates.
    pub degenerate: bool,
    pub probes: Vec<WnProbe>,
}

impl WnEstimate {
    pub fn at_hi(&self) -> &WnProbe {
        self.probes
            .iter()
            .rev()
            .find(|pr| pr.m == self.w_hat)
            .expect("w_hat was probed")
    }
}

struct Prober<'a> {
    p: f64,
    n: i64,
    params: WnParams,
    trials: u64,
    seed: u64,
    opts: &'a WnOptions,
    index: u16,
    used: u64,
}

impl Prober<'_> {
    fn count(&self, b: &Rect, kind: Crossing, tag: u8, range: std::ops::Range<u64>) -> Result<u64> {
        crossing_count(b, kind, self.p, self.seed, self.opts.mode, tag, self.index, range)
    }

    fn probe(&mut self, m: i64) -> Result<WnProbe> {
        let hb = self.params.h_box(m, self.n);
        let vb = self.params.v_box(m, self.n);
        let mut n_s = self.trials;
        let mut kh = self.count(&hb, Crossing::LeftRight, tag::WN_H, 0..n_s)?;
        let mut kv = self.count(&vb, Crossing::Vertical, tag::WN_V, 0..n_s)?;
        loop {
            let h = Estimate::new(kh, n_s, self.opts.z)?;
            let v = Estimate::new(kv, n_s, self.opts.z)?;
            let degenerate = kh == kv && (kh == 0 || kh == n_s);
            let verdict = if degenerate || h.hi < v.lo {
                Some(true)
            } else if h.lo > v.hi {
                Some(false)
            } else {
                None
            };
            if verdict.is_some() || 2 * n_s > self.opts.max_samples {
                self.used += 2 * n_s;
                return Ok(WnProbe {
                    m,
                    h,
                    v,
                    h_le_v: verdict.unwrap_or(h.p_hat <= v.p_hat),
                    resolved: verdict.is_some(),
                    degenerate,
                });
            }
            kh += self.count(&hb, Crossing::LeftRight, tag::WN_H, n_s..2 * n_s)?;
            kv += self.count(&vb, Crossing::Vertical, tag::WN_V, n_s..2 * n_s)?;
            n_s *= 2;
        }
    }
}

/// Empirical `w_n`: least `m` with `Ĥ(⌈αm⌉, ⌈εn⌉) <= V̂(m, ⌈αεn⌉)`.
///
/// `Ĥ` decreases and `V̂` increases in `m` (for a fixed replica both
/// indicators are monotone in `m`, and all widths share the replica streams),
/// so the first `m` with `Ĥ <= V̂` is found by doubling and then bisection.
/// Each probe starts at `trials` replicas and doubles while the two Wilson
/// intervals overlap, up to `max_samples`; past the cap the point estimates
/// decide and the result is flagged `unresolved`.
pub fn estimate_wn(
    p: f64,
    n: i64,
    params: WnParams,
    trials: u64,
    seed: u64,
    opts: &WnOptions,
) -> Result<WnEstimate> {
    if n < 1 {
        return Err(Error::invalid(format!("n must be >= 1, got {n}")));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one replica"));
    }
    WnParams::new(params.alpha, params.eps)?;
    crate::randfield::quantize(p)?;
    // Once ⌈αm⌉ > ⌈εn⌉ no left-right crossing fits, so Ĥ = 0 <= V̂.
    let h_height = ceil_dim(params.eps * n as f64);
    let mut m_max = 1;
    while ceil_dim(params.alpha * m_max as f64) <= h_height {
        m_max += 1;
    }
    let mut pr = Prober {
        p,
        n,
        params,
        trials,
        seed,
        opts,
        index: (n as u64 & 0xFFFF) as u16,
        used: 0,
    };
    let mut probes = Vec::new();
    let (mut lo, mut hi) = (0i64, 1i64);
    loop {
        let r = pr.probe(hi)?;
        let done = r.h_le_v;
        probes.push(r);
        if done {
            break;
        }
        lo = hi;
        hi = (2 * hi).min(m_max);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let r = pr.probe(mid)?;
        if r.h_le_v {
            hi = mid;
        } else {
            lo = mid;
        }
        probes.push(r);
    }
    let decisive = probes.iter().rev().find(|r| r.m == hi).expect("probed");
    Ok(WnEstimate {
        n,
        p,
        w_hat: hi,
        params,
        bracket: (lo, hi),
        samples_used: pr.used,
        unresolved: probes.iter().any(|r| !r.resolved),
        degenerate: decisive.degenerate,
        probes,
    })
}
