//! Monte Carlo estimation: crossing probabilities, survival and width curves,
//! the width scale `ŵ_n`, critical-point brackets and power-law fits.
//!
//! Replicas are independent edge fields indexed by [`replica_id`]; every
//! tally is an integer sum, so results do not depend on the thread count.

mod curves;
mod fit;
mod pc;
mod wn;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Rect;
use crate::randfield::{EdgeConfig, Mode, SeedSpec};
use crate::sweep::{crosses, Crossing};

pub use curves::{
    conditional_extremes, survival_curve, width_curve, Quantity, ScalingRow, ScalingTable, WidthCurve, WidthOptions,
    WidthRow,
};
pub use fit::{fit_power_law, PowerLawFit};
pub use pc::{find_pc, PcBracket, PcOptions, PcResult};
pub use wn::{estimate_wn, WnEstimate, WnOptions, WnParams, WnProbe};

/// Default normal quantile for intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Replica-stream tags, one per estimator.
pub mod tag {
    pub const CROSSING: u8 = 1;
    pub const SURVIVAL: u8 = 2;
    pub const WIDTH: u8 = 3;
    pub const HALFLINE: u8 = 4;
    pub const WN_H: u8 = 5;
    pub const WN_V: u8 = 6;
    pub const PC: u8 = 7;
    pub const CLUSTER: u8 = 8;
    pub const SUBADD: u8 = 9;
}

/// Replica index of sample `i` in stream `(tag, index)`: `tag` in the top
/// byte, `index` in the next 16 bits, `i < 2^40` below.
#[inline]
pub fn replica_id(tag: u8, index: u16, i: u64) -> u64 {
    debug_assert!(i < 1 << 40);
    ((tag as u64) << 56) | ((index as u64) << 40) | (i & ((1 << 40) - 1))
}

/// A binomial proportion with its Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub k: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
    pub z: f64,
}

impl Estimate {
    pub fn new(k: u64, trials: u64, z: f64) -> Result<Estimate> {
        let (lo, hi) = wilson_interval(k, trials, z)?;
        Ok(Estimate {
            k,
            trials,
            p_hat: k as f64 / trials as f64,
            lo,
            hi,
            z,
        })
    }

    /// Binomial standard error `sqrt(p(1-p)/N)`.
    pub fn stderr(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.trials as f64).sqrt()
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    /// Pool two disjoint samples.
    pub fn merged(&self, other: &Estimate) -> Estimate {
        Estimate::new(self.k + other.k, self.trials + other.trials, self.z)
            .expect("merged sample is non-empty")
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid("Wilson interval needs at least one trial"));
    }
    if k > n {
        return Err(Error::invalid(format!("{k} successes out of {n} trials")));
    }
    let nf = n as f64;
    let ph = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (ph + z2 / (2.0 * nf)) / denom;
    let half = z * (ph * (1.0 - ph) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    Ok((lo, hi))
}

/// Which crossing of `[0, m] x [0, n]` to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    /// Left to right.
    H,
    /// Bottom to top.
    V,
}

impl Kind {
    pub fn crossing(self) -> Crossing {
        match self {
            Kind::H => Crossing::LeftRight,
            Kind::V => Crossing::Vertical,
        }
    }
}

impl std::str::FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Kind> {
        match s {
            "H" | "h" => Ok(Kind::H),
            "V" | "v" => Ok(Kind::V),
            _ => Err(Error::invalid(format!("crossing kind must be H or V, got '{s}'"))),
        }
    }
}

/// Common knobs of the replica farms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub mode: Mode,
    pub z: f64,
    /// Stream index, so that independent calls can use disjoint replicas.
    pub stream: u16,
}

impl Default for McOptions {
    fn default() -> McOptions {
        McOptions {
            mode: Mode::Fast,
            z: Z95,
            stream: 0,
        }
    }
}

/// Number of replicas `i` in `range` whose configuration satisfies `hit`.
pub(crate) fn count_hits(
    range: std::ops::Range<u64>,
    f: impl Fn(u64) -> bool + Sync + Send,
) -> u64 {
    range.into_par_iter().filter(|&i| f(i)).count() as u64
}

/// Crossing count of `b` over replicas `range` of stream `(tag, index)`.
pub(crate) fn crossing_count(
    b: &Rect,
    kind: Crossing,
    p: f64,
    seed: u64,
    mode: Mode,
    tag: u8,
    index: u16,
    range: std::ops::Range<u64>,
) -> Result<u64> {
    // Validate p once; per-replica construction then cannot fail.
    EdgeConfig::new(SeedSpec::new(seed, 0), p, mode)?;
    Ok(count_hits(range, |i| {
        let cfg = EdgeConfig::new(SeedSpec::new(seed, replica_id(tag, index, i)), p, mode)
            .expect("validated");
        crosses(&cfg, b, kind)
    }))
}

/// Monte Carlo estimate of `H_p(m, n)` or `V_p(m, n)` from `trials` replicas.
pub fn mc_crossing(kind: Kind, m: i64, n: i64, p: f64, trials: u64, seed: u64) -> Result<Estimate> {
    mc_crossing_with(kind, m, n, p, trials, seed, &McOptions::default())
}

pub fn mc_crossing_with(
    kind: Kind,
    m: i64,
    n: i64,
    p: f64,
    trials: u64,
    seed: u64,
    opts: &McOptions,
) -> Result<Estimate> {
    if m < 1 || n < 1 {
        return Err(Error::invalid(format!("box dimensions must be >= 1, got m={m}, n={n}")));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one replica"));
    }
    let b = Rect::with_dims(m, n)?;
    let k = crossing_count(
        &b,
        kind.crossing(),
        p,
        seed,
        opts.mode,
        tag::CROSSING,
        opts.stream,
        0..trials,
    )?;
    Estimate::new(k, trials, opts.z)
}
