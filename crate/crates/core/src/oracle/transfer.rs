//! Survival in the strip `[-w, w] x Z` by an exact transfer matrix.
//!
//! The state is the occupied subset of one row. Given the occupied set `S` of
//! row `y`, the site `t` of row `y + 1` is occupied with probability
//! `1 - (1-p)^c`, `c = |{t-1, t+1} ∩ S|`, independently over `t`, because
//! every edge feeds exactly one target. A row update is applied one target at
//! a time. The state holds the new bits of the targets already processed and
//! the old bits still needed; the two live on columns of different parity, so
//! one mask over all `2w + 1` columns holds both.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::Num;

use crate::error::{Error, Result};

use super::exact::{ExactProb, Method, Prob};

/// Largest strip half-width (`2w + 1 <= 21` columns).
pub const MAX_HALF_WIDTH: i64 = 10;

fn check_width(w: i64) -> Result<()> {
    if !(0..=MAX_HALF_WIDTH).contains(&w) {
        return Err(Error::Capacity {
            what: "strip columns (2w + 1)",
            needed: (2 * w + 1).max(0) as usize,
            limit: (2 * MAX_HALF_WIDTH + 1) as usize,
        });
    }
    Ok(())
}

/// Column `x` of the strip lives at bit `x + w`.
struct Strip {
    w: i64,
}

impl Strip {
    fn bit(&self, x: i64) -> u32 {
        (x + self.w) as u32
    }

    fn columns(&self, parity: i64) -> impl Iterator<Item = i64> + '_ {
        (-self.w..=self.w).filter(move |x| (x - parity).rem_euclid(2) == 0)
    }

    /// Distribution of row `y + 1` from the distribution of row `y` (states
    /// are masks over row-`y` columns); the empty state is dropped.
    fn step<T: Clone + Num>(&self, y: i64, dist: HashMap<u32, T>, p: &T) -> HashMap<u32, T> {
        let q = T::one() - p.clone();
        let one_open = p.clone();
        let two_open = T::one() - q.clone() * q.clone();
        let old_mask: u32 = self.columns(y).fold(0, |m, x| m | (1 << self.bit(x)));
        let mut cur = dist;
        for t in self.columns(y + 1) {
            let mut next: HashMap<u32, T> = HashMap::with_capacity(cur.len() * 2);
            let below = t - 1;
            let above = t + 1;
            for (mask, pr) in cur {
                let c = [below, above]
                    .iter()
                    .filter(|&&s| s.abs() <= self.w && (mask >> self.bit(s)) & 1 == 1)
                    .count();
                // Source t-1 feeds no later target.
                let base = if below >= -self.w {
                    mask & !(1 << self.bit(below))
                } else {
                    mask
                };
                let occ = match c {
                    0 => None,
                    1 => Some(one_open.clone()),
                    _ => Some(two_open.clone()),
                };
                match occ {
                    None => add(&mut next, base, pr),
                    Some(o) => {
                        add(&mut next, base | (1 << self.bit(t)), pr.clone() * o.clone());
                        add(&mut next, base, pr * (T::one() - o));
                    }
                }
            }
            cur = next;
        }
        let mut out: HashMap<u32, T> = HashMap::with_capacity(cur.len());
        for (mask, pr) in cur {
            let m = mask & !old_mask;
            if m != 0 {
                add(&mut out, m, pr);
            }
        }
        out
    }
}

fn add<T: Clone + Num>(m: &mut HashMap<u32, T>, k: u32, v: T) {
    if v.is_zero() {
        return;
    }
    match m.get_mut(&k) {
        Some(x) => *x = x.clone() + v,
        None => {
            m.insert(k, v);
        }
    }
}

fn survival<T: Clone + Num>(w: i64, n: i64, p: &T) -> T {
    let strip = Strip { w };
    let mut dist: HashMap<u32, T> = HashMap::new();
    dist.insert(1 << strip.bit(0), T::one());
    for y in 0..n {
        dist = strip.step(y, dist, p);
        if dist.is_empty() {
            return T::zero();
        }
    }
    dist.into_values().fold(T::zero(), |a, b| a + b)
}

/// `P_p(0 -> ℓ_n)` for paths confined to columns `[-w, w]`.
pub fn strip_survival_exact(w: i64, n: i64, p: &Prob) -> Result<ExactProb> {
    check_width(w)?;
    if n < 0 {
        return Err(Error::invalid(format!("height must be non-negative, got {n}")));
    }
    let value = match p {
        Prob::Exact(r) => Prob::Exact(survival::<BigRational>(w, n, r)),
        Prob::Float(x) => Prob::Float(survival::<f64>(w, n, x)),
    };
    Ok(ExactProb {
        value,
        method: Method::TransferMatrix,
    })
}

/// Per-row survival decay factor `lambda` of the strip: `P(0 -> ℓ_n)` behaves
/// like `lambda^n` for large `n`. Computed by power iteration over two-row steps.
pub fn strip_decay_rate(w: i64, p: f64) -> Result<f64> {
    check_width(w)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("p must lie in [0, 1], got {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let strip = Strip { w };
    let mut dist: HashMap<u32, f64> = HashMap::new();
    dist.insert(1 << strip.bit(0), 1.0);
    let mut prev = f64::NAN;
    let mut y = 0;
    for _ in 0..200_000 {
        let mut growth = 1.0;
        for _ in 0..2 {
            dist = strip.step(y, dist, &p);
            y += 1;
            let mass: f64 = dist.values().sum();
            if mass == 0.0 {
                return Ok(0.0);
            }
            dist.values_mut().for_each(|v| *v /= mass);
            growth *= mass;
        }
        if (growth - prev).abs() <= 1e-14 * growth {
            return Ok(growth.sqrt());
        }
        prev = growth;
    }
    Ok(prev.sqrt())
}

/// Survival correlation length `-1 / ln lambda` of the strip, in rows.
pub fn strip_correlation_length(w: i64, p: f64) -> Result<f64> {
    let l = strip_decay_rate(w, p)?;
    Ok(if l <= 0.0 { 0.0 } else { -1.0 / l.ln() })
}

/// Effective anisotropy exponent between strips of half-widths `w1 < w2`:
/// `ln(xi(w2) / xi(w1)) / ln(L2 / L1)` with `L = 2w + 1`.
pub fn strip_effective_z(w1: i64, w2: i64, p: f64) -> Result<f64> {
    let (a, b) = (strip_correlation_length(w1, p)?, strip_correlation_length(w2, p)?);
    let (l1, l2) = ((2 * w1 + 1) as f64, (2 * w2 + 1) as f64);
    Ok((b / a).ln() / (l2 / l1).ln())
}

/// Critical point estimate from three strip widths `w, w+1, w+2`: the `p` at
/// which the effective exponents of the two consecutive pairs agree. Searched
/// by bisection in `[lo, hi]`; returns `None` if the difference has no sign
/// change there.
pub fn strip_pc_estimate(w: i64, lo: f64, hi: f64) -> Result<Option<f64>> {
    let f = |p: f64| -> Result<f64> {
        Ok(strip_effective_z(w, w + 1, p)? - strip_effective_z(w + 1, w + 2, p)?)
    };
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a)?, f(b)?);
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    let sa = fa.signum();
    for _ in 0..40 {
        let m = 0.5 * (a + b);
        if f(m)?.signum() == sa {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-7 {
            break;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

/// Limit of `y(x) = y_inf + a x^(-c)` through three points with `x0 < x1 < x2`
/// and monotone `y`. Returns `(y_inf, c)`, or `None` if the differences do not
/// shrink geometrically enough to fit such a tail.
pub fn three_point_limit(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let (d1, d2) = (y[0] - y[1], y[1] - y[2]);
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() {
        return None;
    }
    let target = d1 / d2;
    let ratio = |c: f64| (x[0].powf(-c) - x[1].powf(-c)) / (x[1].powf(-c) - x[2].powf(-c));
    // ratio(c) increases with c.
    let (mut lo, mut hi) = (1e-6, 50.0);
    if !(ratio(lo) < target && target < ratio(hi)) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let a = d1 / (x[0].powf(-c) - x[1].powf(-c));
    Some((y[2] - a * x[2].powf(-c), c))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StripPcExtrapolation {
    /// Half-widths `w` of the three-width estimates.
    pub widths: Vec<i64>,
    pub estimates: Vec<f64>,
    /// Limit of the estimates as a power of the strip size `2w + 1`.
    pub p_inf: f64,
    pub tail_exponent: f64,
}

/// [`strip_pc_estimate`] at `w, w+1, w+2`, extrapolated in the strip size.
pub fn strip_pc_extrapolated(w: i64) -> Result<StripPcExtrapolation> {
    check_width(w + 4)?;
    let mut estimates = Vec::with_capacity(3);
    for k in w..w + 3 {
        let e = strip_pc_estimate(k, 0.55, 0.75)?
            .ok_or_else(|| Error::invalid(format!("no effective-exponent crossing at w = {k}")))?;
        estimates.push(e);
    }
    let size = |k: i64| (2 * k + 1) as f64;
    let (p_inf, tail_exponent) = three_point_limit(
        [size(w), size(w + 1), size(w + 2)],
        [estimates[0], estimates[1], estimates[2]],
    )
    .ok_or_else(|| Error::invalid("strip estimates do not converge monotonically"))?;
    Ok(StripPcExtrapolation {
        widths: (w..w + 3).collect(),
        estimates,
        p_inf,
        tail_exponent,
    })
}
