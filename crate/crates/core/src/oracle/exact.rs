//! Exact probabilities by enumerating every configuration of a small box.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Rect;

use super::graph::BoxGraph;

/// Largest number of in-box edges accepted by exhaustive enumeration.
pub const MAX_ENUM_EDGES: usize = 24;

/// Float comparisons use this absolute tolerance.
pub const FLOAT_TOL: f64 = 1e-12;

/// A probability, exact when it has a small denominator.
#[derive(Debug, Clone, PartialEq)]
pub enum Prob {
    Exact(BigRational),
    Float(f64),
}

impl Prob {
    /// `a / b`.
    pub fn ratio(a: i64, b: i64) -> Result<Prob> {
        if b <= 0 || a < 0 || a > b {
            return Err(Error::invalid(format!("{a}/{b} is not a probability")));
        }
        Ok(Prob::Exact(BigRational::new(a.into(), b.into())))
    }

    /// Exact when `p = a/b` with `b <= 2^16`, float otherwise.
    pub fn from_f64(p: f64) -> Result<Prob> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("p must lie in [0, 1], got {p}")));
        }
        for b in 1..=(1i64 << 16) {
            let a = (p * b as f64).round();
            if a / b as f64 == p {
                return Prob::ratio(a as i64, b);
            }
        }
        Ok(Prob::Float(p))
    }

    pub fn zero() -> Prob {
        Prob::Exact(BigRational::zero())
    }

    pub fn one() -> Prob {
        Prob::Exact(BigRational::one())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Prob::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Prob::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Prob::Float(x) => *x,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Prob::Exact(r) => Some(r),
            Prob::Float(_) => None,
        }
    }

    fn complement(&self) -> Prob {
        match self {
            Prob::Exact(r) => Prob::Exact(BigRational::one() - r),
            Prob::Float(x) => Prob::Float(1.0 - x),
        }
    }

    fn mul(&self, o: &Prob) -> Prob {
        match (self, o) {
            (Prob::Exact(a), Prob::Exact(b)) => Prob::Exact(a * b),
            _ => Prob::Float(self.to_f64() * o.to_f64()),
        }
    }

    fn powi(&self, k: usize) -> Prob {
        match self {
            Prob::Exact(r) => Prob::Exact(num_traits::pow(r.clone(), k)),
            Prob::Float(x) => Prob::Float(x.powi(k as i32)),
        }
    }

    /// `self >= o`, exactly for rationals, with [`FLOAT_TOL`] slack otherwise.
    pub fn ge(&self, o: &Prob) -> bool {
        match (self, o) {
            (Prob::Exact(a), Prob::Exact(b)) => a >= b,
            _ => self.to_f64() >= o.to_f64() - FLOAT_TOL,
        }
    }

    /// Equality, exact for rationals, within [`FLOAT_TOL`] otherwise.
    pub fn agrees(&self, o: &Prob) -> bool {
        match (self, o) {
            (Prob::Exact(a), Prob::Exact(b)) => a == b,
            _ => (self.to_f64() - o.to_f64()).abs() < FLOAT_TOL,
        }
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prob::Exact(r) => write!(f, "{r}"),
            Prob::Float(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Prob {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Enumeration,
    TransferMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactProb {
    pub value: Prob,
    pub method: Method,
}

/// A predicate over configurations of a box's edges, with its declared monotonicity.
pub struct EventSpec<'a> {
    pub name: String,
    pub increasing: bool,
    pred: Box<dyn Fn(u64) -> bool + Send + Sync + 'a>,
}

impl<'a> EventSpec<'a> {
    pub fn new(
        name: impl Into<String>,
        increasing: bool,
        pred: impl Fn(u64) -> bool + Send + Sync + 'a,
    ) -> EventSpec<'a> {
        EventSpec {
            name: name.into(),
            increasing,
            pred: Box::new(pred),
        }
    }

    #[inline]
    pub fn eval(&self, open: u64) -> bool {
        (self.pred)(open)
    }

    pub fn vertical(g: &'a BoxGraph) -> EventSpec<'a> {
        EventSpec::new("vertical", true, move |c| g.vertical_crossing(c))
    }

    pub fn left_right(g: &'a BoxGraph) -> EventSpec<'a> {
        EventSpec::new("left-right", true, move |c| g.lr_crossing(c))
    }

    pub fn right_left(g: &'a BoxGraph) -> EventSpec<'a> {
        EventSpec::new("right-left", true, move |c| g.rl_crossing(c))
    }
}

impl fmt::Debug for EventSpec<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventSpec")
            .field("name", &self.name)
            .field("increasing", &self.increasing)
            .finish()
    }
}

fn check_capacity(edges: usize) -> Result<()> {
    if edges > MAX_ENUM_EDGES {
        return Err(Error::Capacity {
            what: "in-box edges for enumeration",
            needed: edges,
            limit: MAX_ENUM_EDGES,
        });
    }
    Ok(())
}

/// Number of configurations in the event, by number of open edges.
///
/// Independent of `p`: `P_p(A) = sum_k counts[k] p^k (1-p)^(E-k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    pub edges: usize,
    pub by_open: Vec<u64>,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.by_open.iter().sum()
    }

    pub fn prob(&self, p: &Prob) -> Prob {
        weighted_sum(self.edges, &self.by_open, p)
    }
}

fn weighted_sum(edges: usize, by_open: &[u64], p: &Prob) -> Prob {
    match p {
        Prob::Exact(r) => {
            let q = BigRational::one() - r;
            let mut acc = BigRational::zero();
            for (k, &c) in by_open.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let term = num_traits::pow(r.clone(), k) * num_traits::pow(q.clone(), edges - k);
                acc += term * BigRational::from_integer(BigInt::from(c));
            }
            Prob::Exact(acc)
        }
        Prob::Float(x) => {
            let mut acc = 0.0;
            for (k, &c) in by_open.iter().enumerate() {
                if c != 0 {
                    acc += c as f64 * x.powi(k as i32) * (1.0 - x).powi((edges - k) as i32);
                }
            }
            Prob::Float(acc)
        }
    }
}

/// Indicator of the event for every configuration, one bit each.
fn event_bitmap(edges: usize, ev: &EventSpec) -> Vec<u64> {
    let total = 1u64 << edges;
    let words = total.div_ceil(64) as usize;
    (0..words)
        .into_par_iter()
        .map(|w| {
            let mut v = 0u64;
            for b in 0..64u64 {
                let c = (w as u64) * 64 + b;
                if c < total && ev.eval(c) {
                    v |= 1 << b;
                }
            }
            v
        })
        .collect()
}

#[inline]
fn bit(map: &[u64], c: u64) -> bool {
    (map[(c >> 6) as usize] >> (c & 63)) & 1 == 1
}

fn check_monotone(edges: usize, map: &[u64], ev: &EventSpec) -> Result<()> {
    let total = 1u64 << edges;
    let bad = (0..total).into_par_iter().find_first(|&c| {
        bit(map, c) && (0..edges).any(|e| (c >> e) & 1 == 0 && !bit(map, c | (1 << e)))
    });
    match bad {
        None => Ok(()),
        Some(c) => {
            let e = (0..edges)
                .find(|&e| (c >> e) & 1 == 0 && !bit(map, c | (1 << e)))
                .unwrap();
            Err(Error::NotMonotone {
                event: ev.name.clone(),
                config: c,
                edge: e,
            })
        }
    }
}

fn counts_from_map(edges: usize, map: &[u64]) -> Counts {
    let total = 1u64 << edges;
    let by_open = (0..total)
        .into_par_iter()
        .fold(
            || vec![0u64; edges + 1],
            |mut acc, c| {
                if bit(map, c) {
                    acc[c.count_ones() as usize] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; edges + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Counts { edges, by_open }
}

/// Counts for `ev` over all configurations of `b`'s edges. Declared-increasing
/// events are checked for monotonicity on the way.
pub fn event_counts(b: &Rect, ev: &EventSpec) -> Result<Counts> {
    let edges = b.edges().len();
    check_capacity(edges)?;
    let map = event_bitmap(edges, ev);
    if ev.increasing {
        check_monotone(edges, &map, ev)?;
    }
    Ok(counts_from_map(edges, &map))
}

/// `P_p(ev)` by summing over all `2^E` configurations of the edges of `b`.
pub fn exact_event_prob(b: &Rect, p: &Prob, ev: &EventSpec) -> Result<ExactProb> {
    let c = event_counts(b, ev)?;
    Ok(ExactProb {
        value: c.prob(p),
        method: Method::Enumeration,
    })
}

/// Exact law of an integer statistic of the configuration; `None` values are
/// collected under the key `None`.
pub fn exact_law(
    b: &Rect,
    p: &Prob,
    stat: impl Fn(u64) -> Option<i64> + Sync,
) -> Result<BTreeMap<Option<i64>, Prob>> {
    let edges = b.edges().len();
    check_capacity(edges)?;
    let total = 1u64 << edges;
    let table: BTreeMap<Option<i64>, Vec<u64>> = (0..total)
        .into_par_iter()
        .fold(BTreeMap::new, |mut m: BTreeMap<Option<i64>, Vec<u64>>, c| {
            m.entry(stat(c)).or_insert_with(|| vec![0; edges + 1])[c.count_ones() as usize] += 1;
            m
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                let e = a.entry(k).or_insert_with(|| vec![0; edges + 1]);
                e.iter_mut().zip(v).for_each(|(x, y)| *x += y);
            }
            a
        });
    Ok(table
        .into_iter()
        .map(|(k, v)| (k, weighted_sum(edges, &v, p)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FkgReport {
    pub p_a: Prob,
    pub p_b: Prob,
    pub p_ab: Prob,
    pub product: Prob,
    pub holds: bool,
    /// `P(A and B) - P(A) P(B)` as a float.
    pub slack: f64,
}

/// Exact check of `P(A and B) >= P(A) P(B)` for increasing `A`, `B`.
pub fn fkg_check(b: &Rect, p: &Prob, a: &EventSpec, bb: &EventSpec) -> Result<FkgReport> {
    for ev in [a, bb] {
        if !ev.increasing {
            return Err(Error::invalid(format!("event '{}' is not declared increasing", ev.name)));
        }
    }
    let ca = event_counts(b, a)?;
    let cb = event_counts(b, bb)?;
    let both = EventSpec::new(format!("{} and {}", a.name, bb.name), false, |c| {
        a.eval(c) && bb.eval(c)
    });
    let cab = event_counts(b, &both)?;
    let (p_a, p_b, p_ab) = (ca.prob(p), cb.prob(p), cab.prob(p));
    let product = p_a.mul(&p_b);
    let holds = p_ab.ge(&product);
    let slack = p_ab.to_f64() - product.to_f64();
    Ok(FkgReport {
        p_a,
        p_b,
        p_ab,
        product,
        holds,
        slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SrtReport {
    pub probs: Vec<Prob>,
    pub max: Prob,
    pub union: Prob,
    /// `1 - (1 - P(union))^(1/N)` as a float (the comparison itself is exact).
    pub bound: f64,
    pub holds: bool,
    /// The maximum is strictly above the bound.
    pub strict: bool,
}

/// Exact check of `max_i P(A_i) >= 1 - (1 - P(union A_i))^(1/N)`, done as
/// `(1 - max)^N <= 1 - P(union)` so no roots are taken.
pub fn srt_check(b: &Rect, p: &Prob, events: &[EventSpec]) -> Result<SrtReport> {
    if events.is_empty() {
        return Err(Error::invalid("square-root trick needs at least one event"));
    }
    for ev in events {
        if !ev.increasing {
            return Err(Error::invalid(format!("event '{}' is not declared increasing", ev.name)));
        }
    }
    let probs: Vec<Prob> = events
        .iter()
        .map(|e| event_counts(b, e).map(|c| c.prob(p)))
        .collect::<Result<_>>()?;
    let any = EventSpec::new("union", true, |c| events.iter().any(|e| e.eval(c)));
    let union = event_counts(b, &any)?.prob(p);
    let mut max = probs[0].clone();
    for q in &probs[1..] {
        if q.ge(&max) {
            max = q.clone();
        }
    }
    let n = events.len();
    let lhs = max.complement().powi(n);
    let rhs = union.complement();
    let holds = rhs.ge(&lhs);
    let strict = match (&lhs, &rhs) {
        (Prob::Exact(l), Prob::Exact(r)) => r > l,
        _ => rhs.to_f64() > lhs.to_f64() + FLOAT_TOL,
    };
    let bound = 1.0 - (1.0 - union.to_f64()).powf(1.0 / n as f64);
    Ok(SrtReport {
        probs,
        max,
        union,
        bound,
        holds,
        strict,
    })
}

/// `|a - b|` as a float, for reports.
pub fn abs_diff(a: &Prob, b: &Prob) -> f64 {
    match (a, b) {
        (Prob::Exact(x), Prob::Exact(y)) => (x - y).abs().to_f64().unwrap_or(f64::NAN),
        _ => (a.to_f64() - b.to_f64()).abs(),
    }
}
