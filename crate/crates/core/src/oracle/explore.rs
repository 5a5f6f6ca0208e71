//! Exact check that the region below a maximal crossing is unexplored.
//!
//! For every crossing `γ` that is the maximum for some configuration, the
//! edges touching sites strictly below `γ` must be product-distributed
//! conditionally on `{Γ = γ}`.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Rect, Site};
use crate::sweep::Path;

use super::graph::BoxGraph;

/// Largest box accepted by [`exploration_independence`].
pub const MAX_EXPLORE_EDGES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExploreReport {
    /// Distinct maximal crossings seen.
    pub crossings: usize,
    /// `(γ, assignment of the region below)` pairs whose joint probability
    /// differs from the product.
    pub violations: usize,
    /// Largest absolute discrepancy, as a float.
    pub max_discrepancy: f64,
}

/// Sites of `b` strictly below `path`: an upward vertical ray from the site
/// crosses the path an odd number of times, the path being extended
/// horizontally beyond its two ends.
pub fn sites_below(b: &Rect, path: &Path) -> HashSet<Site> {
    let sites = path.sites();
    let n = sites.len();
    let on: HashSet<Site> = sites.iter().copied().collect();
    let x_at = |i: isize| -> i64 {
        if i < 0 {
            sites[0].x() - 1
        } else if i as usize >= n {
            sites[n - 1].x() + 1
        } else {
            sites[i as usize].x()
        }
    };
    b.sites()
        .filter(|s| !on.contains(s))
        .filter(|s| {
            let crossings = (0..n)
                .filter(|&i| sites[i].x() == s.x() && sites[i].y() > s.y())
                .filter(|&i| {
                    let (a, c) = (x_at(i as isize - 1), x_at(i as isize + 1));
                    (a < s.x()) != (c < s.x())
                })
                .count();
            crossings % 2 == 1
        })
        .collect()
}

/// Exhaustive check at rational `p`, with the maximum taken under `order`.
pub fn exploration_independence(
    b: &Rect,
    p: &BigRational,
    order: impl Fn(&Path, &Path) -> Ordering,
) -> Result<ExploreReport> {
    let g = BoxGraph::new(*b);
    let e = g.edge_count();
    if e > MAX_EXPLORE_EDGES {
        return Err(Error::Capacity {
            what: "in-box edges for exploration check",
            needed: e,
            limit: MAX_EXPLORE_EDGES,
        });
    }
    let q = BigRational::one() - p;
    let pk: Vec<BigRational> = (0..=e).map(|k| num_traits::pow(p.clone(), k)).collect();
    let qk: Vec<BigRational> = (0..=e).map(|k| num_traits::pow(q.clone(), k)).collect();

    // Integer counts by (γ, assignment below γ, open edges elsewhere).
    let mut below_mask: HashMap<Path, u64> = HashMap::new();
    let mut counts: HashMap<(Path, u64), Vec<u64>> = HashMap::new();
    for c in 0..(1u64 << e) {
        let Some(gamma) = g.lr_crossings(c).into_iter().max_by(|a, b| order(a, b)) else {
            continue;
        };
        let s_mask = *below_mask.entry(gamma.clone()).or_insert_with(|| {
            let below = sites_below(b, &gamma);
            g.edges()
                .iter()
                .enumerate()
                .filter(|(_, ed)| below.contains(&ed.from) || below.contains(&ed.target()))
                .fold(0u64, |m, (i, _)| m | (1 << i))
        });
        let sigma = c & s_mask;
        let rest = (c & !s_mask).count_ones() as usize;
        counts
            .entry((gamma, sigma))
            .or_insert_with(|| vec![0; e + 1])[rest] += 1;
    }

    let mut report = ExploreReport {
        crossings: below_mask.len(),
        violations: 0,
        max_discrepancy: 0.0,
    };
    for (gamma, &s_mask) in &below_mask {
        let s_len = s_mask.count_ones() as usize;
        let outside = e - s_len;
        // P(Γ = γ, σ) for each assignment σ of the region below.
        let mut joint: HashMap<u64, BigRational> = HashMap::new();
        let mut marginal = BigRational::zero();
        let mut sub = s_mask;
        loop {
            let v = counts.get(&(gamma.clone(), sub));
            let so = sub.count_ones() as usize;
            let mut pr = BigRational::zero();
            if let Some(v) = v {
                for (k, &n) in v.iter().enumerate() {
                    if n != 0 {
                        pr += BigRational::from_integer(BigInt::from(n))
                            * &pk[k]
                            * &qk[outside - k];
                    }
                }
            }
            pr *= &pk[so] * &qk[s_len - so];
            marginal += &pr;
            joint.insert(sub, pr);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & s_mask;
        }
        for (sigma, pr) in &joint {
            let so = sigma.count_ones() as usize;
            let product = &marginal * &pk[so] * &qk[s_len - so];
            if *pr != product {
                report.violations += 1;
                let d: f64 = num_traits::ToPrimitive::to_f64(&(pr - &product)).unwrap_or(f64::NAN);
                report.max_discrepancy = report.max_discrepancy.max(d.abs());
            }
        }
    }
    Ok(report)
}
