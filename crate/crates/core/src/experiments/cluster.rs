use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{replica_id, tag, Estimate, Z95};
use crate::lattice::Site;
use crate::oracle::cone_box;
use crate::randfield::{EdgeConfig, Mode, SeedSpec};
use crate::sweep::{sweep, SourceSpec, SweepResult};

/// Conditioning event on the cluster of the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `0 -> ℓ_n`.
    Hit { n: i64 },
    /// `0 -> ℓ_a` and `0 -/-> ℓ_b`.
    Window { a: i64, b: i64 },
}

impl Condition {
    fn validate(&self) -> Result<()> {
        match *self {
            Condition::Hit { n } if n >= 0 => Ok(()),
            Condition::Window { a, b } if 0 <= a && a < b => Ok(()),
            c => Err(Error::invalid(format!("invalid condition {c:?} (need 0 <= a < b)"))),
        }
    }

    /// Rows that must be swept to decide the event.
    fn height(&self) -> i64 {
        match *self {
            Condition::Hit { n } => n,
            Condition::Window { b, .. } => b,
        }
    }

    fn holds(&self, highest: Option<i64>) -> bool {
        match (*self, highest) {
            (Condition::Hit { n }, Some(h)) => h >= n,
            (Condition::Window { a, b }, Some(h)) => a <= h && h < b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSample {
    pub condition: Condition,
    pub p: f64,
    pub seed: u64,
    /// Attempt index of the accepted replica (0-based).
    pub replica: u64,
    pub attempts: u64,
    pub acceptance: Estimate,
    /// Occupied sites, row by row.
    pub sites: Vec<(i64, i64)>,
    pub renewals: Vec<i64>,
    /// `(k, R_k)`: right-most occupied column of each non-empty row.
    pub rn_sequence: Vec<(i64, i64)>,
}

const CHUNK: u64 = 256;

fn attempt(p: f64, seed: u64, cond: &Condition, i: u64, keep: bool) -> SweepResult {
    let cfg = EdgeConfig::new(SeedSpec::new(seed, replica_id(tag::CLUSTER, 0, i)), p, Mode::Fast)
        .expect("p validated");
    sweep(&cfg, &cone_box(cond.height()), &SourceSpec::SingleOrigin, keep).expect("origin is in the cone")
}

/// Rejection-sample the cluster of the origin until `cond` holds.
///
/// Attempts are evaluated in parallel chunks, and the first accepted attempt
/// in index order is kept, so the result depends only on `seed`.
pub fn sample_conditioned_cluster(
    p: f64,
    cond: Condition,
    seed: u64,
    max_attempts: u64,
) -> Result<ClusterSample> {
    cond.validate()?;
    crate::randfield::quantize(p)?;
    let mut done = 0u64;
    while done < max_attempts {
        let end = (done + CHUNK).min(max_attempts);
        let hit = (done..end)
            .into_par_iter()
            .find_first(|&i| cond.holds(attempt(p, seed, &cond, i, false).highest_row));
        if let Some(i) = hit {
            let res = attempt(p, seed, &cond, i, true);
            let trace = res.trace.expect("trace requested");
            let top = res.highest_row.expect("accepted cluster is non-empty");
            let mut renewals = Vec::new();
            let mut rn_sequence = Vec::new();
            for k in 0..=top {
                let row = trace.row(k);
                if row.len() == 1 {
                    renewals.push(k);
                }
                if let Some(&r) = row.last() {
                    rn_sequence.push((k, r));
                }
            }
            return Ok(ClusterSample {
                condition: cond,
                p,
                seed,
                replica: i,
                attempts: i + 1,
                acceptance: Estimate::new(1, i + 1, Z95)?,
                sites: trace.sites().map(|s: Site| (s.x(), s.y())).collect(),
                renewals,
                rn_sequence,
            });
        }
        done = end;
    }
    Err(Error::AttemptsExhausted {
        attempts: max_attempts,
        rate: 0.0,
    })
}

/// Fraction of the first `attempts` replicas satisfying `cond`.
pub fn conditioned_acceptance(p: f64, cond: Condition, seed: u64, attempts: u64) -> Result<Estimate> {
    cond.validate()?;
    crate::randfield::quantize(p)?;
    let k = (0..attempts)
        .into_par_iter()
        .filter(|&i| cond.holds(attempt(p, seed, &cond, i, false).highest_row))
        .count() as u64;
    Estimate::new(k, attempts, Z95)
}
