use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{replica_id, tag};
use crate::lattice::Rect;
use crate::randfield::{quantize, EdgeConfig, Mode, SeedSpec};
use crate::sweep::{crosses, crossing_threshold, rightmost_profile, segment_gain, sweep, Crossing, SourceSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// (seed, box, kind) triples examined over the whole grid.
    pub sequences: u64,
    /// Steps of the grid where an indicator went from 1 to 0.
    pub violations: u64,
    /// Indicators disagreeing with the replica's crossing threshold.
    pub threshold_mismatches: u64,
}

/// Coupled-mode crossing indicators along an increasing `p` grid, for every
/// master seed in `seeds` and every `(box, kind)` fixture.
pub fn coupled_monotonicity_audit(
    seeds: &[u64],
    p_grid: &[f64],
    fixtures: &[(Rect, Crossing)],
) -> Result<MonotonicityReport> {
    if p_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("p grid must be strictly increasing"));
    }
    let qs: Vec<u64> = p_grid.iter().map(|&p| quantize(p)).collect::<Result<_>>()?;
    let per_seed: Vec<(u64, u64, u64)> = seeds
        .par_iter()
        .map(|&seed| {
            let base = EdgeConfig::new(SeedSpec::new(seed, 0), 0.0, Mode::Coupled).expect("valid");
            let (mut seqs, mut bad, mut mism) = (0, 0, 0);
            for (b, kind) in fixtures {
                seqs += 1;
                let t = crossing_threshold(&base, b, *kind);
                let mut last = false;
                for &q in &qs {
                    let now = crosses(&base.with_q(q), b, *kind);
                    bad += (last && !now) as u64;
                    mism += (now != t.is_some_and(|t| t <= q)) as u64;
                    last = now;
                }
            }
            (seqs, bad, mism)
        })
        .collect();
    Ok(MonotonicityReport {
        sequences: per_seed.iter().map(|r| r.0).sum(),
        violations: per_seed.iter().map(|r| r.1).sum(),
        threshold_mismatches: per_seed.iter().map(|r| r.2).sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub n: i64,
    pub m: i64,
    pub replicas: u64,
    /// Half-line truncation width.
    pub w: i64,
    pub violations: u64,
    pub mean_r0n: f64,
    pub mean_r0m: f64,
    pub mean_rmn: f64,
}

/// Checks `R⁺_{0,n} <= R⁺_{0,m} + R⁺_{m,n}` replica by replica, with the
/// half-line truncated at `w = 2n`.
pub fn subadditivity_audit(p: f64, n: i64, m: i64, replicas: u64, seed: u64) -> Result<SubadditivityReport> {
    if !(0 <= m && m <= n) {
        return Err(Error::invalid(format!("need 0 <= m <= n, got m={m}, n={n}")));
    }
    quantize(p)?;
    let w = 2 * n.max(1);
    let (bad, s0n, s0m, smn) = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let cfg = EdgeConfig::new(SeedSpec::new(seed, replica_id(tag::SUBADD, m as u16, i)), p, Mode::Fast)
                .expect("p validated");
            let prof = rightmost_profile(&cfg, n, w).expect("half-line source");
            let plus = |k: i64| prof[k as usize].map_or(0, |r| r.max(0));
            let (r0n, r0m) = (plus(n), plus(m));
            let rmn = segment_gain(&cfg, m, n, w, r0m);
            ((r0n > r0m + rmn) as u64, r0n, r0m, rmn)
        })
        .reduce(|| (0, 0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3));
    let mean = |s: i64| s as f64 / replicas.max(1) as f64;
    Ok(SubadditivityReport {
        n,
        m,
        replicas,
        w,
        violations: bad,
        mean_r0n: mean(s0n),
        mean_r0m: mean(s0m),
        mean_rmn: mean(smn),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    pub site_updates: u64,
    pub seconds: f64,
    pub per_second: f64,
}

/// Single-threaded bottom-row sweeps of `[0, width] x [0, height]`; a site
/// update is one lattice site of a swept row.
pub fn throughput(p: f64, width: i64, height: i64, replicas: u64, seed: u64) -> Result<Throughput> {
    let b = Rect::with_dims(width, height)?;
    let per_row = ((width + 1) / 2 + 1) as u64;
    let start = Instant::now();
    let mut updates = 0u64;
    for i in 0..replicas {
        let cfg = EdgeConfig::new(SeedSpec::new(seed, i), p, Mode::Fast)?;
        let r = sweep(&cfg, &b, &SourceSpec::BottomRow, false)?;
        updates += per_row * r.highest_row.map_or(0, |h| (h - b.y_min) as u64);
    }
    let seconds = start.elapsed().as_secs_f64();
    Ok(Throughput {
        site_updates: updates,
        seconds,
        per_second: updates as f64 / seconds.max(1e-9),
    })
}
