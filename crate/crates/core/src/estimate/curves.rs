use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::randfield::{EdgeConfig, Mode, SeedSpec};
use crate::sweep::{cluster_stats, halfline_stats, sweep, SourceSpec};

use super::{count_hits, replica_id, tag, Estimate, Z95};

/// What the `estimate` column of a [`ScalingTable`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    /// A proportion `k / N`.
    Probability,
    /// A sample mean over `k` contributing replicas.
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: i64,
    /// `NaN` when no replica contributed (see `flagged`).
    pub estimate: f64,
    pub stderr: f64,
    pub k: u64,
    #[serde(rename = "N")]
    pub trials: u64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub quantity: Quantity,
    pub seed: u64,
    pub rows: Vec<ScalingRow>,
}

impl ScalingTable {
    pub fn new(quantity: Quantity, seed: u64) -> ScalingTable {
        ScalingTable {
            quantity,
            seed,
            rows: Vec::new(),
        }
    }

    /// A noiseless table, mainly for tests of the fitter.
    pub fn exact(points: &[(i64, f64)]) -> ScalingTable {
        ScalingTable {
            quantity: Quantity::Mean,
            seed: 0,
            rows: points
                .iter()
                .map(|&(n, v)| ScalingRow {
                    n,
                    estimate: v,
                    stderr: 0.0,
                    k: 0,
                    trials: 0,
                    flagged: false,
                })
                .collect(),
        }
    }

    pub fn get(&self, n: i64) -> Option<&ScalingRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

fn check_n_list(n_list: &[i64], trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::invalid("need at least one replica"));
    }
    if n_list.iter().any(|&n| n < 0) {
        return Err(Error::invalid("heights must be non-negative"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("n_list must be strictly ascending"));
    }
    if n_list.len() > u16::MAX as usize {
        return Err(Error::invalid("too many rows"));
    }
    Ok(())
}

fn config(seed: u64, replica: u64, p: f64) -> EdgeConfig {
    EdgeConfig::new(SeedSpec::new(seed, replica), p, Mode::Fast).expect("p validated")
}

/// `P̂_p(0 -> ℓ_n)` for each `n`, every row from its own `trials` replicas.
pub fn survival_curve(p: f64, n_list: &[i64], trials: u64, seed: u64) -> Result<ScalingTable> {
    check_n_list(n_list, trials)?;
    crate::randfield::quantize(p)?;
    let mut table = ScalingTable::new(Quantity::Probability, seed);
    for (j, &n) in n_list.iter().enumerate() {
        let b = crate::oracle::cone_box(n);
        let k = count_hits(0..trials, |i| {
            let cfg = config(seed, replica_id(tag::SURVIVAL, j as u16, i), p);
            sweep(&cfg, &b, &SourceSpec::SingleOrigin, false)
                .map(|r| r.reached_top)
                .unwrap_or(false)
        });
        let est = Estimate::new(k, trials, Z95)?;
        table.rows.push(ScalingRow {
            n,
            estimate: est.p_hat,
            stderr: est.stderr(),
            k,
            trials,
            flagged: false,
        });
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WidthOptions {
    /// Half-line replicas per row; `None` uses `trials`, `Some(0)` skips them.
    pub halfline_replicas: Option<u64>,
    /// Initial half-line truncation; `None` means `2n`.
    pub halfline_w0: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    pub n: i64,
    pub trials: u64,
    pub hits: u64,
    /// Replicas discarded by the conditioning.
    pub rejected: u64,
    pub survival: Estimate,
    /// `E(R_n | 0 -> ℓ_n)` and friends; `None` without hits.
    pub mean_rn: Option<f64>,
    pub var_rn: Option<f64>,
    pub stderr_rn: Option<f64>,
    pub mean_neg_ln: Option<f64>,
    /// Mean number of renewal heights in `[0, n]` per surviving cluster.
    pub mean_renewals: Option<f64>,
    pub halfline_replicas: u64,
    /// `E(R_n)`, `Var(R_n)` and `E(R_n⁺)` for the half-line source.
    pub halfline_mean: Option<f64>,
    pub halfline_var: Option<f64>,
    pub halfline_mean_plus: Option<f64>,
    /// Half-line replicas whose truncation stayed suspicious at the largest width.
    pub truncated: u64,
    /// No hits at this height.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthCurve {
    pub p: f64,
    pub seed: u64,
    pub rows: Vec<WidthRow>,
}

impl WidthCurve {
    /// `E(R_n | 0 -> ℓ_n)` as a scaling table.
    pub fn mean_table(&self) -> ScalingTable {
        ScalingTable {
            quantity: Quantity::Mean,
            seed: self.seed,
            rows: self
                .rows
                .iter()
                .map(|r| ScalingRow {
                    n: r.n,
                    estimate: r.mean_rn.unwrap_or(f64::NAN),
                    stderr: r.stderr_rn.unwrap_or(f64::NAN),
                    k: r.hits,
                    trials: r.trials,
                    flagged: r.flagged,
                })
                .collect(),
        }
    }

    /// Survival estimates from the same replicas.
    pub fn survival_table(&self) -> ScalingTable {
        ScalingTable {
            quantity: Quantity::Probability,
            seed: self.seed,
            rows: self
                .rows
                .iter()
                .map(|r| ScalingRow {
                    n: r.n,
                    estimate: r.survival.p_hat,
                    stderr: r.survival.stderr(),
                    k: r.hits,
                    trials: r.trials,
                    flagged: false,
                })
                .collect(),
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Moments {
    count: u64,
    sum: i128,
    sum2: i128,
}

impl Moments {
    fn one(v: i64) -> Moments {
        Moments {
            count: 1,
            sum: v as i128,
            sum2: (v as i128) * (v as i128),
        }
    }

    fn add(self, o: Moments) -> Moments {
        Moments {
            count: self.count + o.count,
            sum: self.sum + o.sum,
            sum2: self.sum2 + o.sum2,
        }
    }

    fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum as f64 / self.count as f64)
    }

    /// Unbiased sample variance.
    fn var(&self) -> Option<f64> {
        (self.count > 1).then(|| {
            let c = self.count as i128;
            // Exact integer numerator: c * sum2 - sum^2.
            let num = c * self.sum2 - self.sum * self.sum;
            num as f64 / (c as f64 * (c - 1) as f64)
        })
    }
}

#[derive(Default, Clone, Copy)]
struct OriginTally {
    rn: Moments,
    neg_ln: Moments,
    renewals: u64,
}

impl OriginTally {
    fn add(self, o: OriginTally) -> OriginTally {
        OriginTally {
            rn: self.rn.add(o.rn),
            neg_ln: self.neg_ln.add(o.neg_ln),
            renewals: self.renewals + o.renewals,
        }
    }
}

#[derive(Default, Clone, Copy)]
struct HalfTally {
    r: Moments,
    r_plus: Moments,
    truncated: u64,
}

impl HalfTally {
    fn add(self, o: HalfTally) -> HalfTally {
        HalfTally {
            r: self.r.add(o.r),
            r_plus: self.r_plus.add(o.r_plus),
            truncated: self.truncated + o.truncated,
        }
    }
}

/// Conditional law of `R_n` given `0 -> ℓ_n`, mean of `R_n⁺` from the
/// half-line, and renewal counts, for each `n`.
pub fn width_curve(
    p: f64,
    n_list: &[i64],
    trials: u64,
    seed: u64,
    opts: &WidthOptions,
) -> Result<WidthCurve> {
    check_n_list(n_list, trials)?;
    crate::randfield::quantize(p)?;
    let half_reps = opts.halfline_replicas.unwrap_or(trials);
    let mut rows = Vec::with_capacity(n_list.len());
    for (j, &n) in n_list.iter().enumerate() {
        let origin = (0..trials)
            .into_par_iter()
            .map(|i| {
                let cfg = config(seed, replica_id(tag::WIDTH, j as u16, i), p);
                let s = cluster_stats(&cfg, n, &SourceSpec::SingleOrigin).expect("origin source");
                match (s.rn, s.ln) {
                    (Some(r), Some(l)) => OriginTally {
                        rn: Moments::one(r),
                        neg_ln: Moments::one(-l),
                        renewals: s.renewal_heights.len() as u64,
                    },
                    _ => OriginTally::default(),
                }
            })
            .reduce(OriginTally::default, OriginTally::add);
        let half = if half_reps > 0 && n > 0 {
            (0..half_reps)
                .into_par_iter()
                .map(|i| {
                    let cfg = config(seed, replica_id(tag::HALFLINE, j as u16, i), p);
                    let s = halfline_stats(&cfg, n, opts.halfline_w0).expect("half-line source");
                    match s.rn {
                        Some(r) => HalfTally {
                            r: Moments::one(r),
                            r_plus: Moments::one(r.max(0)),
                            truncated: s.truncation_flag as u64,
                        },
                        // R_n = -inf: contributes R_n⁺ = 0 only.
                        None => HalfTally {
                            r: Moments::default(),
                            r_plus: Moments::one(0),
                            truncated: 0,
                        },
                    }
                })
                .reduce(HalfTally::default, HalfTally::add)
        } else {
            HalfTally::default()
        };
        let hits = origin.rn.count;
        let var_rn = origin.rn.var();
        rows.push(WidthRow {
            n,
            trials,
            hits,
            rejected: trials - hits,
            survival: Estimate::new(hits, trials, Z95)?,
            mean_rn: origin.rn.mean(),
            var_rn,
            stderr_rn: var_rn.map(|v| (v / hits as f64).sqrt()),
            mean_neg_ln: origin.neg_ln.mean(),
            mean_renewals: (hits > 0).then(|| origin.renewals as f64 / hits as f64),
            halfline_replicas: if n > 0 { half_reps } else { 0 },
            halfline_mean: half.r.mean(),
            halfline_var: half.r.var(),
            halfline_mean_plus: half.r_plus.mean(),
            truncated: half.truncated,
            flagged: hits == 0,
        });
    }
    Ok(WidthCurve { p, seed, rows })
}

/// Samples of `R_n` and `-L_n` over the surviving replicas, in replica order.
pub fn conditional_extremes(p: f64, n: i64, trials: u64, seed: u64) -> Result<(Vec<i64>, Vec<i64>)> {
    check_n_list(&[n], trials)?;
    crate::randfield::quantize(p)?;
    let pairs: Vec<(i64, i64)> = (0..trials)
        .into_par_iter()
        .filter_map(|i| {
            let cfg = config(seed, replica_id(tag::WIDTH, 0, i), p);
            let s = cluster_stats(&cfg, n, &SourceSpec::SingleOrigin).expect("origin source");
            Some((s.rn?, -s.ln?))
        })
        .collect();
    Ok(pairs.into_iter().unzip())
}
