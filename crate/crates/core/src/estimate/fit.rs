use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::curves::{Quantity, ScalingTable};

/// Bootstrap replicates.
pub const BOOTSTRAP: usize = 1000;

/// Reduced chi-square above which the residuals are flagged.
pub const RESIDUAL_FLAG: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// `b` in `value ≈ a n^b`.
    pub exponent: f64,
    pub amplitude: f64,
    /// 95% percentile bootstrap interval of the exponent.
    pub ci: (f64, f64),
    /// Weighted residual sum of squares over degrees of freedom; `None` for
    /// unweighted fits.
    pub chi2_dof: Option<f64>,
    /// Residuals of `ln value`.
    pub residuals: Vec<f64>,
    pub residuals_flagged: bool,
    pub rows_used: Vec<i64>,
    pub excluded: Vec<i64>,
    pub warnings: Vec<String>,
}

struct Point {
    x: f64,
    y: f64,
    w: f64,
}

fn wls(pts: &[Point]) -> (f64, f64) {
    let sw: f64 = pts.iter().map(|p| p.w).sum();
    let xm = pts.iter().map(|p| p.w * p.x).sum::<f64>() / sw;
    let ym = pts.iter().map(|p| p.w * p.y).sum::<f64>() / sw;
    let sxy: f64 = pts.iter().map(|p| p.w * (p.x - xm) * (p.y - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| p.w * (p.x - xm) * (p.x - xm)).sum();
    let slope = sxy / sxx;
    (slope, ym - slope * xm)
}

/// Weighted least squares of `ln value` on `ln n`, weights `(value / stderr)^2`
/// (equal weights when some row has no positive stderr). The exponent
/// interval comes from a parametric bootstrap: binomial counts for
/// probability rows, normal means for mean rows, seeded by the table seed.
pub fn fit_power_law(table: &ScalingTable) -> Result<PowerLawFit> {
    let mut warnings = Vec::new();
    let mut excluded = Vec::new();
    let rows: Vec<_> = table
        .rows
        .iter()
        .filter(|r| {
            let ok = !r.flagged && r.n > 0 && r.estimate.is_finite() && r.estimate > 0.0;
            if !ok {
                excluded.push(r.n);
                warnings.push(format!("row n={} excluded: estimate {}", r.n, r.estimate));
            }
            ok
        })
        .collect();
    if rows.len() < 3 {
        return Err(Error::TooFewRows { usable: rows.len() });
    }
    let weighted = rows.iter().all(|r| r.stderr.is_finite() && r.stderr > 0.0);
    let weight = |v: f64, se: f64| if weighted { (v / se).powi(2) } else { 1.0 };
    let pts: Vec<Point> = rows
        .iter()
        .map(|r| Point {
            x: (r.n as f64).ln(),
            y: r.estimate.ln(),
            w: weight(r.estimate, r.stderr),
        })
        .collect();
    if pts.iter().all(|p| p.x == pts[0].x) {
        return Err(Error::invalid("power-law fit needs at least two distinct n"));
    }
    let (slope, icpt) = wls(&pts);
    let residuals: Vec<f64> = pts.iter().map(|p| p.y - (icpt + slope * p.x)).collect();
    let chi2_dof = weighted.then(|| {
        pts.iter()
            .zip(&residuals)
            .map(|(p, r)| p.w * r * r)
            .sum::<f64>()
            / (pts.len() - 2) as f64
    });

    let mut rng = ChaCha8Rng::seed_from_u64(table.seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut boot = Vec::with_capacity(BOOTSTRAP);
    for _ in 0..BOOTSTRAP {
        let mut sample = Vec::with_capacity(rows.len());
        for r in &rows {
            let v = match table.quantity {
                Quantity::Probability if r.trials > 0 && r.stderr > 0.0 => {
                    let k = Binomial::new(r.trials, r.estimate.min(1.0))
                        .expect("probability in [0, 1]")
                        .sample(&mut rng);
                    k as f64 / r.trials as f64
                }
                _ if r.stderr.is_finite() && r.stderr > 0.0 => {
                    r.estimate + r.stderr * Normal::new(0.0, 1.0).expect("unit normal").sample(&mut rng)
                }
                _ => r.estimate,
            };
            if v > 0.0 {
                sample.push(Point {
                    x: (r.n as f64).ln(),
                    y: v.ln(),
                    w: weight(v, r.stderr),
                });
            }
        }
        if sample.len() >= 3 {
            boot.push(wls(&sample).0);
        }
    }
    let ci = if boot.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        boot.sort_by(f64::total_cmp);
        let at = |q: f64| boot[((q * (boot.len() - 1) as f64).round() as usize).min(boot.len() - 1)];
        (at(0.025), at(0.975))
    };
    Ok(PowerLawFit {
        exponent: slope,
        amplitude: icpt.exp(),
        ci,
        chi2_dof,
        residuals,
        residuals_flagged: chi2_dof.is_some_and(|c| c > RESIDUAL_FLAG),
        rows_used: rows.iter().map(|r| r.n).collect(),
        excluded,
        warnings,
    })
}
