use super::*;
use crate::lattice::Rect;
use crate::oracle::{exact_event_prob, BoxGraph, EventSpec, Prob, MAX_ENUM_EDGES};
use crate::sweep::Crossing;

fn quick() -> ExperimentOptions {
    ExperimentOptions {
        wn_trials: 400,
        wn_max_samples: 1 << 12,
        halfline_replicas: Some(200),
        ..ExperimentOptions::default()
    }
}

#[test]
fn box_audit_is_not_applicable_at_p_one() {
    let rep = box_crossing_audit(1.0, &[8, 16], WnParams::default(), 50, 0.02, 1, &quick(), None).unwrap();
    assert_eq!(rep.status, Status::NotApplicable);
}

#[test]
fn box_audit_estimates_match_enumeration_on_tiny_boxes() {
    let p = 0.5;
    let rep = box_crossing_audit(p, &[2, 3], WnParams::default(), 40_000, 0.02, 3, &quick(), None).unwrap();
    let mut compared = 0;
    for row in &rep.rows {
        let n = row["n"].as_i64().unwrap();
        let w = row["w_hat"].as_i64().unwrap();
        for (key, kind, m, h) in [
            ("H_3w_n", Crossing::LeftRight, 3 * w, n),
            ("V_w_3n", Crossing::Vertical, w, 3 * n),
            ("H_w_3n", Crossing::LeftRight, w, 3 * n),
            ("V_3w_n", Crossing::Vertical, 3 * w, n),
        ] {
            let b = Rect::with_dims(m, h).unwrap();
            if b.edges().len() > MAX_ENUM_EDGES {
                continue;
            }
            let g = BoxGraph::new(b);
            let ev = match kind {
                Crossing::Vertical => EventSpec::vertical(&g),
                _ => EventSpec::left_right(&g),
            };
            let exact = exact_event_prob(&b, &Prob::ratio(1, 2).unwrap(), &ev).unwrap().value.to_f64();
            let e: Estimate = serde_json::from_value(row[key].clone()).unwrap();
            assert!(
                (e.p_hat - exact).abs() <= 4.0 * e.half_width().max(1e-9),
                "{key} n={n}: {} vs {exact}",
                e.p_hat
            );
            compared += 1;
        }
    }
    assert!(compared >= 4, "only {compared} boxes small enough");
}

#[test]
fn box_audit_report_is_reproducible() {
    let a = box_crossing_audit(0.65, &[16, 32], WnParams::default(), 500, 0.02, 9, &quick(), None).unwrap();
    let b = box_crossing_audit(0.65, &[16, 32], WnParams::default(), 500, 0.02, 9, &quick(), None).unwrap();
    assert_eq!(a.to_jsonl(), b.to_jsonl());
    assert!(a.to_jsonl().lines().count() == 1 + 2 + 8 + 1);
}

#[test]
fn shared_width_table_must_match() {
    let t = WnTable::compute(0.65, &[16], WnParams::default(), 1, &quick()).unwrap();
    assert!(box_crossing_audit(0.6, &[16], WnParams::default(), 100, 0.02, 1, &quick(), Some(&t)).is_err());
    assert!(box_crossing_audit(0.65, &[32], WnParams::default(), 100, 0.02, 1, &quick(), Some(&t)).is_err());
    let direct = box_crossing_audit(0.65, &[16], WnParams::default(), 100, 0.02, 1, &quick(), None).unwrap();
    let shared = box_crossing_audit(0.65, &[16], WnParams::default(), 100, 0.02, 1, &quick(), Some(&t)).unwrap();
    assert_eq!(direct, shared);
}

#[test]
fn theorem1_sanity_away_from_criticality() {
    let ns = [4, 8, 16, 32, 64];
    let below = theorem1_run(0.55, &ns, 40_000, 2, &quick(), None).unwrap();
    assert!(
        below.notes.iter().any(|n| n.contains("residuals flagged")) || below.status == Status::NotApplicable,
        "{:?}",
        below.notes
    );
    let above = theorem1_run(0.8, &ns, 5_000, 2, &quick(), None).unwrap();
    assert!(above.rows.iter().filter_map(|r| r["estimate"].as_f64()).all(|v| v > 0.5));
}

#[test]
fn theorem2_degenerate_at_p_one() {
    let rep = theorem2_run(1.0, &[2, 4, 8], 20, 1, &quick(), None).unwrap();
    assert_eq!(rep.status, Status::NotApplicable);
    let fit = rep.rows.iter().find_map(|r| r.get("fit")).unwrap();
    assert!((fit["exponent"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn theorem2_reports_ratios_for_tabled_scales() {
    let opts = quick();
    let t = WnTable::compute(0.6447, &[32, 64], WnParams::default(), 5, &opts).unwrap();
    let rep = theorem2_run(0.6447, &[16, 32, 64], 4000, 5, &opts, Some(&t)).unwrap();
    let ratio_checks = rep.checks.iter().filter(|c| c.n.is_some()).count();
    // Four two-sided ratios plus the variance floor, for n = 32 and 64.
    assert_eq!(ratio_checks, 2 * 9);
}

#[test]
fn cluster_sampling_edge_cases() {
    let s = sample_conditioned_cluster(1.0, Condition::Hit { n: 10 }, 1, 5).unwrap();
    assert_eq!(s.attempts, 1);
    assert_eq!(s.sites.len(), 11 * 12 / 2);
    assert_eq!(s.rn_sequence.last(), Some(&(10, 10)));
    assert_eq!(s.renewals, vec![0]);
    match sample_conditioned_cluster(0.0, Condition::Hit { n: 1 }, 1, 300) {
        Err(crate::Error::AttemptsExhausted { attempts: 300, .. }) => {}
        other => panic!("{other:?}"),
    }
    assert!(sample_conditioned_cluster(0.5, Condition::Window { a: 5, b: 5 }, 1, 10).is_err());
}

#[test]
fn window_condition_is_respected() {
    let s = sample_conditioned_cluster(0.6447, Condition::Window { a: 20, b: 40 }, 3, 100_000).unwrap();
    let top = s.sites.iter().map(|&(_, y)| y).max().unwrap();
    assert!((20..40).contains(&top), "{top}");
    assert!(s.renewals.contains(&0));
}

#[test]
fn acceptance_rate_matches_survival() {
    let n = 1000;
    let a = conditioned_acceptance(0.6447, Condition::Hit { n }, 11, 4000).unwrap();
    let s = crate::estimate::survival_curve(0.6447, &[n], 4000, 12).unwrap();
    let r = &s.rows[0];
    let se = (a.stderr().powi(2) + r.stderr.powi(2)).sqrt();
    assert!((a.p_hat - r.estimate).abs() <= 4.0 * se, "{} vs {}", a.p_hat, r.estimate);
}

#[test]
fn subadditivity_and_monotonicity_small() {
    let r = subadditivity_audit(0.6447, 64, 16, 500, 4).unwrap();
    assert_eq!(r.violations, 0);
    assert!(r.mean_r0n <= r.mean_r0m + r.mean_rmn);
    let fixtures = [
        (Rect::with_dims(8, 8).unwrap(), Crossing::Vertical),
        (Rect::with_dims(6, 10).unwrap(), Crossing::LeftRight),
        (Rect::new(-5, 7, 2, 13).unwrap(), Crossing::RightLeft),
    ];
    let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
    let m = coupled_monotonicity_audit(&(0..20).collect::<Vec<_>>(), &grid, &fixtures).unwrap();
    assert_eq!((m.sequences, m.violations, m.threshold_mismatches), (60, 0, 0));
}
