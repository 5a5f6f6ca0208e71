//! Fixture suite comparing the sweep engine and the transfer matrix with
//! enumeration, plus the exact FKG and square-root-trick checks.

use serde::Serialize;

use crate::error::Result;
use crate::lattice::{Rect, Site};
use crate::randfield::EdgeIndex;
use crate::sweep::{crosses, sweep, Crossing, SourceSpec};

use super::exact::{event_counts, exact_event_prob, fkg_check, srt_check, EventSpec, Prob};
use super::graph::BoxGraph;
use super::transfer::strip_survival_exact;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Boxes of the equivalence suite, each with at most 22 in-box edges.
pub fn fixture_boxes() -> Vec<Rect> {
    [
        (0, 1, 0, 1),
        (0, 2, 0, 1),
        (0, 2, 0, 2),
        (0, 3, 0, 3),
        (0, 4, 0, 4),
        (0, 2, 0, 5),
        (0, 6, 0, 2),
        (-1, 2, 0, 4),
        (0, 3, 1, 5),
        (-2, 2, 0, 3),
        (1, 5, 1, 4),
    ]
    .iter()
    .map(|&(a, b, c, d)| Rect::new(a, b, c, d).expect("fixture"))
    .collect()
}

/// `p = 3/10, 1/2, 4/5`.
pub fn fixture_probs() -> Vec<Prob> {
    [(3, 10), (1, 2), (4, 5)]
        .iter()
        .map(|&(a, b)| Prob::ratio(a, b).expect("fixture"))
        .collect()
}

/// Sweep-derived indicators against breadth-first search, over every
/// configuration of `b`: the counts by number of open edges must coincide,
/// and so must the exact probabilities at each `p`.
pub fn sweep_equivalence(b: &Rect, probs: &[Prob]) -> Result<Vec<OracleCheck>> {
    let g = BoxGraph::new(*b);
    let idx = EdgeIndex::new(*b);
    let mut out = Vec::new();
    let mut pairs: Vec<(String, EventSpec, EventSpec)> = Vec::new();
    for (kind, oracle) in [
        (Crossing::Vertical, EventSpec::vertical(&g)),
        (Crossing::LeftRight, EventSpec::left_right(&g)),
        (Crossing::RightLeft, EventSpec::right_left(&g)),
    ] {
        let idx = &idx;
        let swept = EventSpec::new(format!("{kind:?} by sweep"), true, move |c| {
            crosses(&idx.with_open(c), b, kind)
        });
        pairs.push((format!("{kind:?}"), swept, oracle));
    }
    if b.contains_xy(0, 0) {
        let idx = &idx;
        let top = b.y_max;
        let swept = EventSpec::new("origin reaches top by sweep", true, move |c| {
            sweep(&idx.with_open(c), b, &SourceSpec::SingleOrigin, false)
                .map(|r| r.reached_top)
                .unwrap_or(false)
        });
        let g = &g;
        let oracle = EventSpec::new("origin reaches top", true, move |c| g.reaches_row(c, Site::ORIGIN, top));
        pairs.push(("origin survival".into(), swept, oracle));
    }
    for (name, swept, oracle) in &pairs {
        let (cs, co) = (event_counts(b, swept)?, event_counts(b, oracle)?);
        let mut passed = cs == co;
        let mut detail = format!("{} edges, {} configurations in event", cs.edges, co.total());
        for p in probs {
            let (ps, po) = (cs.prob(p), exact_event_prob(b, p, oracle)?.value);
            if ps != po {
                passed = false;
                detail.push_str(&format!("; p={p}: sweep {ps} vs enumeration {po}"));
            }
        }
        out.push(OracleCheck {
            name: format!("sweep = enumeration: {name} on {b}"),
            passed,
            detail,
        });
    }
    Ok(out)
}

/// The full suite run by `oracle-check`.
pub fn self_check() -> Result<Vec<OracleCheck>> {
    let probs = fixture_probs();
    let mut out = Vec::new();
    for b in fixture_boxes() {
        out.extend(sweep_equivalence(&b, &probs)?);
    }
    for p in &probs {
        for w in 0..=1 {
            for n in 0..=4 {
                let b = Rect::new(-w, w, 0, n)?;
                let g = BoxGraph::new(b);
                let ev = EventSpec::new("strip survival", true, |c| g.reaches_row(c, Site::ORIGIN, n));
                let en = exact_event_prob(&b, p, &ev)?.value;
                let tm = strip_survival_exact(w, n, p)?.value;
                out.push(OracleCheck {
                    name: format!("transfer matrix = enumeration: w={w} n={n} p={p}"),
                    passed: tm == en,
                    detail: format!("{tm}"),
                });
            }
        }
    }
    let half = Prob::ratio(1, 2)?;
    for b in [Rect::new(0, 2, 0, 2)?, Rect::new(0, 3, 0, 3)?, Rect::new(0, 4, 0, 2)?] {
        let g = BoxGraph::new(b);
        let r = fkg_check(&b, &half, &EventSpec::vertical(&g), &EventSpec::left_right(&g))?;
        out.push(OracleCheck {
            name: format!("FKG: vertical and left-right on {b}"),
            passed: r.holds,
            detail: format!("P(AB) = {} >= P(A)P(B) = {}", r.p_ab, r.product),
        });
    }
    let b = Rect::new(0, 2, 0, 4)?;
    let g = BoxGraph::new(b);
    let (s0, s2) = (Site::new(0, 0)?, Site::new(2, 0)?);
    let r = srt_check(
        &b,
        &half,
        &[
            EventSpec::new("(0,0) reaches top", true, |c| g.reaches_row(c, s0, 4)),
            EventSpec::new("(2,0) reaches top", true, |c| g.reaches_row(c, s2, 4)),
        ],
    )?;
    out.push(OracleCheck {
        name: format!("square-root trick: mirrored sources on {b}"),
        passed: r.holds && r.strict,
        detail: format!("max = {}, union = {}", r.max, r.union),
    });
    let b = Rect::new(0, 3, 0, 3)?;
    let g = BoxGraph::new(b);
    let r = srt_check(
        &b,
        &half,
        &[EventSpec::vertical(&g), EventSpec::left_right(&g), EventSpec::right_left(&g)],
    )?;
    out.push(OracleCheck {
        name: format!("square-root trick: three crossings of {b}"),
        passed: r.holds,
        detail: format!("max = {}, union = {}", r.max, r.union),
    });
    Ok(out)
}
