//! Exact answers for small instances.
//!
//! * Enumeration over all `2^E` edge configurations of a box, with events
//!   evaluated by explicit breadth-first search ([`BoxGraph`]).
//! * A transfer matrix for survival in narrow strips.
//! * Exact FKG and square-root-trick checks, and an exploration check for
//!   maximal crossings.

mod check;
mod exact;
mod explore;
mod graph;
mod transfer;

pub use check::{fixture_boxes, fixture_probs, self_check, sweep_equivalence, OracleCheck};
pub use exact::{
    abs_diff, event_counts, exact_event_prob, exact_law, fkg_check, srt_check, Counts, EventSpec,
    ExactProb, FkgReport, Method, Prob, SrtReport, FLOAT_TOL, MAX_ENUM_EDGES,
};
pub use explore::{exploration_independence, sites_below, ExploreReport, MAX_EXPLORE_EDGES};
pub use graph::BoxGraph;
pub use transfer::{
    strip_correlation_length, strip_decay_rate, strip_effective_z, strip_pc_estimate,
    strip_pc_extrapolated, strip_survival_exact, three_point_limit, StripPcExtrapolation,
    MAX_HALF_WIDTH,
};

use std::collections::BTreeMap;

use crate::error::Result;
use crate::lattice::{Rect, Site};
use crate::sweep::{path_order, Path};

/// The box `[-n, n] x [0, n]`, which holds every path of length `n` from the origin.
pub fn cone_box(n: i64) -> Rect {
    Rect {
        x_min: -n,
        x_max: n,
        y_min: 0,
        y_max: n,
    }
}

/// Exact law of `R_n` for the cluster of the origin; the key `None` is the
/// event `0 -/-> ℓ_n`.
pub fn origin_rn_law(n: i64, p: &Prob) -> Result<BTreeMap<Option<i64>, Prob>> {
    let b = cone_box(n);
    let g = BoxGraph::new(b);
    exact_law(&b, p, |c| {
        g.reached_sites(c, [Site::ORIGIN])
            .iter()
            .filter(|s| s.y() == n)
            .map(|s| s.x())
            .max()
    })
}

/// `P_p(0 -> ℓ_n)` by enumeration over the cone.
pub fn origin_survival(n: i64, p: &Prob) -> Result<ExactProb> {
    let b = cone_box(n);
    let g = BoxGraph::new(b);
    let ev = EventSpec::new(format!("0 -> row {n}"), true, |c| {
        g.reaches_row(c, Site::ORIGIN, n)
    });
    exact_event_prob(&b, p, &ev)
}

/// The maximal open left-right crossing under the crossing order, by listing
/// every open crossing.
pub fn topmost_by_enumeration(g: &BoxGraph, open: u64) -> Option<Path> {
    g.lr_crossings(open).into_iter().max_by(path_order)
}

#[cfg(test)]
mod tests;
