use super::*;
use crate::lattice::Dir;
use crate::randfield::{reflect_config, EdgeConfig, EdgeIndex, Mode, SeedSpec};
use proptest::prelude::*;
use std::collections::HashSet;

fn cfg(p: f64, mode: Mode, replica: u64) -> EdgeConfig {
    EdgeConfig::new(SeedSpec::new(11, replica), p, mode).unwrap()
}

fn rect(x0: i64, x1: i64, y0: i64, y1: i64) -> Rect {
    Rect::new(x0, x1, y0, y1).unwrap()
}

/// Explicit depth-first search over the sites of `b`, edge by edge.
fn dfs_reach<F: EdgeField>(f: &F, b: &Rect, sources: &[Site]) -> HashSet<Site> {
    let mut seen: HashSet<Site> = HashSet::new();
    let mut stack: Vec<Site> = sources.iter().copied().filter(|s| b.contains(*s)).collect();
    while let Some(s) = stack.pop() {
        if !seen.insert(s) {
            continue;
        }
        for d in [Dir::Left, Dir::Right] {
            let t = s.step(d);
            if b.contains(t) && f.is_open(s, d) && !seen.contains(&t) {
                stack.push(t);
            }
        }
    }
    seen
}

fn column_sources(b: &Rect, x: i64) -> Vec<Site> {
    (b.y_min..=b.y_max).filter_map(|y| Site::new(x, y).ok()).collect()
}

#[test]
fn full_cone_at_p1() {
    let c = cfg(1.0, Mode::Fast, 0);
    let b = rect(-10, 10, 0, 10);
    let r = sweep(&c, &b, &SourceSpec::SingleOrigin, true).unwrap();
    let t = r.trace.unwrap();
    for k in 0..=10 {
        let want: Vec<i64> = (-k..=k).step_by(2).collect();
        assert_eq!(t.row(k), want);
    }
    assert!(r.reached_top);
    let s = cluster_stats(&c, 10, &SourceSpec::SingleOrigin).unwrap();
    assert_eq!((s.rn, s.ln), (Some(10), Some(-10)));
    assert_eq!(s.renewal_heights, vec![0]);
}

#[test]
fn nothing_at_p0() {
    let c = cfg(0.0, Mode::Coupled, 0);
    let b = rect(-5, 5, 0, 5);
    let r = sweep(&c, &b, &SourceSpec::SingleOrigin, true).unwrap();
    let t = r.trace.unwrap();
    assert_eq!(t.row(0), vec![0]);
    for k in 1..=5 {
        assert!(t.row(k).is_empty());
    }
    let s = cluster_stats(&c, 3, &SourceSpec::SingleOrigin).unwrap();
    assert!(!s.hit);
    assert_eq!((s.rn, s.ln), (None, None));
    assert_eq!(s.renewal_heights, vec![0]);
}

#[test]
fn degenerate_sources_are_errors() {
    let c = cfg(0.5, Mode::Fast, 0);
    let r = sweep(&c, &rect(1, 5, 0, 3), &SourceSpec::SingleOrigin, false);
    assert!(matches!(r, Err(Error::DegenerateSource { .. })));
    let r = sweep(&c, &rect(1, 1, 0, 0), &SourceSpec::BottomRow, false);
    assert!(matches!(r, Err(Error::DegenerateSource { .. })));
    assert!(sweep(&c, &rect(0, 0, 0, 0), &SourceSpec::BottomRow, false).is_ok());
    assert!(!crossed_vertically(&c, &rect(1, 1, 0, 0)));
}

#[test]
fn spec_small_boxes() {
    // Box [0,1]x[0,1]: one edge (0,0) -> (1,1).
    let b = rect(0, 1, 0, 1);
    let idx = EdgeIndex::new(b);
    assert_eq!(idx.len(), 1);
    assert!(crossed_lr(&idx.with_open(1), &b));
    assert!(!crossed_lr(&idx.with_open(0), &b));
    // Box [0,2]x[0,1]: edges (0,0)->(1,1) and (2,0)->(1,1).
    let b = rect(0, 2, 0, 1);
    let idx = EdgeIndex::new(b);
    let hits: Vec<bool> = (0..4).map(|m| crossed_vertically(&idx.with_open(m), &b)).collect();
    assert_eq!(hits, vec![false, true, true, true]);
    // Wide boxes cannot be crossed horizontally.
    let c = cfg(1.0, Mode::Fast, 0);
    assert!(!crossed_lr(&c, &rect(0, 5, 0, 3)));
    assert!(crossed_lr(&c, &rect(0, 3, 0, 3)));
    assert!(crossed_vertically(&c, &rect(0, 2, 0, 2)));
}

#[test]
fn topmost_examples() {
    let c = cfg(1.0, Mode::Fast, 0);
    let p = topmost_lr_crossing(&c, &rect(0, 2, 0, 2)).unwrap();
    let want: Vec<Site> = [(0, 0), (1, 1), (2, 2)]
        .iter()
        .map(|&(x, y)| Site::new(x, y).unwrap())
        .collect();
    assert_eq!(p.sites(), &want[..]);
    let p = topmost_lr_crossing(&c, &rect(0, 2, 0, 4)).unwrap();
    let want: Vec<Site> = [(0, 2), (1, 3), (2, 4)]
        .iter()
        .map(|&(x, y)| Site::new(x, y).unwrap())
        .collect();
    assert_eq!(p.sites(), &want[..]);
    assert!(topmost_lr_crossing(&cfg(0.0, Mode::Fast, 0), &rect(0, 2, 0, 4)).is_none());
}

#[test]
fn topmost_prefers_left_moves() {
    let c = cfg(1.0, Mode::Fast, 0);
    let p = topmost_lr_crossing(&c, &rect(0, 2, 0, 6)).unwrap();
    assert_eq!(p.start().y(), 4);
    let p = topmost_lr_crossing(&c, &rect(0, 3, 0, 5)).unwrap();
    assert_eq!(p.start(), Site::new(0, 2).unwrap());
    assert_eq!(p.moves(), vec![Dir::Right, Dir::Right, Dir::Right]);

    // Close the only edges out of the higher left-column sites; the crossing
    // from (0,0) then detours left whenever it still can finish.
    let b = rect(0, 4, 0, 6);
    let idx = EdgeIndex::new(b);
    let mut open = (1u64 << idx.len()) - 1;
    for y in [2, 4] {
        open &= !(1 << idx.index_of(0, y, Dir::Right).unwrap());
    }
    let f = idx.with_open(open);
    let p = topmost_lr_crossing(&f, &b).unwrap();
    assert_eq!(p.start(), Site::ORIGIN);
    use Dir::{Left as L, Right as R};
    assert_eq!(p.moves(), vec![R, R, L, R, R, R]);
}

#[test]
fn path_validation() {
    let s = |x, y| Site::new(x, y).unwrap();
    assert!(Path::new(vec![s(0, 0), s(1, 1), s(0, 2)]).is_ok());
    assert!(Path::new(vec![s(0, 0), s(2, 2)]).is_err());
    assert!(Path::new(vec![]).is_err());
    let a = Path::from_moves(s(0, 0), &[Dir::Left, Dir::Right]);
    let b = Path::from_moves(s(0, 0), &[Dir::Right, Dir::Left]);
    let c = Path::from_moves(s(0, 2), &[Dir::Right]);
    assert_eq!(path_order(&a, &b), std::cmp::Ordering::Greater);
    assert_eq!(path_order(&c, &a), std::cmp::Ordering::Greater);
    let d = Path::from_moves(s(0, 0), &[Dir::Left]);
    assert_eq!(path_order(&d, &a), std::cmp::Ordering::Less);
}

#[test]
fn halfline_full_cone() {
    let c = cfg(1.0, Mode::Fast, 0);
    let s = halfline_stats(&c, 20, None).unwrap();
    assert_eq!(s.rn, Some(20));
    assert!(!s.truncation_flag);
    for m in [0, 5, 20] {
        assert_eq!(rightmost_segment(&c, m, 20, 40).unwrap(), 20 - m);
    }
    assert_eq!(rightmost_segment(&cfg(0.5, Mode::Fast, 3), 7, 7, 14).unwrap(), 0);
    assert!(rightmost_segment(&c, 5, 4, 8).is_err());
}

#[test]
fn rn_parity_and_truncation_widths() {
    for r in 0..40 {
        let c = cfg(0.66, Mode::Fast, r);
        let s = halfline_stats(&c, 50, None).unwrap();
        if let Some(x) = s.rn {
            assert_eq!((x - 50).rem_euclid(2), 0);
        }
        let w = s.w.unwrap();
        assert!((100..=400).contains(&w));
    }
}

#[test]
fn reflection_duality_on_random_boxes() {
    for r in 0..200 {
        let c = cfg(0.7, Mode::Fast, r);
        let b = rect(-3 + (r as i64 % 5), 4 + (r as i64 % 7), 1, 9);
        let (view, rb) = reflect_config(c, &b);
        assert_eq!(crossed_lr(&c, &b), crossed_rl(&view, &rb));
        assert_eq!(crossed_vertically(&c, &b), crossed_vertically(&view, &rb));
    }
}

#[test]
fn threshold_extremes() {
    let c = cfg(0.5, Mode::Coupled, 1);
    let b = rect(0, 2, 0, 0);
    assert_eq!(crossing_threshold(&c, &b, Crossing::Vertical), Some(0));
    assert_eq!(crossing_threshold(&c, &rect(0, 5, 0, 3), Crossing::LeftRight), None);
    assert_eq!(crossing_threshold(&c, &rect(0, 0, 0, 0), Crossing::LeftRight), Some(0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sweep_matches_dfs(
        x0 in -70i64..70, w in 0i64..140, y0 in -3i64..3, h in 0i64..25,
        p in 0.3f64..0.9, r in 0u64..1000, coupled in any::<bool>()
    ) {
        let mode = if coupled { Mode::Coupled } else { Mode::Fast };
        let c = cfg(p, mode, r);
        let b = rect(x0, x0 + w, y0, y0 + h);
        let bottom: Vec<Site> = b.row_sites(b.y_min).unwrap().into_iter()
            .map(|x| Site::new(x, b.y_min).unwrap()).collect();
        if !bottom.is_empty() {
            let got = sweep(&c, &b, &SourceSpec::BottomRow, true).unwrap();
            let reach = dfs_reach(&c, &b, &bottom);
            let t = got.trace.unwrap();
            let from_trace: HashSet<Site> = t.sites().collect();
            prop_assert_eq!(&from_trace, &reach);
            let top = reach.iter().any(|s| s.y() == b.y_max);
            prop_assert_eq!(got.reached_top, top);
            prop_assert_eq!(crossed_vertically(&c, &b), top);
        }
        let left = column_sources(&b, b.x_min);
        let reach = dfs_reach(&c, &b, &left);
        prop_assert_eq!(crossed_lr(&c, &b), reach.iter().any(|s| s.x() == b.x_max));
        let right = column_sources(&b, b.x_max);
        let reach = dfs_reach(&c, &b, &right);
        prop_assert_eq!(crossed_rl(&c, &b), reach.iter().any(|s| s.x() == b.x_min));
        match topmost_lr_crossing(&c, &b) {
            None => prop_assert!(!crossed_lr(&c, &b)),
            Some(path) => {
                prop_assert!(path.is_lr_crossing_of(&b));
                prop_assert!(path.is_open(&c));
            }
        }
    }

    #[test]
    fn threshold_agrees_with_sweep(
        w in 0i64..90, h in 0i64..40, p in 0.4f64..0.9, r in 0u64..1000
    ) {
        let c = cfg(p, Mode::Coupled, r);
        let b = rect(-7, -7 + w, 2, 2 + h);
        for kind in [Crossing::Vertical, Crossing::LeftRight, Crossing::RightLeft] {
            let t = crossing_threshold(&c, &b, kind);
            let at_q = t.is_some_and(|t| t <= c.q());
            prop_assert_eq!(crosses(&c, &b, kind), at_q);
        }
    }

    #[test]
    fn opening_an_edge_never_removes_sites(
        w in 1i64..7, h in 1i64..5, mask in any::<u64>(), pick in any::<usize>()
    ) {
        let b = rect(0, w, 0, h);
        let idx = EdgeIndex::new(b);
        prop_assume!(idx.len() <= 24 && !idx.is_empty());
        let open = mask & ((1u64 << idx.len()) - 1);
        let e = pick % idx.len();
        let before = sweep(&idx.with_open(open), &b, &SourceSpec::BottomRow, true).unwrap();
        let after = sweep(&idx.with_open(open | (1 << e)), &b, &SourceSpec::BottomRow, true).unwrap();
        let a: HashSet<Site> = before.trace.unwrap().sites().collect();
        let z: HashSet<Site> = after.trace.unwrap().sites().collect();
        prop_assert!(a.is_subset(&z));
    }

    #[test]
    fn subadditivity(r in 0u64..10_000, p in 0.55f64..0.75) {
        let c = cfg(p, Mode::Fast, r);
        let n = 60;
        let w = 2 * n;
        let prof = rightmost_profile(&c, n, w).unwrap();
        let r0n = prof[n as usize].unwrap_or(0).max(0);
        for m in [0, 10, 30, 59, 60] {
            let r0m = prof[m as usize].unwrap_or(0).max(0);
            let rmn = segment_gain(&c, m, n, w, r0m);
            prop_assert!(r0n <= r0m + rmn);
        }
        prop_assert_eq!(segment_gain(&c, 0, n, w, 0), r0n);
    }

    #[test]
    fn parity_of_occupancy(r in 0u64..1000, p in 0.5f64..1.0, n in 1i64..80) {
        let c = cfg(p, Mode::Fast, r);
        let b = rect(-n, n, 0, n);
        let res = sweep(&c, &b, &SourceSpec::SingleOrigin, true).unwrap();
        for s in res.trace.unwrap().sites() {
            prop_assert!(is_site(s.x(), s.y()));
        }
        let st = cluster_stats(&c, n, &SourceSpec::SingleOrigin).unwrap();
        if let (Some(rn), Some(ln)) = (st.rn, st.ln) {
            prop_assert!(ln <= rn);
            prop_assert_eq!((rn - n).rem_euclid(2), 0);
            prop_assert!(st.renewal_heights.contains(&0));
        } else {
            prop_assert!(!st.hit);
        }
    }
}
