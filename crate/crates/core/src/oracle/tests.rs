use super::*;
use crate::lattice::Dir;
use crate::sweep::Path;
use num_rational::BigRational;
use num_traits::{One, Zero};

fn r(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

fn rect(x0: i64, x1: i64, y0: i64, y1: i64) -> Rect {
    Rect::new(x0, x1, y0, y1).unwrap()
}

fn exact(v: &Prob) -> BigRational {
    v.as_rational().expect("exact value").clone()
}

#[test]
fn survival_small_heights() {
    let half = Prob::ratio(1, 2).unwrap();
    assert_eq!(exact(&origin_survival(1, &half).unwrap().value), r(3, 4));
    assert_eq!(exact(&origin_survival(2, &half).unwrap().value), r(39, 64));
}

#[test]
fn survival_two_rows_closed_form() {
    for (a, b) in [(1, 3), (3, 10), (4, 5), (7, 11)] {
        let p = r(a, b);
        let q = BigRational::one() - &p;
        let two = BigRational::from_integer(2.into());
        let want = &two * &p * &q * (BigRational::one() - &q * &q)
            + &p * &p * (BigRational::one() - num_traits::pow(q.clone(), 4));
        let got = origin_survival(2, &Prob::Exact(p)).unwrap().value;
        assert_eq!(exact(&got), want);
    }
}

#[test]
fn p_zero_gives_all_closed_indicator() {
    let b = rect(0, 2, 0, 2);
    let g = BoxGraph::new(b);
    let zero = Prob::ratio(0, 1).unwrap();
    let v = exact_event_prob(&b, &zero, &EventSpec::vertical(&g)).unwrap();
    assert!(exact(&v.value).is_zero());
    let trivial = EventSpec::new("always", true, |_| true);
    assert!(exact(&exact_event_prob(&b, &zero, &trivial).unwrap().value).is_one());
}

#[test]
fn half_times_two_to_the_e_is_integer() {
    let b = rect(0, 3, 0, 4);
    let g = BoxGraph::new(b);
    let half = Prob::ratio(1, 2).unwrap();
    for ev in [
        EventSpec::vertical(&g),
        EventSpec::left_right(&g),
        EventSpec::right_left(&g),
    ] {
        let v = exact(&exact_event_prob(&b, &half, &ev).unwrap().value);
        let scaled = v * BigRational::from_integer(num_bigint::BigInt::from(1u64 << g.edge_count()));
        assert!(scaled.is_integer());
    }
}

#[test]
fn capacity_is_enforced() {
    let b = rect(0, 8, 0, 8);
    let g = BoxGraph::new(b);
    assert!(g.edge_count() > MAX_ENUM_EDGES);
    let half = Prob::ratio(1, 2).unwrap();
    let e = exact_event_prob(&b, &half, &EventSpec::vertical(&g));
    assert!(matches!(e, Err(crate::Error::Capacity { .. })));
    assert!(strip_survival_exact(11, 3, &half).is_err());
}

#[test]
fn polynomial_in_p() {
    // Two edges: degree <= 2, so three values fix a fourth.
    let b = rect(0, 2, 0, 1);
    let g = BoxGraph::new(b);
    let ev = EventSpec::vertical(&g);
    let c = event_counts(&b, &ev).unwrap();
    let xs = [r(1, 5), r(1, 2), r(2, 3)];
    let ys: Vec<BigRational> = xs.iter().map(|x| exact(&c.prob(&Prob::Exact(x.clone())))).collect();
    let at = r(9, 10);
    let mut lagrange = BigRational::zero();
    for i in 0..3 {
        let mut term = ys[i].clone();
        for j in 0..3 {
            if i != j {
                term = term * (&at - &xs[j]) / (&xs[i] - &xs[j]);
            }
        }
        lagrange += term;
    }
    assert_eq!(lagrange, exact(&c.prob(&Prob::Exact(at))));
    assert_eq!(exact(&c.prob(&Prob::ratio(1, 2).unwrap())), r(3, 4));

    // A larger box, with E + 1 interpolation points.
    let b = rect(0, 2, 0, 3);
    let g = BoxGraph::new(b);
    let c = event_counts(&b, &EventSpec::vertical(&g)).unwrap();
    let e = c.edges;
    let xs: Vec<BigRational> = (1..=e as i64 + 1).map(|k| r(k, e as i64 + 3)).collect();
    let ys: Vec<BigRational> = xs.iter().map(|x| exact(&c.prob(&Prob::Exact(x.clone())))).collect();
    let at = r(5, 7);
    let mut lagrange = BigRational::zero();
    for i in 0..xs.len() {
        let mut term = ys[i].clone();
        for j in 0..xs.len() {
            if i != j {
                term = term * (&at - &xs[j]) / (&xs[i] - &xs[j]);
            }
        }
        lagrange += term;
    }
    assert_eq!(lagrange, exact(&c.prob(&Prob::Exact(at))));
}

#[test]
fn strip_values() {
    let half = Prob::ratio(1, 2).unwrap();
    assert_eq!(exact(&strip_survival_exact(1, 2, &half).unwrap().value), r(7, 16));
    for (a, b) in [(1, 3), (1, 2), (9, 10)] {
        let p = r(a, b);
        let q = BigRational::one() - &p;
        for w in 1..=3 {
            let v = strip_survival_exact(w, 1, &Prob::Exact(p.clone())).unwrap().value;
            assert_eq!(exact(&v), BigRational::one() - &q * &q);
        }
    }
    let one = Prob::ratio(1, 1).unwrap();
    for w in 1..=4 {
        for n in 0..6 {
            assert!(exact(&strip_survival_exact(w, n, &one).unwrap().value).is_one());
        }
    }
    // Half-width 0 is a single column with no edges inside it.
    assert!(exact(&strip_survival_exact(0, 1, &half).unwrap().value).is_zero());
}

fn strip_by_enumeration(w: i64, n: i64, p: &Prob) -> Prob {
    let b = rect(-w, w, 0, n);
    let g = BoxGraph::new(b);
    let ev = EventSpec::new("strip survival", true, |c| g.reaches_row(c, Site::ORIGIN, n));
    exact_event_prob(&b, p, &ev).unwrap().value
}

#[test]
fn transfer_matrix_matches_enumeration() {
    for p in [r(3, 10), r(1, 2), r(4, 5)] {
        let p = Prob::Exact(p);
        for w in 0..=1 {
            for n in 0..=4 {
                let tm = strip_survival_exact(w, n, &p).unwrap().value;
                assert_eq!(tm, strip_by_enumeration(w, n, &p), "w={w} n={n}");
            }
        }
        for (w, n) in [(2, 3), (2, 4), (3, 3)] {
            let tm = strip_survival_exact(w, n, &p).unwrap().value;
            assert_eq!(tm, strip_by_enumeration(w, n, &p), "w={w} n={n}");
        }
    }
    let pf = Prob::Float(0.6447);
    let tm = strip_survival_exact(2, 4, &pf).unwrap().value;
    assert!(tm.agrees(&strip_by_enumeration(2, 4, &pf)));
}

#[test]
fn decay_rate_is_consistent_with_survival() {
    let (w, p) = (3, 0.7);
    let lambda = strip_decay_rate(w, p).unwrap();
    let s = |n| strip_survival_exact(w, n, &Prob::Float(p)).unwrap().value.to_f64();
    let ratio = (s(402) / s(400)).sqrt();
    assert!((ratio - lambda).abs() < 1e-9, "{ratio} vs {lambda}");
    assert!(strip_decay_rate(4, 0.8).unwrap() > strip_decay_rate(3, 0.8).unwrap());
}

#[test]
fn fkg_examples() {
    let b = rect(0, 2, 0, 2);
    let g = BoxGraph::new(b);
    let half = Prob::ratio(1, 2).unwrap();
    let v = EventSpec::vertical(&g);
    let rep = fkg_check(&b, &half, &v, &EventSpec::vertical(&g)).unwrap();
    assert!(rep.holds);
    let rep = fkg_check(&b, &half, &v, &EventSpec::left_right(&g)).unwrap();
    assert!(rep.holds && rep.slack > 0.0);

    // Vertical crossings of two column-disjoint halves are independent.
    let b = rect(0, 5, 0, 2);
    let g = BoxGraph::new(b);
    let left = BoxGraph::new(rect(0, 2, 0, 2));
    let right = BoxGraph::new(rect(3, 5, 0, 2));
    let project = |sub: &BoxGraph, c: u64| -> u64 {
        sub.edges().iter().enumerate().fold(0u64, |m, (i, e)| {
            let j = g.edge_index(e.from, e.dir).unwrap();
            m | (((c >> j) & 1) << i)
        })
    };
    let a = EventSpec::new("left half", true, |c| left.vertical_crossing(project(&left, c)));
    let bb = EventSpec::new("right half", true, |c| right.vertical_crossing(project(&right, c)));
    let rep = fkg_check(&b, &Prob::ratio(1, 3).unwrap(), &a, &bb).unwrap();
    assert!(rep.holds);
    assert_eq!(rep.p_ab, rep.product);
}

#[test]
fn non_monotone_event_is_rejected() {
    let b = rect(0, 2, 0, 1);
    let g = BoxGraph::new(b);
    let half = Prob::ratio(1, 2).unwrap();
    let bad = EventSpec::new("no crossing", true, |c| !g.vertical_crossing(c));
    let err = fkg_check(&b, &half, &bad, &EventSpec::vertical(&g)).unwrap_err();
    assert!(matches!(err, crate::Error::NotMonotone { .. }));
}

#[test]
fn srt_examples() {
    let b = rect(0, 2, 0, 4);
    let g = BoxGraph::new(b);
    let p = Prob::ratio(1, 2).unwrap();
    let one = srt_check(&b, &p, &[EventSpec::vertical(&g)]).unwrap();
    assert!(one.holds && !one.strict);
    // Mirror images sharing edges: positively correlated, so the bound is strict.
    let s0 = Site::new(0, 0).unwrap();
    let s2 = Site::new(2, 0).unwrap();
    let a = EventSpec::new("(0,0) reaches top", true, |c| g.reaches_row(c, s0, 4));
    let bb = EventSpec::new("(2,0) reaches top", true, |c| g.reaches_row(c, s2, 4));
    let rep = srt_check(&b, &p, &[a, bb]).unwrap();
    assert!(rep.holds && rep.strict, "{rep:?}");
    assert_eq!(rep.probs[0], rep.probs[1]);
    let zero = Prob::ratio(0, 1).unwrap();
    let rep = srt_check(&b, &zero, &[EventSpec::left_right(&g), EventSpec::right_left(&g)]).unwrap();
    assert!(rep.holds);
    assert!(exact(&rep.max).is_zero());
}

#[test]
fn prob_parsing() {
    assert_eq!(Prob::from_f64(0.3).unwrap(), Prob::Exact(r(3, 10)));
    assert_eq!(Prob::from_f64(0.5).unwrap(), Prob::Exact(r(1, 2)));
    assert!(matches!(Prob::from_f64(std::f64::consts::FRAC_1_PI).unwrap(), Prob::Float(_)));
    assert!(Prob::from_f64(1.5).is_err());
}

#[test]
fn topmost_oracle_examples() {
    let b = rect(0, 2, 0, 4);
    let g = BoxGraph::new(b);
    let all = (1u64 << g.edge_count()) - 1;
    let p = topmost_by_enumeration(&g, all).unwrap();
    assert_eq!(p.start(), Site::new(0, 2).unwrap());
    assert_eq!(p.moves(), vec![Dir::Right, Dir::Right]);
    assert!(topmost_by_enumeration(&g, 0).is_none());
}

fn reversed_moves(a: &Path, b: &Path) -> std::cmp::Ordering {
    a.start().y().cmp(&b.start().y()).then_with(|| {
        let (ma, mb) = (a.moves(), b.moves());
        for (x, y) in ma.iter().zip(&mb) {
            if x != y {
                return if *x == Dir::Right {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Less
                };
            }
        }
        ma.len().cmp(&mb.len())
    })
}

#[test]
fn region_below_the_maximal_crossing_is_unexplored() {
    let p = r(1, 3);
    for b in [rect(0, 2, 0, 4), rect(0, 3, 0, 5), rect(0, 3, 0, 4)] {
        let rep = exploration_independence(&b, &p, path_order).unwrap();
        assert!(rep.crossings > 0);
        assert_eq!(rep.violations, 0, "{b}");
    }
    // Preferring right moves makes the event depend on edges below.
    let rep = exploration_independence(&rect(0, 3, 0, 5), &p, reversed_moves).unwrap();
    assert!(rep.violations > 0);
}

#[test]
fn rn_law_at_small_n() {
    let half = Prob::ratio(1, 2).unwrap();
    let law = origin_rn_law(1, &half).unwrap();
    assert_eq!(exact(&law[&None]), r(1, 4));
    assert_eq!(exact(&law[&Some(1)]), r(1, 2));
    assert_eq!(exact(&law[&Some(-1)]), r(1, 4));
    let law = origin_rn_law(3, &half).unwrap();
    let total: BigRational = law.values().map(exact).sum();
    assert!(total.is_one());
    let miss = exact(&law[&None]);
    let surv = exact(&origin_survival(3, &half).unwrap().value);
    assert_eq!(BigRational::one() - miss, surv);
}

#[test]
fn three_point_limit_is_exact_on_power_tails() {
    let f = |x: f64| 0.3 + 2.0 * x.powf(-1.7);
    let (lim, c) = three_point_limit([5.0, 7.0, 9.0], [f(5.0), f(7.0), f(9.0)]).unwrap();
    assert!((lim - 0.3).abs() < 1e-9 && (c - 1.7).abs() < 1e-6);
    assert!(three_point_limit([1.0, 2.0, 3.0], [1.0, 2.0, 1.0]).is_none());
}

#[test]
fn strip_extrapolation_lands_in_the_critical_window() {
    let e = strip_pc_extrapolated(2).unwrap();
    assert!(e.estimates.windows(2).all(|w| w[1] < w[0]), "{e:?}");
    assert!((0.64..=0.65).contains(&e.p_inf), "{e:?}");
}

#[test]
fn fixture_suite_passes() {
    for b in fixture_boxes() {
        assert!(b.edges().len() <= 22, "{b}");
    }
    let checks = self_check().unwrap();
    assert!(checks.len() > 40);
    for c in &checks {
        assert!(c.passed, "{c:?}");
    }
}
