use causality_lab::prob::*;
use causality_lab::weight::ratio;
use causality_lab::{BigRational, Event, LabError, Partition, ProbabilitySpace, Weight};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn space(ws: &[(&str, BigRational)]) -> ProbabilitySpace<BigRational> {
    ProbabilitySpace::new(ws.iter().map(|(l, w)| (l.to_string(), w.clone())).collect()).unwrap()
}

fn correlated_four() -> ProbabilitySpace<BigRational> {
    space(&[
        ("ef", ratio(34, 100)),
        ("e~f", ratio(16, 100)),
        ("~ef", ratio(16, 100)),
        ("~e~f", ratio(34, 100)),
    ])
}

/// Two copies of the correlated pair with a screening cause in copy `c`.
fn eight() -> ProbabilitySpace<BigRational> {
    space(&[
        ("cef", ratio(32, 100)),
        ("ce~f", ratio(8, 100)),
        ("c~ef", ratio(8, 100)),
        ("c~e~f", ratio(2, 100)),
        ("nef", ratio(2, 100)),
        ("ne~f", ratio(8, 100)),
        ("n~ef", ratio(8, 100)),
        ("n~e~f", ratio(32, 100)),
    ])
}

fn sum_where(s: &ProbabilitySpace<BigRational>, keep: impl Fn(&str) -> bool) -> BigRational {
    (0..s.len())
        .filter(|&i| keep(s.label(i)))
        .fold(BigRational::zero(), |a, i| a + s.weight(i))
}

#[test]
fn worked_probabilities() {
    let s = correlated_four();
    let e = s.event(&["ef", "e~f"]).unwrap();
    let f = s.event(&["ef", "~ef"]).unwrap();
    assert_eq!(prob(&s, &s.whole()), BigRational::one());
    assert_eq!(prob(&s, &s.nothing()), BigRational::zero());
    assert_eq!(prob(&s, &e), ratio(1, 2));
    assert_eq!(cond_prob(&s, &e, &f).unwrap(), ratio(34, 50));
    assert_eq!(cond_prob(&s, &e, &s.whole()).unwrap(), prob(&s, &e));
    assert_eq!(correlation(&s, &e, &f), ratio(9, 100));
    assert_eq!(correlation(&s, &e, &e.not()), ratio(-1, 4));
    assert!(matches!(cond_prob(&s, &e, &s.nothing()), Err(LabError::NullCondition(_))));
    assert!(s.event(&["nope"]).is_err());
}

#[test]
fn screening_examples() {
    let s = eight();
    let c = s.event_where(|l| l.starts_with('c'));
    let e = s.event_where(|l| l.len() > 1 && &l[1..2] == "e");
    let f = s.event_where(|l| l.ends_with("ef") || l.ends_with("~ef") || l == "cef" || l == "nef");
    assert_eq!(cond_prob(&s, &e, &c).unwrap(), ratio(4, 5));
    assert_eq!(cond_prob(&s, &f, &c).unwrap(), ratio(4, 5));
    assert_eq!(cond_prob(&s, &e.and(&f), &c).unwrap(), ratio(16, 25));
    assert!(screens_off(&s, &c, &e, &f, 0.0).unwrap().holds);
    let r = reichenbach_check(&s, &c, &e, &f, 0.0).unwrap();
    assert!(r.holds);
    assert_eq!(r.witnesses.len(), 4);
    assert!(partition_screens_off(&s, &Partition::binary(&c), &e, &f, 0.0).unwrap().holds);
    assert!(!partition_screens_off(&s, &Partition::trivial(s.len()), &e, &f, 0.0).unwrap().holds);

    let four = correlated_four();
    let e4 = four.event(&["ef", "e~f"]).unwrap();
    let f4 = four.event(&["ef", "~ef"]).unwrap();
    let whole = screens_off(&four, &four.whole(), &e4, &f4, 1e-9).unwrap();
    assert!(!whole.holds);
    assert!((whole.max_residual - 0.09).abs() < 1e-12);
    assert!(matches!(
        reichenbach_check(&four, &four.whole(), &e4, &f4, 0.0),
        Err(LabError::NullCondition(_))
    ));
}

#[test]
fn independent_pairs_fail_raising() {
    let s = space(&[("a", ratio(1, 4)), ("b", ratio(1, 4)), ("c", ratio(1, 4)), ("d", ratio(1, 4))]);
    let e = s.event(&["a", "b"]).unwrap();
    let f = s.event(&["a", "c"]).unwrap();
    let c = s.event(&["a", "d"]).unwrap();
    assert!(screens_off(&s, &s.whole(), &e, &f, 0.0).unwrap().holds);
    assert!(!reichenbach_check(&s, &c, &e, &f, 0.0).unwrap().holds);
}

#[test]
fn null_cells_are_skipped() {
    let s = space(&[("a", ratio(1, 2)), ("b", ratio(1, 2)), ("z", ratio(0, 1))]);
    let e = s.event(&["a"]).unwrap();
    let r = partition_screens_off(&s, &Partition::atomic(3), &e, &e, 0.0).unwrap();
    assert!(r.holds);
    assert_eq!(r.skipped.len(), 1);
}

#[test]
fn conditionalize_examples() {
    let s = correlated_four();
    let e = s.event(&["ef", "e~f"]).unwrap();
    let sub = conditionalize(&s, &e).unwrap();
    assert_eq!(sub.weights(), &[ratio(68, 100), ratio(32, 100)]);
    assert_eq!(conditionalize(&s, &s.whole()).unwrap(), s);
    assert!(conditionalize(&s, &s.nothing()).is_err());
}

#[test]
fn invalid_spaces_are_rejected() {
    assert!(ProbabilitySpace::<f64>::new(vec![]).is_err());
    assert!(ProbabilitySpace::new(vec![("a".into(), 0.5), ("a".into(), 0.5)]).is_err());
    assert!(ProbabilitySpace::new(vec![("a".into(), 0.5), ("b".into(), 0.4)]).is_err());
    assert!(ProbabilitySpace::new(vec![("a".into(), 1.5), ("b".into(), -0.5)]).is_err());
    assert!(Partition::new(vec![Event::from_indices(3, [0, 1]), Event::from_indices(3, [1, 2])]).is_err());
    assert!(Partition::new(vec![Event::from_indices(3, [0])]).is_err());
}

#[test]
fn json_round_trip() {
    let s = correlated_four();
    let back = ProbabilitySpace::<BigRational>::from_json(&s.to_json()).unwrap();
    assert_eq!(back, s);
    let e = s.event(&["ef", "e~f"]).unwrap();
    let r = screens_off(&s, &s.whole(), &e, &e, 1e-9).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    for k in ["condition", "holds", "max_residual", "tolerance", "witnesses"] {
        assert!(v.get(k).is_some(), "missing {k}");
    }
}

fn arb_space(max: usize) -> impl Strategy<Value = ProbabilitySpace<BigRational>> {
    prop::collection::vec(0i64..20, 1..=max).prop_filter_map("all zero", |raw| {
        let total: i64 = raw.iter().sum();
        (total > 0).then(|| {
            ProbabilitySpace::new(
                raw.iter()
                    .enumerate()
                    .map(|(i, &w)| (format!("a{i}"), ratio(w, total)))
                    .collect(),
            )
            .unwrap()
        })
    })
}

fn arb_with_events(k: usize) -> impl Strategy<Value = (ProbabilitySpace<BigRational>, Vec<Event>)> {
    arb_space(10).prop_flat_map(move |s| {
        let n = s.len();
        let evs = prop::collection::vec(prop::collection::vec(any::<bool>(), n), k)
            .prop_map(move |m| m.into_iter().map(|b| Event::from_fn(n, |i| b[i])).collect());
        (Just(s), evs)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn probability_axioms((s, ev) in arb_with_events(2)) {
        let (a, b) = (&ev[0], &ev[1]);
        prop_assert_eq!(prob(&s, &s.whole()), BigRational::one());
        prop_assert!(prob(&s, &a.and(b)) <= prob(&s, a));
        prop_assert_eq!(prob(&s, &a.or(b)), prob(&s, a) + prob(&s, b) - prob(&s, &a.and(b)));
        let labels = s.event_labels(a);
        prop_assert_eq!(prob(&s, a), sum_where(&s, |l| labels.iter().any(|m| m == l)));
    }

    #[test]
    fn atomic_partition_always_screens((s, ev) in arb_with_events(2)) {
        let r = partition_screens_off(&s, &Partition::atomic(s.len()), &ev[0], &ev[1], 0.0).unwrap();
        prop_assert!(r.holds);
    }

    #[test]
    fn chain_rule_for_conditionalization((s, ev) in arb_with_events(3)) {
        let (h1, h2, a) = (&ev[0], &ev[1], &ev[2]);
        prop_assume!(prob(&s, &h1.and(h2)).gt0());
        let once = conditionalize(&s, h1).unwrap();
        let twice = conditionalize(&once, &restrict_event(&s, &once, h2)).unwrap();
        let direct = conditionalize(&s, &h1.and(h2)).unwrap();
        prop_assert_eq!(&twice, &direct);
        prop_assert_eq!(
            prob(&direct, &restrict_event(&s, &direct, a)),
            cond_prob(&s, a, &h1.and(h2)).unwrap()
        );
    }
}

/// Random eight-cell triples `(C, E, F)` drawn from a cause satisfying both
/// screening equations exactly; the raising clauses may or may not hold.
fn screened_triple(seed: u64) -> (ProbabilitySpace<BigRational>, Event, Event, Event) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut q = |lo: i64| ratio(rng.gen_range(lo..=19), 20);
    let (c, ec, fc, en, fn_) = (q(1), q(0), q(0), q(0), q(0));
    let mut atoms = Vec::new();
    for (copy, pc, pe, pf) in [("c", c.clone(), ec, fc), ("n", BigRational::one() - c, en, fn_)] {
        for (x, px) in [("e", pe.clone()), ("~e", BigRational::one() - pe.clone())] {
            for (y, py) in [("f", pf.clone()), ("~f", BigRational::one() - pf.clone())] {
                atoms.push((format!("{copy}{x}{y}"), pc.clone() * px.clone() * py));
            }
        }
    }
    let s = ProbabilitySpace::new(atoms).unwrap();
    let c = s.event_where(|l| l.starts_with('c'));
    let e = s.event_where(|l| !l[1..].starts_with('~'));
    let f = s.event_where(|l| !l.ends_with("~f"));
    (s, c, e, f)
}

#[test]
fn reichenbach_valid_triples_are_positively_correlated() {
    let mut valid = 0;
    for seed in 0..10_000 {
        let (s, c, e, f) = screened_triple(seed);
        if reichenbach_check(&s, &c, &e, &f, 0.0).unwrap().holds {
            valid += 1;
            assert!(correlation(&s, &e, &f).gt0(), "seed {seed}");
        }
    }
    assert!(valid > 1000, "only {valid} valid triples");
}
