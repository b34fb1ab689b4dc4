use std::collections::{HashMap, HashSet};

use causality_lab::causet::*;
use causality_lab::weight::ratio;
use causality_lab::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Brute force: every transitive strict order on labels 0..n that respects
/// label order, canonicalized by the smallest full-matrix string over all
/// n! relabellings.
fn oracle_poset_count(n: usize) -> usize {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
    let perms = permutations(n);
    let mut seen = HashSet::new();
    for bits in 0u32..(1 << pairs.len()) {
        let mut rel = vec![vec![false; n]; n];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            rel[i][j] = bits >> k & 1 == 1;
        }
        let transitive = (0..n).all(|a| (0..n).all(|b| (0..n).all(|c| !(rel[a][b] && rel[b][c]) || rel[a][c])));
        if !transitive {
            continue;
        }
        let key = perms
            .iter()
            .map(|p| {
                let mut s = String::with_capacity(n * n);
                for a in 0..n {
                    for b in 0..n {
                        s.push(if rel[p[a]][p[b]] { '1' } else { '0' });
                    }
                }
                s
            })
            .min()
            .unwrap();
        seen.insert(key);
    }
    seen.len()
}

#[test]
fn causet_counts_match_brute_force() {
    for n in 0..=5 {
        assert_eq!(enumerate_causets(n).len(), oracle_poset_count(n), "n = {n}");
    }
    assert_eq!(enumerate_causets(6).len(), 318);
}

#[test]
fn enumerated_causets_are_valid_and_distinct() {
    for n in 0..=5 {
        let all = enumerate_causets(n);
        let codes: HashSet<_> = all.iter().map(Causet::canonical_code).collect();
        assert_eq!(codes.len(), all.len());
        for c in &all {
            assert!(c.is_naturally_labelled());
            assert_eq!(Causet::from_relation(&c.relation()).unwrap(), *c);
            assert_eq!(c.canonical(), *c);
        }
    }
}

/// Transitive percolation: the newborn links to each earlier element with
/// probability p; its past is the down-closure of the links.
fn percolation_oracle(c: &Causet, p: &BigRational) -> HashMap<u64, BigRational> {
    let n = c.len();
    let mut out = HashMap::new();
    for links in 0u64..(1 << n) {
        let mut closure = links;
        for y in 0..n {
            if links >> y & 1 == 1 {
                closure |= c.past(y);
            }
        }
        let k = links.count_ones() as usize;
        let mut w = BigRational::one();
        for _ in 0..k {
            w *= p.clone();
        }
        for _ in k..n {
            w *= BigRational::one() - p.clone();
        }
        *out.entry(closure).or_insert_with(BigRational::zero) += w;
    }
    out
}

#[test]
fn alpha_reproduces_transitive_percolation() {
    for p in [ratio(1, 2), ratio(1, 3), ratio(2, 7)] {
        let q: Vec<BigRational> = (0..=5)
            .map(|n| (0..n).fold(BigRational::one(), |acc, _| acc * (BigRational::one() - p.clone())))
            .collect();
        let d = GrowthDynamics::from_q(q).unwrap();
        for n in 0..=4 {
            for c in enumerate_causets(n) {
                let want = percolation_oracle(&c, &p);
                for (s, a) in transition_distribution(&c, &d).unwrap() {
                    let w = want.get(&s.0).cloned().unwrap_or_else(BigRational::zero);
                    assert_eq!(a, w, "p={p} causet {:?} S={:?}", c.relation(), s);
                }
            }
        }
    }
}

#[test]
fn worked_values_are_exact() {
    let d = GrowthDynamics::from_q(vec![ratio(1, 1), ratio(1, 2), ratio(1, 4)]).unwrap();
    assert_eq!(alpha(1, 0, 0, &d).unwrap(), ratio(1, 2));
    assert_eq!(alpha(1, 1, 1, &d).unwrap(), ratio(1, 2));
    assert_eq!(alpha(2, 2, 1, &d).unwrap(), ratio(1, 2));
    assert_eq!(alpha(2, 0, 0, &d).unwrap(), ratio(1, 4));
    let dist = transition_distribution(&Causet::empty(), &d).unwrap();
    assert_eq!(dist, vec![(PrecursorSet(0), ratio(1, 1))]);
    assert!(check_dgc(&d, 3, 0.0).unwrap().holds);
}

#[test]
fn antichain_and_chain_growth() {
    let anti = GrowthDynamics::<f64>::antichain(8);
    let grown = grow(&anti, 8, 3).unwrap();
    assert_eq!(grown.causet, Causet::antichain(8));
    let chain = GrowthDynamics::<f64>::chain(8);
    assert_eq!(grow(&chain, 8, 3).unwrap().causet, Causet::chain(8));
    let nearly_chain = GrowthDynamics::from_t((0..5).map(|n| 1e8f64.powi(n)).collect()).unwrap();
    assert_eq!(grow(&nearly_chain, 5, 11).unwrap().causet, Causet::chain(5));
}

#[test]
fn two_chain_frequency_after_two_steps() {
    let d = GrowthDynamics::from_q(vec![1.0, 0.5, 0.25]).unwrap();
    let runs = 10_000;
    let chains = (0..runs)
        .filter(|&s| grow(&d, 2, s).unwrap().causet == Causet::chain(2))
        .count() as f64;
    let sigma = (0.25f64 / runs as f64).sqrt();
    assert!((chains / runs as f64 - 0.5).abs() < 3.0 * sigma);
}

#[test]
fn grow_records_trajectory() {
    let d = GrowthDynamics::from_q(vec![1.0, 0.5, 0.25, 0.125]).unwrap();
    let a = grow(&d, 4, 42).unwrap();
    assert_eq!(a, grow(&d, 4, 42).unwrap());
    assert_eq!(a.births.len(), 4);
    assert_eq!(a.births[0].probability, 1.0);
    for b in &a.births {
        let mask = b.precursor.iter().fold(0u64, |m, &i| m | 1 << i);
        assert_eq!(a.causet.past(b.stage), mask);
    }
    assert!(matches!(
        grow(&d, 5, 0),
        Err(causality_lab::LabError::RankOutOfRange { rank: 4, max: 3 })
    ));
}

#[test]
fn strong_sel_boundary_laws() {
    assert!(check_strong_sel(&GrowthDynamics::<BigRational>::antichain(4), 5, 0.0).unwrap().holds);
    assert!(check_strong_sel(&GrowthDynamics::<BigRational>::chain(4), 5, 0.0).unwrap().holds);
    let d = GrowthDynamics::from_q(vec![ratio(1, 1), ratio(1, 2), ratio(1, 4)]).unwrap();
    let r = check_strong_sel(&d, 3, 0.0).unwrap();
    assert!(!r.holds);
    assert!(r.witnesses.iter().any(|w| w.lhs == 0.25 && w.rhs == 0.5));
}

#[test]
fn strong_sel_coarse_grid_finds_only_boundaries() {
    let found = strong_sel_solutions::<BigRational>(3, 10).unwrap();
    let labels: Vec<String> = found.solutions.iter().map(|d| d.label()).collect();
    assert_eq!(labels, vec!["chain", "antichain"]);
    assert_eq!(found.scanned, 121);
    assert_eq!(found.undefined, 20);
}

fn arb_dynamics(max_rank: usize) -> impl Strategy<Value = GrowthDynamics<BigRational>> {
    prop::collection::vec((0i64..6, 1i64..6), max_rank).prop_map(|ts| {
        let mut t = vec![BigRational::one()];
        t.extend(ts.into_iter().map(|(a, b)| ratio(a, b)));
        GrowthDynamics::from_t(t).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inversion_identity_is_exact(d in arb_dynamics(6)) {
        prop_assert!(d.check_inversion(0.0).holds);
    }

    #[test]
    fn empty_precursor_gives_q(d in arb_dynamics(5)) {
        let q = d.q();
        for n in 0..=5 {
            prop_assert_eq!(alpha(n, 0, 0, &d).unwrap(), q[n].clone());
        }
    }

    #[test]
    fn markov_sum_rule(d in arb_dynamics(4)) {
        prop_assert!(check_sum_rule(&d, 4, 0.0).unwrap().holds);
    }

    #[test]
    fn covariance_and_bell_causality(d in arb_dynamics(3)) {
        prop_assert!(check_dgc(&d, 4, 0.0).unwrap().holds);
        prop_assert!(check_bell_causality(&d, 4, 0.0).unwrap().holds);
    }

    #[test]
    fn interior_dynamics_fail_strong_sel(a in 1i64..20, b in 1i64..20) {
        let d = GrowthDynamics::from_q(vec![ratio(1, 1), ratio(a, 20), ratio(b, 20)]).unwrap();
        if is_valid(&d, 2).unwrap() {
            prop_assert!(!check_strong_sel(&d, 3, 0.0).unwrap().holds);
        }
    }

    #[test]
    fn canonical_form_ignores_labels(idx in 0usize..63, seed in any::<u64>()) {
        let c = enumerate_causets(5)[idx].clone();
        let exts = c.linear_extensions();
        let order = &exts[(seed % exts.len() as u64) as usize];
        let relabelled = c.relabel(order);
        prop_assert_eq!(relabelled.canonical(), c);
    }

    #[test]
    fn precursor_sets_are_exactly_the_down_sets(idx in 0usize..63) {
        let c = enumerate_causets(5)[idx].clone();
        let got: Vec<u64> = ancestor_closed_subsets(&c).into_iter().map(|s| s.0).collect();
        let want: Vec<u64> = (0u64..32).filter(|&s| c.is_down_closed(s)).collect();
        prop_assert_eq!(got, want);
    }
}
