//! Finite causal sets and classical sequential growth.
//!
//! A growth dynamics is fixed by the sequence `q_n` (probability that the
//! newborn is unrelated to everything at rank `n`). With
//! `t_n = Σ_k (-1)^(n-k) C(n,k) / q_k`, the probability of a transition whose
//! precursor set has `ϖ` elements and `m` maximal elements is
//!
//! ```text
//! α_n = Σ_{l=m..ϖ} C(ϖ-m, ϖ-l) t_l  /  Σ_{j=0..n} C(n,j) t_j
//! ```

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::report::{CheckReport, Tracker};
use crate::weight::Weight;

/// Largest causet handled (relations are stored as `u64` masks).
pub const MAX_ELEMENTS: usize = 64;

/// A finite partial order. `pred[y]` has bit `x` set iff `x ≺ y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Causet {
    pred: Vec<u64>,
}

/// A down-closed subset of a causet, as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrecursorSet(pub u64);

impl PrecursorSet {
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn elements(self) -> Vec<usize> {
        (0..64).filter(|&i| self.0 >> i & 1 == 1).collect()
    }
}

fn bit(i: usize) -> u64 {
    1u64 << i
}

impl Causet {
    pub fn empty() -> Self {
        Causet { pred: Vec::new() }
    }

    pub fn antichain(n: usize) -> Self {
        Causet { pred: vec![0; n] }
    }

    pub fn chain(n: usize) -> Self {
        Causet {
            pred: (0..n).map(|y| bit(y) - 1).collect(),
        }
    }

    /// Validates irreflexivity, antisymmetry and transitivity of
    /// `rel[x][y] = (x ≺ y)`.
    pub fn from_relation(rel: &[Vec<bool>]) -> Result<Self> {
        let n = rel.len();
        if n > MAX_ELEMENTS || rel.iter().any(|r| r.len() != n) {
            return Err(LabError::Parse(format!("relation must be square with at most {MAX_ELEMENTS} rows")));
        }
        let mut pred = vec![0u64; n];
        for x in 0..n {
            if rel[x][x] {
                return Err(LabError::Parse(format!("element {x} precedes itself")));
            }
            for y in 0..n {
                if rel[x][y] {
                    if rel[y][x] {
                        return Err(LabError::Parse(format!("{x} and {y} precede each other")));
                    }
                    pred[y] |= bit(x);
                }
            }
        }
        let c = Causet { pred };
        for y in 0..n {
            for x in c.elements(c.pred[y]) {
                if c.pred[x] & !c.pred[y] != 0 {
                    return Err(LabError::Parse(format!("relation is not transitive at {x} ≺ {y}")));
                }
            }
        }
        Ok(c)
    }

    pub fn relation(&self) -> Vec<Vec<bool>> {
        let n = self.len();
        (0..n).map(|x| (0..n).map(|y| self.precedes(x, y)).collect()).collect()
    }

    pub fn len(&self) -> usize {
        self.pred.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pred.is_empty()
    }

    pub fn precedes(&self, x: usize, y: usize) -> bool {
        self.pred[y] >> x & 1 == 1
    }

    pub fn past(&self, y: usize) -> u64 {
        self.pred[y]
    }

    fn elements(&self, mask: u64) -> impl Iterator<Item = usize> {
        let n = self.len();
        (0..n).filter(move |&i| mask >> i & 1 == 1)
    }

    fn all(&self) -> u64 {
        if self.len() == 64 {
            u64::MAX
        } else {
            bit(self.len()) - 1
        }
    }

    /// Labels respect the order: `x ≺ y ⇒ x < y`.
    pub fn is_naturally_labelled(&self) -> bool {
        (0..self.len()).all(|y| self.pred[y] >> y == 0)
    }

    pub fn is_down_closed(&self, s: u64) -> bool {
        self.elements(s).all(|y| self.pred[y] & !s == 0)
    }

    /// Number of maximal elements of `s` within `s`.
    pub fn maximal_count(&self, s: u64) -> usize {
        self.elements(s)
            .filter(|&x| self.elements(s).all(|y| !self.precedes(x, y)))
            .count()
    }

    /// A copy with one more element whose past is exactly `s`.
    pub fn extend(&self, s: PrecursorSet) -> Causet {
        debug_assert!(self.is_down_closed(s.0));
        let mut pred = self.pred.clone();
        pred.push(s.0);
        Causet { pred }
    }

    /// The sub-causet on the elements of `mask`, relabelled in index order.
    pub fn induced(&self, mask: u64) -> (Causet, Vec<usize>) {
        let keep: Vec<usize> = self.elements(mask).collect();
        let pred = keep
            .iter()
            .map(|&y| {
                keep.iter()
                    .enumerate()
                    .filter(|&(_, &x)| self.precedes(x, y))
                    .fold(0u64, |acc, (i, _)| acc | bit(i))
            })
            .collect();
        (Causet { pred }, keep)
    }

    /// Every linear extension, as orders of birth.
    pub fn linear_extensions(&self) -> Vec<Vec<usize>> {
        fn go(c: &Causet, placed: u64, order: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if order.len() == c.len() {
                out.push(order.clone());
                return;
            }
            for y in 0..c.len() {
                if placed & bit(y) == 0 && c.pred[y] & !placed == 0 {
                    order.push(y);
                    go(c, placed | bit(y), order, out);
                    order.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, 0, &mut Vec::new(), &mut out);
        out
    }

    /// Upper-triangle relation bits under the birth order `perm`.
    fn code_under(&self, perm: &[usize]) -> u128 {
        assert!(perm.len() <= 16, "canonical codes cover at most 16 elements");
        let n = perm.len();
        let mut code = 0u128;
        let mut k = 0;
        for j in 0..n {
            for i in 0..j {
                if self.precedes(perm[i], perm[j]) {
                    code |= 1u128 << k;
                }
                k += 1;
            }
        }
        code
    }

    /// Naturally labelled representative with the smallest relation code.
    /// Two causets are isomorphic iff their canonical forms are equal.
    pub fn canonical(&self) -> Causet {
        let best = self
            .linear_extensions()
            .into_iter()
            .min_by_key(|p| self.code_under(p))
            .unwrap_or_default();
        self.relabel(&best)
    }

    /// Canonical relation code; a compact isomorphism invariant.
    pub fn canonical_code(&self) -> u128 {
        self.linear_extensions()
            .iter()
            .map(|p| self.code_under(p))
            .min()
            .unwrap_or(0)
    }

    /// Element `perm[i]` becomes element `i`.
    pub fn relabel(&self, perm: &[usize]) -> Causet {
        let mut inv = vec![0; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let pred = perm
            .iter()
            .map(|&old| self.elements(self.pred[old]).fold(0u64, |acc, x| acc | bit(inv[x])))
            .collect();
        Causet { pred }
    }
}

/// All down-closed subsets, including the empty and the full set.
pub fn ancestor_closed_subsets(c: &Causet) -> Vec<PrecursorSet> {
    // Deciding elements in a linear-extension order keeps every prefix closed.
    let order = c.linear_extensions().into_iter().next().unwrap_or_default();
    let mut out = vec![0u64];
    for &y in &order {
        let mut grown = Vec::new();
        for &s in &out {
            if c.past(y) & !s == 0 {
                grown.push(s | bit(y));
            }
        }
        out.extend(grown);
    }
    out.sort_unstable();
    out.into_iter().map(PrecursorSet).collect()
}

fn binomial<W: Weight>(n: usize, k: usize) -> W {
    if k > n {
        return W::zero();
    }
    let mut acc = W::one();
    for i in 0..k {
        acc = acc * W::from_usize(n - i).expect("small") / W::from_usize(i + 1).expect("small");
    }
    acc
}

/// `t_n = Σ_k (-1)^(n-k) C(n,k) / q_k` for every rank covered by `q`.
pub fn t_params<W: Weight>(q: &[W]) -> Result<Vec<W>> {
    if q.first() != Some(&W::one()) {
        return Err(LabError::DegenerateDynamics("q_0 must be 1".into()));
    }
    if let Some(k) = q.iter().position(|x| !x.gt0() || *x > W::one()) {
        return Err(LabError::DegenerateDynamics(format!(
            "q_{k} = {} is outside (0, 1]",
            q[k].to_f64_lossy()
        )));
    }
    Ok((0..q.len())
        .map(|n| {
            (0..=n).fold(W::zero(), |acc, k| {
                let term = binomial::<W>(n, k) / q[k].clone();
                if (n - k) % 2 == 0 {
                    acc + term
                } else {
                    acc - term
                }
            })
        })
        .collect())
}

/// A sequential-growth law.
#[derive(Debug, Clone, PartialEq)]
pub enum GrowthDynamics<W: Weight = f64> {
    /// Generic law from `q_0 = 1, q_1, …`.
    Percolation { q: Vec<W>, t: Vec<W> },
    /// Every newborn lies above everything; only the chain grows.
    Chain { max_rank: usize },
}

impl<W: Weight> GrowthDynamics<W> {
    pub fn from_q(q: Vec<W>) -> Result<Self> {
        let t = t_params(&q)?;
        Ok(GrowthDynamics::Percolation { q, t })
    }

    /// `q_n = 1 / Σ_j C(n,j) t_j`; rejects a non-positive sum.
    pub fn from_t(t: Vec<W>) -> Result<Self> {
        let q = (0..t.len())
            .map(|n| {
                let d = (0..=n).fold(W::zero(), |acc, j| acc + binomial::<W>(n, j) * t[j].clone());
                if d.gt0() {
                    Ok(W::one() / d)
                } else {
                    Err(LabError::DegenerateDynamics(format!("Σ C({n},j) t_j is not positive")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_q(q)
    }

    /// `q ≡ 1`: every newborn is unrelated to everything.
    pub fn antichain(max_rank: usize) -> Self {
        Self::from_q(vec![W::one(); max_rank + 1]).expect("q ≡ 1 is admissible")
    }

    pub fn chain(max_rank: usize) -> Self {
        GrowthDynamics::Chain { max_rank }
    }

    /// Largest `n` for which transitions from `n`-element causets are defined.
    pub fn max_rank(&self) -> usize {
        match self {
            GrowthDynamics::Percolation { q, .. } => q.len() - 1,
            GrowthDynamics::Chain { max_rank } => *max_rank,
        }
    }

    pub fn label(&self) -> String {
        match self {
            GrowthDynamics::Chain { .. } => "chain".into(),
            GrowthDynamics::Percolation { q, .. } if q.iter().all(|x| x.is_one()) => "antichain".into(),
            GrowthDynamics::Percolation { q, .. } => format!(
                "q=({})",
                q.iter().map(|x| x.to_f64_lossy().to_string()).collect::<Vec<_>>().join(",")
            ),
        }
    }

    pub fn q(&self) -> Vec<W> {
        match self {
            GrowthDynamics::Percolation { q, .. } => q.clone(),
            GrowthDynamics::Chain { max_rank } => {
                let mut q = vec![W::zero(); max_rank + 1];
                q[0] = W::one();
                q
            }
        }
    }

    /// `Σ_j C(n,j) t_j = 1/q_n` at every rank.
    pub fn check_inversion(&self, tol: f64) -> CheckReport {
        let mut tr = Tracker::<W>::new(tol);
        if let GrowthDynamics::Percolation { q, t } = self {
            for n in 0..q.len() {
                let lhs = (0..=n).fold(W::zero(), |acc, j| acc + binomial::<W>(n, j) * t[j].clone());
                tr.equal([format!("rank {n}")], &lhs, &(W::one() / q[n].clone()));
            }
        } else {
            tr.note("chain dynamics has no t-parameters");
        }
        tr.finish("inversion_identity")
    }
}

/// Transition probability from an `n`-element causet through a precursor
/// set with `varpi` elements and `m` maximal elements.
pub fn alpha<W: Weight>(n: usize, varpi: usize, m: usize, dynamics: &GrowthDynamics<W>) -> Result<W> {
    if n > dynamics.max_rank() {
        return Err(LabError::RankOutOfRange {
            rank: n,
            max: dynamics.max_rank(),
        });
    }
    if m > varpi || varpi > n || (varpi > 0 && m == 0) {
        return Err(LabError::Precondition(format!(
            "no precursor set has ϖ = {varpi}, m = {m} inside {n} elements"
        )));
    }
    match dynamics {
        GrowthDynamics::Chain { .. } => Ok(if varpi == n { W::one() } else { W::zero() }),
        GrowthDynamics::Percolation { t, .. } => {
            let num = (m..=varpi).fold(W::zero(), |acc, l| acc + binomial::<W>(varpi - m, varpi - l) * t[l].clone());
            let den = (0..=n).fold(W::zero(), |acc, j| acc + binomial::<W>(n, j) * t[j].clone());
            Ok(num / den)
        }
    }
}

/// `α` of one precursor set of `c`.
pub fn alpha_of<W: Weight>(c: &Causet, s: PrecursorSet, dynamics: &GrowthDynamics<W>) -> Result<W> {
    alpha(c.len(), s.len(), c.maximal_count(s.0), dynamics)
}

/// Probability of each possible precursor set of the next element.
pub fn transition_distribution<W: Weight>(
    c: &Causet,
    dynamics: &GrowthDynamics<W>,
) -> Result<Vec<(PrecursorSet, W)>> {
    ancestor_closed_subsets(c)
        .into_iter()
        .map(|s| alpha_of(c, s, dynamics).map(|a| (s, a)))
        .collect()
}

/// One birth in a grown causet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Birth {
    pub stage: usize,
    pub precursor: Vec<usize>,
    pub probability: f64,
}

/// A causet with the birth order and transition record that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledCauset {
    pub causet: Causet,
    pub births: Vec<Birth>,
}

/// Samples `steps` births from the empty causet.
pub fn grow<W: Weight>(dynamics: &GrowthDynamics<W>, steps: usize, seed: u64) -> Result<LabelledCauset> {
    if steps > MAX_ELEMENTS {
        return Err(LabError::Precondition(format!("at most {MAX_ELEMENTS} births")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Causet::empty();
    let mut births = Vec::with_capacity(steps);
    for stage in 0..steps {
        let dist = transition_distribution(&c, dynamics)?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut pick = None;
        for (s, p) in &dist {
            let p = p.to_f64_lossy();
            if p <= 0.0 {
                continue;
            }
            acc += p;
            pick = Some((*s, p));
            if u < acc {
                break;
            }
        }
        let (s, p) = pick.ok_or_else(|| LabError::DegenerateDynamics("no transition has positive probability".into()))?;
        births.push(Birth {
            stage,
            precursor: s.elements(),
            probability: p,
        });
        c = c.extend(s);
    }
    Ok(LabelledCauset { causet: c, births })
}

/// Canonical causets of each size, grown from the previous size by every
/// precursor set. Counts are 1, 1, 2, 5, 16, 63, 318, 2045, ...
pub fn enumerate_causets(n: usize) -> Vec<Causet> {
    let mut level = vec![Causet::empty()];
    for _ in 0..n {
        let mut seen: HashMap<u128, Causet> = HashMap::new();
        for c in &level {
            for s in ancestor_closed_subsets(c) {
                let child = c.extend(s);
                let code = child.canonical_code();
                seen.entry(code).or_insert_with(|| child.canonical());
            }
        }
        let mut next: Vec<(u128, Causet)> = seen.into_iter().collect();
        next.sort_by_key(|(k, _)| *k);
        level = next.into_iter().map(|(_, c)| c).collect();
    }
    level
}

/// Exact probability of each unlabelled causet after `n` births.
pub fn growth_distribution<W: Weight>(dynamics: &GrowthDynamics<W>, n: usize) -> Result<Vec<(Causet, W)>> {
    let mut level: Vec<(Causet, W)> = vec![(Causet::empty(), W::one())];
    for _ in 0..n {
        let mut next: HashMap<u128, (Causet, W)> = HashMap::new();
        for (c, p) in &level {
            for (s, a) in transition_distribution(c, dynamics)? {
                if a.is_zero() {
                    continue;
                }
                let child = c.extend(s);
                let code = child.canonical_code();
                let entry = next.entry(code).or_insert_with(|| (child.canonical(), W::zero()));
                entry.1 = entry.1.clone() + p.clone() * a;
            }
        }
        let mut v: Vec<(u128, (Causet, W))> = next.into_iter().collect();
        v.sort_by_key(|(k, _)| *k);
        level = v.into_iter().map(|(_, x)| x).collect();
    }
    Ok(level)
}

fn need_rank<W: Weight>(dynamics: &GrowthDynamics<W>, rank: usize) -> Result<()> {
    if rank > dynamics.max_rank() {
        return Err(LabError::RankOutOfRange {
            rank,
            max: dynamics.max_rank(),
        });
    }
    Ok(())
}

fn mask_label(c: &Causet, s: u64) -> String {
    format!("{{{}}}", c.elements(s).map(|i| i.to_string()).collect::<Vec<_>>().join(","))
}

/// Transition distributions sum to one on every causet with at most
/// `max_rank` elements.
pub fn check_sum_rule<W: Weight>(dynamics: &GrowthDynamics<W>, max_rank: usize, tol: f64) -> Result<CheckReport> {
    need_rank(dynamics, max_rank)?;
    let mut tr = Tracker::<W>::new(tol);
    for n in 0..=max_rank {
        for c in enumerate_causets(n) {
            let dist = transition_distribution(&c, dynamics)?;
            let total = dist.iter().fold(W::zero(), |acc, (_, a)| acc + a.clone());
            tr.equal([format!("rank {n} causet {:?}", c.pred)], &total, &W::one());
        }
    }
    Ok(tr.finish("markov_sum_rule"))
}

/// Every birth order of every causet with at most `max_rank` elements has
/// the same probability product.
pub fn check_dgc<W: Weight>(dynamics: &GrowthDynamics<W>, max_rank: usize, tol: f64) -> Result<CheckReport> {
    need_rank(dynamics, max_rank.saturating_sub(1))?;
    let mut tr = Tracker::<W>::new(tol);
    for n in 2..=max_rank {
        for c in enumerate_causets(n) {
            let mut first: Option<W> = None;
            for order in c.linear_extensions() {
                let lc = c.relabel(&order);
                let mut product = W::one();
                for k in 0..n {
                    let (sub, _) = lc.induced(bit(k) - 1);
                    product = product * alpha_of(&sub, PrecursorSet(lc.past(k)), dynamics)?;
                }
                match &first {
                    None => first = Some(product),
                    Some(f) => {
                        tr.equal([format!("rank {n} causet {:?} order {order:?}", c.pred)], &product, f);
                    }
                }
            }
        }
    }
    Ok(tr.finish("discrete_general_covariance"))
}

/// `α_C(S1)/α_C(S2) = α_B(S1)/α_B(S2)` with `B = S1 ∪ S2`, over causets with
/// fewer than `max_rank` elements and pairs of positive transitions.
pub fn check_bell_causality<W: Weight>(
    dynamics: &GrowthDynamics<W>,
    max_rank: usize,
    tol: f64,
) -> Result<CheckReport> {
    need_rank(dynamics, max_rank.saturating_sub(1))?;
    let mut tr = Tracker::<W>::new(tol);
    for n in 0..max_rank {
        for c in enumerate_causets(n) {
            let dist = transition_distribution(&c, dynamics)?;
            for (s1, a1) in &dist {
                for (s2, a2) in &dist {
                    if s1 >= s2 || !a1.gt0() || !a2.gt0() {
                        continue;
                    }
                    let (b, keep) = c.induced(s1.0 | s2.0);
                    let local = |s: PrecursorSet| {
                        PrecursorSet(keep.iter().enumerate().filter(|&(_, &x)| s.0 >> x & 1 == 1).fold(0, |acc, (i, _)| acc | bit(i)))
                    };
                    let b1 = alpha_of(&b, local(*s1), dynamics)?;
                    let b2 = alpha_of(&b, local(*s2), dynamics)?;
                    let tag = format!("rank {n} {:?} S1={} S2={}", c.pred, mask_label(&c, s1.0), mask_label(&c, s2.0));
                    if !b2.gt0() {
                        tr.skip(format!("{tag}: zero in the union"));
                        continue;
                    }
                    tr.equal([tag], &(a1.clone() / a2.clone()), &(b1 / b2));
                }
            }
        }
    }
    Ok(tr.finish("bell_causality"))
}

/// The single-transition strengthening: `prob(C → C1) = prob(B → B1)` with
/// `B` the precursor set. Only causets reached with positive probability
/// and transitions of positive probability are compared. Notes carry the
/// sum-rule conflict: the pinned values of a causet's transitions summed.
pub fn check_strong_sel<W: Weight>(dynamics: &GrowthDynamics<W>, max_rank: usize, tol: f64) -> Result<CheckReport> {
    need_rank(dynamics, max_rank.saturating_sub(1))?;
    let mut tr = Tracker::<W>::new(tol);
    let mut worst_sum: Option<(W, String)> = None;
    for n in 0..max_rank {
        for (c, pc) in growth_distribution(dynamics, n)? {
            if !pc.gt0() {
                continue;
            }
            let mut pinned_sum = W::zero();
            for (s, a) in transition_distribution(&c, dynamics)? {
                let (b, _) = c.induced(s.0);
                let full = PrecursorSet(b.all());
                let pinned = alpha_of(&b, full, dynamics)?;
                pinned_sum = pinned_sum + pinned.clone();
                if a.gt0() {
                    tr.equal(
                        [format!("rank {n} causet {:?} S={}", c.pred, mask_label(&c, s.0)), "precursor growth".into()],
                        &a,
                        &pinned,
                    );
                }
            }
            let dev = (pinned_sum.clone() - W::one()).abs();
            if worst_sum.as_ref().is_none_or(|(w, _)| dev > (w.clone() - W::one()).abs()) {
                worst_sum = Some((pinned_sum, format!("{:?}", c.pred)));
            }
        }
    }
    if let Some((s, c)) = worst_sum {
        tr.note(format!("largest pinned transition sum {} at causet {c}", s.to_f64_lossy()));
    }
    Ok(tr.finish("strong_sel"))
}

/// Outcome of a grid search for dynamics obeying strong SEL.
#[derive(Debug, Clone)]
pub struct StrongSelSearch<W: Weight> {
    pub solutions: Vec<GrowthDynamics<W>>,
    pub scanned: usize,
    /// Grid points whose `α` values are not all in `[0, 1]`.
    pub invalid: usize,
    /// Grid points with an interior zero `q_k` other than the chain law.
    pub undefined: usize,
    pub scope: String,
}

/// Scans `q_1, …, q_{max_rank-1}` over `{0, step, …, 1}` and keeps every law
/// satisfying strong SEL up to causets of `max_rank` elements. `step` must
/// divide one, given as the integer `divisions = 1/step`.
pub fn strong_sel_solutions<W: Weight>(max_rank: usize, divisions: u32) -> Result<StrongSelSearch<W>> {
    let free = max_rank.saturating_sub(1);
    let grid: Vec<W> = (0..=divisions)
        .map(|k| W::from_u32(k).expect("small") / W::from_u32(divisions).expect("small"))
        .collect();
    let points = (grid.len() as u64).pow(free as u32);
    let mut out = StrongSelSearch {
        solutions: Vec::new(),
        scanned: 0,
        invalid: 0,
        undefined: 0,
        scope: format!(
            "q_1..q_{free} on a grid of step 1/{divisions}; causets up to {max_rank} elements; Markovian q-family only"
        ),
    };
    for idx in 0..points {
        out.scanned += 1;
        let mut q = vec![W::one()];
        let mut rest = idx;
        for _ in 0..free {
            q.push(grid[(rest % grid.len() as u64) as usize].clone());
            rest /= grid.len() as u64;
        }
        let dynamics = if q[1..].iter().any(|x| x.is_zero()) {
            if q[1..].iter().all(|x| x.is_zero()) {
                GrowthDynamics::chain(free)
            } else {
                out.undefined += 1;
                continue;
            }
        } else {
            GrowthDynamics::from_q(q)?
        };
        if !is_valid(&dynamics, free)? {
            out.invalid += 1;
            continue;
        }
        if check_strong_sel(&dynamics, max_rank, 0.0)?.holds {
            out.solutions.push(dynamics);
        }
    }
    Ok(out)
}

/// Every transition from causets with at most `rank` elements lies in `[0, 1]`.
pub fn is_valid<W: Weight>(dynamics: &GrowthDynamics<W>, rank: usize) -> Result<bool> {
    for n in 0..=rank {
        for c in enumerate_causets(n) {
            for (_, a) in transition_distribution(&c, dynamics)? {
                if a.lt0() || a > W::one() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::ratio;
    use num::rational::BigRational;

    fn perc() -> GrowthDynamics<BigRational> {
        GrowthDynamics::from_q(vec![ratio(1, 1), ratio(1, 2), ratio(1, 4)]).unwrap()
    }

    #[test]
    fn t_parameters_of_the_worked_example() {
        let GrowthDynamics::Percolation { t, .. } = perc() else { unreachable!() };
        assert_eq!(t, vec![ratio(1, 1); 3]);
        assert!(perc().check_inversion(0.0).holds);
        let GrowthDynamics::<BigRational>::Percolation { t, .. } = GrowthDynamics::antichain(3) else { unreachable!() };
        assert_eq!(t, vec![ratio(1, 1), ratio(0, 1), ratio(0, 1), ratio(0, 1)]);
        assert!(matches!(
            t_params(&[ratio(1, 1), ratio(0, 1)]),
            Err(LabError::DegenerateDynamics(_))
        ));
    }

    #[test]
    fn two_chain_transitions() {
        let d = perc();
        let dist = transition_distribution(&Causet::chain(2), &d).unwrap();
        let probs: Vec<_> = dist.iter().map(|(_, a)| a.clone()).collect();
        assert_eq!(probs, vec![ratio(1, 4), ratio(1, 4), ratio(1, 2)]);
        assert_eq!(alpha(1, 0, 0, &d).unwrap(), ratio(1, 2));
        assert_eq!(alpha(1, 1, 1, &d).unwrap(), ratio(1, 2));
        assert_eq!(alpha(2, 0, 0, &d).unwrap(), ratio(1, 4));
        assert!(matches!(alpha(3, 0, 0, &d), Err(LabError::RankOutOfRange { .. })));
    }

    #[test]
    fn subset_counts() {
        assert_eq!(ancestor_closed_subsets(&Causet::antichain(2)).len(), 4);
        assert_eq!(ancestor_closed_subsets(&Causet::chain(2)).len(), 3);
        let v = Causet::from_relation(&[
            vec![false, true, true],
            vec![false, false, false],
            vec![false, false, false],
        ])
        .unwrap();
        assert_eq!(ancestor_closed_subsets(&v).len(), 5);
        assert_eq!(ancestor_closed_subsets(&Causet::empty()), vec![PrecursorSet(0)]);
    }

    #[test]
    fn relation_validation() {
        assert!(Causet::from_relation(&[vec![true]]).is_err());
        assert!(Causet::from_relation(&[vec![false, true], vec![true, false]]).is_err());
        let not_transitive = [
            vec![false, true, false],
            vec![false, false, true],
            vec![false, false, false],
        ];
        assert!(Causet::from_relation(&not_transitive).is_err());
    }

    #[test]
    fn chain_plus_isolated_paths_agree() {
        // Chain first, then a disconnected element; or antichain first, then
        // an element above one of the two.
        let d = perc();
        let chain_then_apart = alpha(1, 1, 1, &d).unwrap() * alpha(2, 0, 0, &d).unwrap();
        let apart_then_above = alpha(1, 0, 0, &d).unwrap() * alpha(2, 1, 1, &d).unwrap();
        assert_eq!(chain_then_apart, ratio(1, 8));
        assert_eq!(apart_then_above, ratio(1, 8));
    }

    #[test]
    fn strong_sel_witness() {
        let d = perc();
        let anti = Causet::antichain(2);
        assert_eq!(alpha_of(&anti, PrecursorSet(1), &d).unwrap(), ratio(1, 4));
        let r = check_strong_sel(&d, 3, 0.0).unwrap();
        assert!(!r.holds);
        assert!(r.notes[0].contains("2.25"), "{:?}", r.notes);
    }
}
