//! Finite probability spaces, events, partitions and screening-off.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LabError, Result};
use crate::report::{CheckReport, Tracker};
use crate::weight::Weight;

/// Normalization slack allowed when a space is built.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Default tolerance for checkers.
pub const DEFAULT_TOL: f64 = 1e-9;

/// A set of atoms of one space, stored as a bitset over atom indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    bits: Vec<u64>,
    len: usize,
}

impl Event {
    pub fn empty(len: usize) -> Self {
        Event {
            bits: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn full(len: usize) -> Self {
        let mut e = Event::empty(len);
        for i in 0..len {
            e.insert(i);
        }
        e
    }

    pub fn from_indices(len: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut e = Event::empty(len);
        for i in idx {
            e.insert(i);
        }
        e
    }

    pub fn from_fn(len: usize, f: impl Fn(usize) -> bool) -> Self {
        Event::from_indices(len, (0..len).filter(|&i| f(i)))
    }

    /// Number of atoms in the ambient space.
    pub fn universe(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "atom index {i} outside space of {}", self.len);
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.contains(i))
    }

    fn zip(&self, other: &Event, op: impl Fn(u64, u64) -> u64) -> Event {
        assert_eq!(self.len, other.len, "events from different spaces");
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| op(a, b)).collect();
        Event { bits, len: self.len }
    }

    pub fn and(&self, other: &Event) -> Event {
        self.zip(other, |a, b| a & b)
    }

    pub fn or(&self, other: &Event) -> Event {
        self.zip(other, |a, b| a | b)
    }

    pub fn minus(&self, other: &Event) -> Event {
        self.zip(other, |a, b| a & !b)
    }

    pub fn not(&self) -> Event {
        Event::full(self.len).minus(self)
    }

    pub fn is_subset(&self, other: &Event) -> bool {
        self.minus(other).is_empty()
    }

    pub fn is_disjoint(&self, other: &Event) -> bool {
        self.and(other).is_empty()
    }
}

/// Cells that are pairwise disjoint and cover the space.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    cells: Vec<Event>,
}

impl Partition {
    pub fn new(cells: Vec<Event>) -> Result<Self> {
        let n = cells
            .first()
            .map(Event::universe)
            .ok_or_else(|| LabError::InvalidPartition("no cells".into()))?;
        let mut seen = Event::empty(n);
        for (k, c) in cells.iter().enumerate() {
            if c.universe() != n {
                return Err(LabError::InvalidPartition(format!("cell {k} belongs to another space")));
            }
            if !c.is_disjoint(&seen) {
                return Err(LabError::InvalidPartition(format!("cell {k} overlaps an earlier cell")));
            }
            seen = seen.or(c);
        }
        if seen.count() != n {
            return Err(LabError::InvalidPartition(format!(
                "cells cover {} of {n} atoms",
                seen.count()
            )));
        }
        Ok(Partition { cells })
    }

    pub fn trivial(n: usize) -> Self {
        Partition {
            cells: vec![Event::full(n)],
        }
    }

    pub fn atomic(n: usize) -> Self {
        Partition {
            cells: (0..n).map(|i| Event::from_indices(n, [i])).collect(),
        }
    }

    /// `{c, not c}`, dropping an empty side.
    pub fn binary(c: &Event) -> Self {
        let cells = [c.clone(), c.not()].into_iter().filter(|e| !e.is_empty()).collect();
        Partition { cells }
    }

    /// Common refinement of two partitions of the same space.
    pub fn meet(&self, other: &Partition) -> Partition {
        let mut cells = Vec::new();
        for a in &self.cells {
            for b in &other.cells {
                let c = a.and(b);
                if !c.is_empty() {
                    cells.push(c);
                }
            }
        }
        Partition { cells }
    }

    pub fn cells(&self) -> &[Event] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// A finite sample space of labelled, weighted atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySpace<W: Weight = f64> {
    labels: Vec<String>,
    weights: Vec<W>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    label: String,
    weight: Value,
}

#[derive(Serialize, Deserialize)]
struct SpaceJson {
    atoms: Vec<AtomJson>,
}

impl<W: Weight> ProbabilitySpace<W> {
    /// Validates labels, signs and normalization.
    pub fn new(atoms: Vec<(String, W)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(LabError::InvalidSpace("a space needs at least one atom".into()));
        }
        let mut index = HashMap::with_capacity(atoms.len());
        let mut total = W::zero();
        for (i, (label, w)) in atoms.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(LabError::InvalidSpace(format!("duplicate label {label:?}")));
            }
            if w.lt0() {
                return Err(LabError::InvalidSpace(format!("negative weight on {label:?}")));
            }
            total = total + w.clone();
        }
        if (total.clone() - W::one()).abs() > W::from_f64_lossy(NORMALIZATION_TOL) {
            return Err(LabError::InvalidSpace(format!(
                "weights sum to {}, not 1",
                total.to_f64_lossy()
            )));
        }
        let (labels, weights) = atoms.into_iter().unzip();
        Ok(ProbabilitySpace { labels, weights, index })
    }

    /// Builds a space after dividing every weight by their sum.
    pub fn normalized(atoms: Vec<(String, W)>) -> Result<Self> {
        let total = atoms.iter().fold(W::zero(), |acc, (_, w)| acc + w.clone());
        if !total.gt0() {
            return Err(LabError::InvalidSpace("total weight is not positive".into()));
        }
        Self::new(atoms.into_iter().map(|(l, w)| (l, w / total.clone())).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> &[W] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &W {
        &self.weights[i]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Event from atom labels; unknown labels are rejected.
    pub fn event<S: AsRef<str>>(&self, labels: &[S]) -> Result<Event> {
        let mut e = Event::empty(self.len());
        for l in labels {
            let l = l.as_ref();
            let i = self
                .index_of(l)
                .ok_or_else(|| LabError::InvalidEvent(format!("unknown atom label {l:?}")))?;
            e.insert(i);
        }
        Ok(e)
    }

    /// Event of all atoms whose label satisfies `f`.
    pub fn event_where(&self, f: impl Fn(&str) -> bool) -> Event {
        Event::from_fn(self.len(), |i| f(&self.labels[i]))
    }

    pub fn whole(&self) -> Event {
        Event::full(self.len())
    }

    pub fn nothing(&self) -> Event {
        Event::empty(self.len())
    }

    pub fn event_labels(&self, e: &Event) -> Vec<String> {
        e.indices().map(|i| self.labels[i].clone()).collect()
    }

    pub fn check_event(&self, e: &Event) -> Result<()> {
        if e.universe() != self.len() {
            return Err(LabError::InvalidEvent(format!(
                "event over {} atoms used in a space of {}",
                e.universe(),
                self.len()
            )));
        }
        Ok(())
    }

    pub fn to_f64(&self) -> ProbabilitySpace<f64> {
        ProbabilitySpace {
            labels: self.labels.clone(),
            weights: self.weights.iter().map(Weight::to_f64_lossy).collect(),
            index: self.index.clone(),
        }
    }

    pub fn to_json(&self) -> Value {
        let atoms = self
            .labels
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| AtomJson {
                label: l.clone(),
                weight: w.to_json(),
            })
            .collect();
        serde_json::to_value(SpaceJson { atoms }).expect("space serializes")
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let raw: SpaceJson =
            serde_json::from_value(v.clone()).map_err(|e| LabError::Parse(e.to_string()))?;
        let atoms = raw
            .atoms
            .into_iter()
            .map(|a| {
                W::from_json(&a.weight)
                    .map(|w| (a.label.clone(), w))
                    .ok_or_else(|| LabError::Parse(format!("bad weight for {:?}", a.label)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms)
    }
}

/// Sum of member weights.
pub fn prob<W: Weight>(space: &ProbabilitySpace<W>, e: &Event) -> W {
    e.indices().fold(W::zero(), |acc, i| acc + space.weights[i].clone())
}

/// Validating variant of [`prob`].
pub fn try_prob<W: Weight>(space: &ProbabilitySpace<W>, e: &Event) -> Result<W> {
    space.check_event(e)?;
    Ok(prob(space, e))
}

/// `pr(a | b)`; refuses to condition on a null event.
pub fn cond_prob<W: Weight>(space: &ProbabilitySpace<W>, a: &Event, b: &Event) -> Result<W> {
    space.check_event(a)?;
    space.check_event(b)?;
    let pb = prob(space, b);
    if !pb.gt0() {
        return Err(LabError::NullCondition(format!(
            "condition {:?} has probability zero",
            space.event_labels(b)
        )));
    }
    Ok(prob(space, &a.and(b)) / pb)
}

/// `pr(e & f) - pr(e) pr(f)`.
pub fn correlation<W: Weight>(space: &ProbabilitySpace<W>, e: &Event, f: &Event) -> W {
    prob(space, &e.and(f)) - prob(space, e) * prob(space, f)
}

/// Residual `pr(ef|c) - pr(e|c) pr(f|c)`.
pub fn conditional_covariance<W: Weight>(
    space: &ProbabilitySpace<W>,
    c: &Event,
    e: &Event,
    f: &Event,
) -> Result<W> {
    let pef = cond_prob(space, &e.and(f), c)?;
    let pe = cond_prob(space, e, c)?;
    let pf = cond_prob(space, f, c)?;
    Ok(pef - pe * pf)
}

fn record_screening<W: Weight>(
    t: &mut Tracker<W>,
    space: &ProbabilitySpace<W>,
    name: &str,
    c: &Event,
    e: &Event,
    f: &Event,
) -> Result<()> {
    let pef = cond_prob(space, &e.and(f), c)?;
    let pe = cond_prob(space, e, c)?;
    let pf = cond_prob(space, f, c)?;
    t.equal([format!("pr(EF|{name})"), format!("pr(E|{name})pr(F|{name})")], &pef, &(pe * pf));
    Ok(())
}

/// Does conditioning on `c` remove the correlation between `e` and `f`?
pub fn screens_off<W: Weight>(
    space: &ProbabilitySpace<W>,
    c: &Event,
    e: &Event,
    f: &Event,
    tol: f64,
) -> Result<CheckReport> {
    space.check_event(e)?;
    space.check_event(f)?;
    let mut t = Tracker::new(tol).verbose();
    record_screening(&mut t, space, "C", c, e, f)?;
    Ok(t.finish("screens_off"))
}

fn reichenbach_inner<W: Weight>(
    space: &ProbabilitySpace<W>,
    c: &Event,
    e: &Event,
    f: &Event,
    tol: f64,
    signed: bool,
) -> Result<CheckReport> {
    space.check_event(e)?;
    space.check_event(f)?;
    let pc = try_prob(space, c)?;
    if !pc.gt0() || pc >= W::one() {
        return Err(LabError::NullCondition(
            "a common cause needs 0 < pr(C) < 1 so both C and not-C can be conditioned on".into(),
        ));
    }
    let mut t = Tracker::new(tol).verbose();
    record_screening(&mut t, space, "C", c, e, f)?;
    record_screening(&mut t, space, "~C", &c.not(), e, f)?;
    let (pe, pf) = (prob(space, e), prob(space, f));
    let (pec, pfc) = (cond_prob(space, e, c)?, cond_prob(space, f, c)?);
    t.greater(["pr(E|C)", "pr(E)"], &pec, &pe);
    if signed && correlation(space, e, f).lt0() {
        t.greater(["pr(F)", "pr(F|C)"], &pf, &pfc);
        t.note("negative correlation: C must lower F");
    } else {
        t.greater(["pr(F|C)", "pr(F)"], &pfc, &pf);
    }
    Ok(t.finish(if signed { "reichenbach_signed" } else { "reichenbach" }))
}

/// The four conditions on a Reichenbachian common cause: C and not-C screen
/// off, and C raises both `pr(E)` and `pr(F)`.
pub fn reichenbach_check<W: Weight>(
    space: &ProbabilitySpace<W>,
    c: &Event,
    e: &Event,
    f: &Event,
    tol: f64,
) -> Result<CheckReport> {
    reichenbach_inner(space, c, e, f, tol, false)
}

/// Sign-symmetric variant: for a negative correlation C raises E and lowers F.
pub fn reichenbach_check_signed<W: Weight>(
    space: &ProbabilitySpace<W>,
    c: &Event,
    e: &Event,
    f: &Event,
    tol: f64,
) -> Result<CheckReport> {
    reichenbach_inner(space, c, e, f, tol, true)
}

/// Every positive-weight cell must screen off; null cells are skipped.
pub fn partition_screens_off<W: Weight>(
    space: &ProbabilitySpace<W>,
    part: &Partition,
    e: &Event,
    f: &Event,
    tol: f64,
) -> Result<CheckReport> {
    space.check_event(e)?;
    space.check_event(f)?;
    let mut t = Tracker::new(tol);
    for (k, cell) in part.cells().iter().enumerate() {
        space.check_event(cell)?;
        if !prob(space, cell).gt0() {
            t.skip(format!("cell {k}: zero probability"));
            continue;
        }
        record_screening(&mut t, space, &format!("cell{k}"), cell, e, f)?;
    }
    Ok(t.finish("partition_screens_off"))
}

/// Restricts to `h` and renormalizes.
pub fn conditionalize<W: Weight>(space: &ProbabilitySpace<W>, h: &Event) -> Result<ProbabilitySpace<W>> {
    space.check_event(h)?;
    let ph = prob(space, h);
    if !ph.gt0() {
        return Err(LabError::NullCondition("conditionalizing on a null event".into()));
    }
    let atoms = h
        .indices()
        .map(|i| (space.labels[i].clone(), space.weights[i].clone() / ph.clone()))
        .collect();
    ProbabilitySpace::new(atoms)
}

/// Maps an event of `space` to the corresponding event of a
/// conditionalized space built from `h`.
pub fn restrict_event<W: Weight>(
    space: &ProbabilitySpace<W>,
    sub: &ProbabilitySpace<W>,
    e: &Event,
) -> Event {
    Event::from_indices(
        sub.len(),
        e.indices()
            .filter_map(|i| sub.index_of(space.label(i))),
    )
}
