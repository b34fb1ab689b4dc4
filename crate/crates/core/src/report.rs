//! Uniform verdict records emitted by every checker.

use serde::{Deserialize, Serialize};

use crate::weight::Weight;

const WITNESS_CAP: usize = 64;

/// One compared quantity: what was compared, and the two sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub labels: Vec<String>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Verdict of a single check. `holds` is true exactly when
/// `max_residual <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub condition: String,
    pub holds: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    /// A report that holds trivially with nothing compared.
    pub fn vacuous(condition: impl Into<String>, tolerance: f64, note: impl Into<String>) -> Self {
        CheckReport {
            condition: condition.into(),
            holds: true,
            max_residual: 0.0,
            tolerance,
            witnesses: Vec::new(),
            skipped: Vec::new(),
            notes: vec![note.into()],
        }
    }

    /// Conjunction of several reports under a new name.
    pub fn all(condition: impl Into<String>, tolerance: f64, parts: &[CheckReport]) -> Self {
        let mut out = CheckReport::vacuous(condition, tolerance, "");
        out.notes.clear();
        for p in parts {
            out.holds &= p.holds;
            out.max_residual = out.max_residual.max(p.max_residual);
            for w in &p.witnesses {
                if out.witnesses.len() < WITNESS_CAP {
                    let mut w = w.clone();
                    w.labels.insert(0, p.condition.clone());
                    out.witnesses.push(w);
                }
            }
            out.skipped.extend(p.skipped.iter().cloned());
            out.notes.push(format!("{}: {}", p.condition, if p.holds { "holds" } else { "fails" }));
        }
        if !out.holds && out.max_residual <= tolerance {
            out.max_residual = tolerance.next_up();
        }
        out
    }
}

/// Accumulates residuals in the weight type so a zero tolerance is exact
/// for rationals.
#[derive(Debug, Clone)]
pub struct Tracker<W: Weight> {
    tol: W,
    tol_f64: f64,
    max: W,
    ok: bool,
    verbose: bool,
    worst: Option<Witness>,
    witnesses: Vec<Witness>,
    skipped: Vec<String>,
    notes: Vec<String>,
}

impl<W: Weight> Tracker<W> {
    pub fn new(tol: f64) -> Self {
        Tracker {
            tol: W::from_f64_lossy(tol),
            tol_f64: tol,
            max: W::zero(),
            ok: true,
            verbose: false,
            worst: None,
            witnesses: Vec::new(),
            skipped: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Keep every witness, not only the failing ones.
    pub fn verbose(mut self) -> Self {
        self.verbose = true;
        self
    }

    pub fn tol(&self) -> &W {
        &self.tol
    }

    pub fn ok(&self) -> bool {
        self.ok
    }

    fn push(&mut self, residual: W, labels: Vec<String>, lhs: &W, rhs: &W) -> bool {
        let pass = residual <= self.tol;
        let w = Witness {
            labels,
            lhs: lhs.to_f64_lossy(),
            rhs: rhs.to_f64_lossy(),
        };
        if residual > self.max || self.worst.is_none() {
            if residual > self.max {
                self.max = residual;
            }
            self.worst = Some(w.clone());
        }
        if (!pass || self.verbose) && self.witnesses.len() < WITNESS_CAP {
            self.witnesses.push(w);
        }
        self.ok &= pass;
        pass
    }

    /// Records `|lhs - rhs|`; returns whether it is within tolerance.
    pub fn equal<L: Into<String>>(&mut self, labels: impl IntoIterator<Item = L>, lhs: &W, rhs: &W) -> bool {
        let r = (lhs.clone() - rhs.clone()).abs();
        self.push(r, labels.into_iter().map(Into::into).collect(), lhs, rhs)
    }

    /// Records the strict inequality `lhs > rhs`. A violation is charged a
    /// residual strictly above the tolerance.
    pub fn greater<L: Into<String>>(&mut self, labels: impl IntoIterator<Item = L>, lhs: &W, rhs: &W) -> bool {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if lhs > rhs {
            return self.push(W::zero(), labels, lhs, rhs);
        }
        let gap = rhs.clone() - lhs.clone();
        let charge = self.tol.clone() + gap + W::from_f64_lossy(f64::EPSILON);
        self.push(charge, labels, lhs, rhs)
    }

    /// Records `lhs >= rhs - tol`.
    pub fn at_least<L: Into<String>>(&mut self, labels: impl IntoIterator<Item = L>, lhs: &W, rhs: &W) -> bool {
        let gap = rhs.clone() - lhs.clone();
        let r = if gap.gt0() { gap } else { W::zero() };
        self.push(r, labels.into_iter().map(Into::into).collect(), lhs, rhs)
    }

    /// Records a violation that has no numeric sides.
    pub fn fail(&mut self, labels: Vec<String>) {
        let charge = self.tol.clone() + W::one();
        self.push(charge, labels, &W::zero(), &W::one());
    }

    pub fn skip(&mut self, what: impl Into<String>) {
        self.skipped.push(what.into());
    }

    pub fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    pub fn max_residual(&self) -> &W {
        &self.max
    }

    pub fn finish(self, condition: impl Into<String>) -> CheckReport {
        let mut witnesses = self.witnesses;
        if witnesses.is_empty() {
            witnesses.extend(self.worst);
        }
        let mut max_residual = self.max.to_f64_lossy();
        if !self.ok && max_residual <= self.tol_f64 {
            max_residual = self.tol_f64.next_up();
        }
        if self.ok && max_residual > self.tol_f64 {
            max_residual = self.tol_f64;
        }
        CheckReport {
            condition: condition.into(),
            holds: self.ok,
            max_residual,
            tolerance: self.tol_f64,
            witnesses,
            skipped: self.skipped,
            notes: self.notes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::ratio;
    use num::rational::BigRational;

    #[test]
    fn zero_tolerance_is_exact_for_rationals() {
        let mut t = Tracker::<BigRational>::new(0.0);
        assert!(t.equal(["a"], &ratio(1, 3), &ratio(2, 6)));
        let r = t.finish("eq");
        assert!(r.holds);
        assert_eq!(r.max_residual, 0.0);

        let mut t = Tracker::<BigRational>::new(0.0);
        t.equal(["a"], &ratio(1, 3), &(ratio(1, 3) + ratio(1, 1_000_000_000_000)));
        let r = t.finish("eq");
        assert!(!r.holds);
        assert!(r.max_residual > r.tolerance);
    }

    #[test]
    fn strict_inequality_fails_on_equality() {
        let mut t = Tracker::<f64>::new(1e-9);
        t.greater(["raise"], &0.5, &0.5);
        let r = t.finish("strict");
        assert!(!r.holds);
        assert!(r.max_residual > r.tolerance);
    }

    #[test]
    fn conjunction_keeps_the_invariant() {
        let mut a = Tracker::<f64>::new(1e-9);
        a.equal(["x"], &0.1, &0.1);
        let mut b = Tracker::<f64>::new(1e-9);
        b.greater(["y"], &0.1, &0.2);
        let r = CheckReport::all("both", 1e-9, &[a.finish("a"), b.finish("b")]);
        assert!(!r.holds);
        assert!(r.max_residual > r.tolerance);
    }
}
