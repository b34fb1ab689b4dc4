//! Weak and strong common-cause verdicts, and the disjoint-union extension
//! that manufactures a screening cause for any correlated pair.
//!
//! The extension works on the four cells of the pair. Writing `c = pr(C)`,
//! the conditional marginals are parameterized as
//!
//! ```text
//! pr(E|C)  = pE + (1-c)·δ      pr(F|C)  = pF + (1-c)·ε
//! pr(E|~C) = pE - c·δ          pr(F|~C) = pF - c·ε
//! ```
//!
//! which keeps both marginals fixed and leaves `cov = c(1-c)·δ·ε`. The copy
//! weights then follow from screening inside each copy.

use crate::error::{LabError, Result};
use crate::prob::{correlation, partition_screens_off, prob, Event, Partition, ProbabilitySpace};
use crate::report::{CheckReport, Tracker};
use crate::weight::Weight;

/// Grid resolution for the search over `pr(C)`.
const C_GRID: i64 = 1024;
const BISECTION_STEPS: usize = 48;

/// Pairs of events in one space whose correlations need explaining.
#[derive(Debug, Clone)]
pub struct CorrelationFamily<W: Weight = f64> {
    pub space: ProbabilitySpace<W>,
    pub pairs: Vec<(Event, Event)>,
}

impl<W: Weight> CorrelationFamily<W> {
    pub fn new(space: ProbabilitySpace<W>, pairs: Vec<(Event, Event)>) -> Result<Self> {
        for (e, f) in &pairs {
            space.check_event(e)?;
            space.check_event(f)?;
        }
        Ok(CorrelationFamily { space, pairs })
    }

    /// Indices of pairs whose correlation exceeds `tol` in magnitude.
    pub fn correlated(&self, tol: f64) -> Vec<usize> {
        let t = W::from_f64_lossy(tol);
        (0..self.pairs.len())
            .filter(|&m| {
                let (e, f) = &self.pairs[m];
                correlation(&self.space, e, f).abs() > t
            })
            .collect()
    }
}

/// Map from source atoms to disjoint sets of target atoms.
#[derive(Debug, Clone)]
pub struct SpaceEmbedding<W: Weight = f64> {
    pub source: ProbabilitySpace<W>,
    pub target: ProbabilitySpace<W>,
    pub atom_map: Vec<Vec<usize>>,
}

impl<W: Weight> SpaceEmbedding<W> {
    /// Image of a source event.
    pub fn push(&self, e: &Event) -> Event {
        Event::from_indices(
            self.target.len(),
            e.indices().flat_map(|i| self.atom_map[i].iter().copied()),
        )
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &SpaceEmbedding<W>) -> SpaceEmbedding<W> {
        let atom_map = self
            .atom_map
            .iter()
            .map(|img| img.iter().flat_map(|&j| next.atom_map[j].iter().copied()).collect())
            .collect();
        SpaceEmbedding {
            source: self.source.clone(),
            target: next.target.clone(),
            atom_map,
        }
    }

    /// Images are disjoint, cover the target, and carry the source weights.
    pub fn verify(&self, tol: f64) -> CheckReport {
        let mut t = Tracker::<W>::new(tol);
        let mut seen = Event::empty(self.target.len());
        for (i, img) in self.atom_map.iter().enumerate() {
            let ev = Event::from_indices(self.target.len(), img.iter().copied());
            if !ev.is_disjoint(&seen) {
                t.fail(vec![format!("image of {} overlaps", self.source.label(i))]);
            }
            seen = seen.or(&ev);
            t.equal(
                [format!("weight({})", self.source.label(i)), "pushed weight".to_string()],
                self.source.weight(i),
                &prob(&self.target, &ev),
            );
        }
        if seen.count() != self.target.len() {
            t.fail(vec!["images do not cover the target".into()]);
        }
        t.finish("measure_preserving_embedding")
    }
}

/// Per pair, every positive cell of its own partition screens off.
pub fn weak_pcc_check<W: Weight>(
    fam: &CorrelationFamily<W>,
    partitions: &[Partition],
    tol: f64,
) -> Result<CheckReport> {
    if partitions.len() != fam.pairs.len() {
        return Err(LabError::Arity {
            expected: fam.pairs.len(),
            got: partitions.len(),
        });
    }
    let correlated = fam.correlated(tol);
    if correlated.is_empty() {
        return Ok(CheckReport::vacuous("weak_pcc", tol, "no correlated pairs"));
    }
    let mut parts = Vec::new();
    for m in correlated {
        let (e, f) = &fam.pairs[m];
        let mut r = partition_screens_off(&fam.space, &partitions[m], e, f, tol)?;
        r.condition = format!("pair{m}");
        parts.push(r);
    }
    Ok(CheckReport::all("weak_pcc", tol, &parts))
}

/// One partition whose every positive cell screens off every correlated pair.
pub fn strong_pcc_check<W: Weight>(
    fam: &CorrelationFamily<W>,
    part: &Partition,
    tol: f64,
) -> Result<CheckReport> {
    let correlated = fam.correlated(tol);
    if correlated.is_empty() {
        return Ok(CheckReport::vacuous("strong_pcc", tol, "no correlated pairs"));
    }
    let mut parts = Vec::new();
    for m in correlated {
        let (e, f) = &fam.pairs[m];
        let mut r = partition_screens_off(&fam.space, part, e, f, tol)?;
        r.condition = format!("pair{m}");
        parts.push(r);
    }
    Ok(CheckReport::all("strong_pcc", tol, &parts))
}

/// Exact parameters of a two-copy common cause for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CauseParameters<W: Weight> {
    /// `pr(C)`.
    pub c: W,
    /// `pr(E|C)`, `pr(E|~C)`, `pr(F|C)`, `pr(F|~C)`.
    pub e_given_c: W,
    pub e_given_not_c: W,
    pub f_given_c: W,
    pub f_given_not_c: W,
    /// Feasible values of `pr(C)` found on the search grid, as `(lo, hi)`.
    pub feasible_span: (f64, f64),
}

impl<W: Weight> CauseParameters<W> {
    /// Mass of cell `(x, y)` inside copy 1 (the cause), with `true` meaning
    /// the event occurs.
    pub fn copy1_mass(&self, x: bool, y: bool) -> W {
        let one = W::one();
        let a = if x { self.e_given_c.clone() } else { one.clone() - self.e_given_c.clone() };
        let b = if y { self.f_given_c.clone() } else { one - self.f_given_c.clone() };
        self.c.clone() * a * b
    }
}

fn half<W: Weight>() -> W {
    W::one() / (W::one() + W::one())
}

fn from_ratio<W: Weight>(p: i64, q: i64) -> W {
    W::from_i64(p).expect("small integer") / W::from_i64(q).expect("small integer")
}

/// `c(1-c)·δmax(c)·εmax(c)`, the largest covariance reachable at `pr(C) = c`.
fn reachable<W: Weight>(c: &W, pe: &W, pf: &W, negative: bool) -> W {
    let one = W::one();
    let nc = one.clone() - c.clone();
    let u = W::min_of(c.clone() * (one.clone() - pe.clone()), nc.clone() * pe.clone());
    let v = if negative {
        W::min_of(c.clone() * pf.clone(), nc.clone() * (one - pf.clone()))
    } else {
        W::min_of(c.clone() * (one - pf.clone()), nc.clone() * pf.clone())
    };
    u * v / (c.clone() * nc)
}

fn check_margins<W: Weight>(pe: &W, pf: &W) -> Result<()> {
    let one = W::one();
    if pe.gt0() && *pe < one && pf.gt0() && *pf < one {
        Ok(())
    } else {
        Err(LabError::Precondition(
            "both events need probability strictly between 0 and 1".into(),
        ))
    }
}

fn candidates<W: Weight>(pe: &W, pf: &W) -> Vec<W> {
    let one = W::one();
    let mut out: Vec<W> = (1..C_GRID).map(|j| from_ratio(j, C_GRID)).collect();
    for k in [pe.clone(), pf.clone(), one.clone() - pe.clone(), one.clone() - pf.clone()] {
        if k.gt0() && k < one {
            out.push(k);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("ordered"));
    out.dedup();
    out
}

/// Values of `pr(C)` on the search grid (plus the kinks of the bounds) at
/// which a cause exists, in increasing order.
pub fn feasible_grid<W: Weight>(pe: &W, pf: &W, cov: &W) -> Result<Vec<W>> {
    check_margins(pe, pf)?;
    let target = cov.abs();
    Ok(candidates(pe, pf)
        .into_iter()
        .filter(|c| reachable(c, pe, pf, cov.lt0()) >= target)
        .collect())
}

/// Chooses `pr(C)` closest to one half among feasible values, then splits the
/// covariance as evenly as the bounds allow.
pub fn solve_cause<W: Weight>(pe: &W, pf: &W, cov: &W) -> Result<CauseParameters<W>> {
    check_margins(pe, pf)?;
    let negative = cov.lt0();
    let target = cov.abs();
    let feasible = |c: &W| reachable(c, pe, pf, negative) >= target;
    let grid = feasible_grid(pe, pf, cov)?;
    let h = half::<W>();
    let dist = |c: &W| (c.clone() - h.clone()).abs();
    let Some(mut c) = grid.iter().min_by(|a, b| dist(a).partial_cmp(&dist(b)).expect("ordered")).cloned() else {
        let best_gap = candidates(pe, pf)
            .iter()
            .map(|c| (target.clone() - reachable(c, pe, pf, negative)).to_f64_lossy())
            .fold(f64::INFINITY, f64::min);
        return Err(LabError::NoSolution {
            residual: best_gap,
            reason: "no value of pr(C) reaches the covariance".into(),
        });
    };
    if feasible(&h) {
        c = h;
    } else {
        // Pull toward one half while staying feasible.
        let step = from_ratio::<W>(1, C_GRID);
        let mut far = if c < h {
            W::min_of(c.clone() + step, h.clone())
        } else {
            W::max_of(c.clone() - step, h.clone())
        };
        for _ in 0..BISECTION_STEPS {
            let mid = (c.clone() + far.clone()) * half::<W>();
            if feasible(&mid) {
                c = mid;
            } else {
                far = mid;
            }
        }
    }
    let mut params = cause_at(pe, pf, cov, &c)?;
    if let (Some(lo), Some(hi)) = (grid.first(), grid.last()) {
        params.feasible_span = (lo.to_f64_lossy(), hi.to_f64_lossy());
    }
    Ok(params)
}

/// Cause parameters at a prescribed `pr(C) = c`, splitting the covariance as
/// evenly as the bounds allow.
pub fn cause_at<W: Weight>(pe: &W, pf: &W, cov: &W, c: &W) -> Result<CauseParameters<W>> {
    check_margins(pe, pf)?;
    let (zero, one) = (W::zero(), W::one());
    if !(c.gt0() && *c < one) {
        return Err(LabError::Precondition("pr(C) must lie strictly between 0 and 1".into()));
    }
    let negative = cov.lt0();
    let target = cov.abs();
    let reach = reachable(c, pe, pf, negative);
    if reach < target {
        return Err(LabError::NoSolution {
            residual: (target - reach).to_f64_lossy(),
            reason: format!("pr(C) = {} cannot carry the covariance", c.to_f64_lossy()),
        });
    }
    let c = c.clone();
    let nc = one.clone() - c.clone();
    let dm = W::min_of((one.clone() - pe.clone()) / nc.clone(), pe.clone() / c.clone());
    let em = if negative {
        W::min_of(pf.clone() / nc.clone(), (one.clone() - pf.clone()) / c.clone())
    } else {
        W::min_of((one.clone() - pf.clone()) / nc.clone(), pf.clone() / c.clone())
    };
    let (delta, eps) = if target.is_zero() {
        (zero.clone(), zero)
    } else {
        let k = target / (c.clone() * nc.clone());
        let r = k.clone() / (dm.clone() * em);
        let rho = W::min_of(r.sqrt_upper(), one);
        let delta = dm * rho;
        let eps = k / delta.clone();
        (delta, if negative { -eps } else { eps })
    };
    let cf = c.to_f64_lossy();
    Ok(CauseParameters {
        e_given_c: pe.clone() + nc.clone() * delta.clone(),
        e_given_not_c: pe.clone() - c.clone() * delta,
        f_given_c: pf.clone() + nc * eps.clone(),
        f_given_not_c: pf.clone() - c.clone() * eps,
        c,
        feasible_span: (cf, cf),
    })
}

/// Doubles the space along a pair of events. Copy 1 (even target indices)
/// is the cause. Uncorrelated pairs are split evenly.
fn extend_pair<W: Weight>(
    space: &ProbabilitySpace<W>,
    e: &Event,
    f: &Event,
    params: Option<&CauseParameters<W>>,
) -> Result<(ProbabilitySpace<W>, SpaceEmbedding<W>, Event)> {
    let cells = [
        (true, true, e.and(f)),
        (true, false, e.minus(f)),
        (false, true, f.minus(e)),
        (false, false, e.or(f).not()),
    ];
    let mut share = vec![half::<W>(); space.len()];
    if let Some(p) = params {
        for (x, y, cell) in &cells {
            let m = prob(space, cell);
            let s = if m.gt0() { p.copy1_mass(*x, *y) / m } else { W::zero() };
            for i in cell.indices() {
                share[i] = s.clone();
            }
        }
    }
    let mut atoms = Vec::with_capacity(2 * space.len());
    let mut atom_map = Vec::with_capacity(space.len());
    for i in 0..space.len() {
        let w = space.weight(i).clone();
        let w1 = w.clone() * share[i].clone();
        let w2 = w - w1.clone();
        let (w1, w2) = (W::max_of(w1, W::zero()), W::max_of(w2, W::zero()));
        atoms.push((format!("{}/1", space.label(i)), w1));
        atoms.push((format!("{}/2", space.label(i)), w2));
        atom_map.push(vec![2 * i, 2 * i + 1]);
    }
    let target = ProbabilitySpace::new(atoms)?;
    let cause = Event::from_fn(target.len(), |j| j % 2 == 0);
    let emb = SpaceEmbedding {
        source: space.clone(),
        target: target.clone(),
        atom_map,
    };
    Ok((target, emb, cause))
}

/// Builds a two-copy extension in which copy 1 is a common cause of the
/// images of `e` and `f`.
pub fn extend_with_common_cause<W: Weight>(
    space: &ProbabilitySpace<W>,
    e: &Event,
    f: &Event,
) -> Result<(ProbabilitySpace<W>, SpaceEmbedding<W>, Event)> {
    space.check_event(e)?;
    space.check_event(f)?;
    let cov = correlation(space, e, f);
    if cov.is_zero() {
        return Err(LabError::Precondition("events are uncorrelated; nothing to explain".into()));
    }
    let params = solve_cause(&prob(space, e), &prob(space, f), &cov)?;
    extend_pair(space, e, f, Some(&params))
}

/// Applies the extension once per pair. Pairs with no correlation get an
/// even split so the atom count still doubles per stage.
pub fn iterate_extensions<W: Weight>(
    fam: &CorrelationFamily<W>,
) -> Result<(ProbabilitySpace<W>, Vec<Event>)> {
    iterate_extensions_with_map(fam).map(|(space, _, causes)| (space, causes))
}

/// Like [`iterate_extensions`], also returning the composed embedding.
pub fn iterate_extensions_with_map<W: Weight>(
    fam: &CorrelationFamily<W>,
) -> Result<(ProbabilitySpace<W>, SpaceEmbedding<W>, Vec<Event>)> {
    let mut total = SpaceEmbedding {
        source: fam.space.clone(),
        target: fam.space.clone(),
        atom_map: (0..fam.space.len()).map(|i| vec![i]).collect(),
    };
    let mut causes: Vec<Event> = Vec::new();
    for (e, f) in &fam.pairs {
        let (e1, f1) = (total.push(e), total.push(f));
        let cur = &total.target;
        let cov = correlation(cur, &e1, &f1);
        let (_, emb, cause) = if cov.is_zero() {
            extend_pair(cur, &e1, &f1, None)?
        } else {
            let params = solve_cause(&prob(cur, &e1), &prob(cur, &f1), &cov)?;
            extend_pair(cur, &e1, &f1, Some(&params))?
        };
        causes = causes.iter().map(|c| emb.push(c)).collect();
        causes.push(cause);
        total = total.then(&emb);
    }
    Ok((total.target.clone(), total, causes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{reichenbach_check, reichenbach_check_signed};
    use crate::weight::ratio;
    use num::rational::BigRational;

    fn four(w: [BigRational; 4]) -> (ProbabilitySpace<BigRational>, Event, Event) {
        let [a, b, c, d] = w;
        let s = ProbabilitySpace::new(vec![
            ("ef".into(), a),
            ("e~f".into(), b),
            ("~ef".into(), c),
            ("~e~f".into(), d),
        ])
        .unwrap();
        let e = s.event(&["ef", "e~f"]).unwrap();
        let f = s.event(&["ef", "~ef"]).unwrap();
        (s, e, f)
    }

    #[test]
    fn balanced_example_matches_hand_computation() {
        let (s, e, f) = four([ratio(34, 100), ratio(16, 100), ratio(16, 100), ratio(34, 100)]);
        let (t, emb, c) = extend_with_common_cause(&s, &e, &f).unwrap();
        let copy1: Vec<_> = c.indices().map(|i| t.weight(i).clone()).collect();
        assert_eq!(copy1, vec![ratio(32, 100), ratio(8, 100), ratio(8, 100), ratio(2, 100)]);
        let copy2: Vec<_> = c.not().indices().map(|i| t.weight(i).clone()).collect();
        assert_eq!(copy2, vec![ratio(2, 100), ratio(8, 100), ratio(8, 100), ratio(32, 100)]);
        assert!(emb.verify(0.0).holds);
        assert!(reichenbach_check(&t, &c, &emb.push(&e), &emb.push(&f), 0.0).unwrap().holds);
    }

    #[test]
    fn anticorrelated_pair_gets_signed_cause() {
        let (s, e, f) = four([ratio(1, 10), ratio(4, 10), ratio(4, 10), ratio(1, 10)]);
        let (t, emb, c) = extend_with_common_cause(&s, &e, &f).unwrap();
        let r = reichenbach_check_signed(&t, &c, &emb.push(&e), &emb.push(&f), 0.0).unwrap();
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn perfectly_anticorrelated_boundary_is_exact() {
        let (s, e, f) = four([ratio(0, 1), ratio(1, 2), ratio(1, 2), ratio(0, 1)]);
        let (t, emb, c) = extend_with_common_cause(&s, &e, &f).unwrap();
        let r = reichenbach_check_signed(&t, &c, &emb.push(&e), &emb.push(&f), 0.0).unwrap();
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn independent_pair_is_rejected() {
        let (s, e, f) = four([ratio(1, 4), ratio(1, 4), ratio(1, 4), ratio(1, 4)]);
        assert!(matches!(
            extend_with_common_cause(&s, &e, &f),
            Err(LabError::Precondition(_))
        ));
    }

    #[test]
    fn skewed_pair_needs_unbalanced_cause() {
        // pr(E) = pr(F) = 0.1 with strong correlation: c = 1/2 is infeasible.
        let (s, e, f) = four([ratio(9, 100), ratio(1, 100), ratio(1, 100), ratio(89, 100)]);
        let (t, emb, c) = extend_with_common_cause(&s, &e, &f).unwrap();
        assert!(prob(&t, &c) < ratio(1, 2));
        assert!(reichenbach_check(&t, &c, &emb.push(&e), &emb.push(&f), 0.0).unwrap().holds);
    }
}
