//! Stochastic Einstein locality on a discrete 1+1 lattice.
//!
//! Points are `(t, x)` with `0 ≤ t < T`, `0 ≤ x < X`, at most 64 in total so
//! that regions and field configurations are `u64` masks (bit `t·X + x`).
//! The causal order is inclusive: `q ≼ p` iff `|x_q − x_p| ≤ t_p − t_q`.
//! A world assigns one binary field value per point. Probabilities at a
//! hypersurface come from conditioning the ensemble's initial measure on
//! the world's history below it.

pub mod suite;

use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{LabError, Result};
use crate::prob::{Event, Partition, ProbabilitySpace};
use crate::report::{CheckReport, Tracker};
use crate::weight::Weight;

/// Largest region a local event may depend on.
pub const MAX_EVENT_POINTS: usize = 20;
/// Largest explicit world list.
pub const MAX_WORLDS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    time_extent: usize,
    space_extent: usize,
    past: Vec<u64>,
    future: Vec<u64>,
}

/// A set of lattice points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Region(pub u64);

impl Region {
    pub const EMPTY: Region = Region(0);

    pub fn union(self, o: Region) -> Region {
        Region(self.0 | o.0)
    }

    pub fn intersect(self, o: Region) -> Region {
        Region(self.0 & o.0)
    }

    pub fn minus(self, o: Region) -> Region {
        Region(self.0 & !o.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, o: Region) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn contains(self, p: usize) -> bool {
        self.0 >> p & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&i| self.0 >> i & 1 == 1)
    }
}

impl Lattice {
    pub fn new(time_extent: usize, space_extent: usize) -> Result<Self> {
        if time_extent == 0 || space_extent == 0 || time_extent * space_extent > 64 {
            return Err(LabError::InvalidGeometry(format!(
                "lattice {time_extent}×{space_extent} must be non-empty with at most 64 points"
            )));
        }
        let n = time_extent * space_extent;
        let mut past = vec![0u64; n];
        let mut future = vec![0u64; n];
        for p in 0..n {
            for q in 0..n {
                let (tp, xp) = (p / space_extent, p % space_extent);
                let (tq, xq) = (q / space_extent, q % space_extent);
                if tq <= tp && xq.abs_diff(xp) <= tp - tq {
                    past[p] |= 1 << q;
                    future[q] |= 1 << p;
                }
            }
        }
        Ok(Lattice {
            time_extent,
            space_extent,
            past,
            future,
        })
    }

    pub fn time_extent(&self) -> usize {
        self.time_extent
    }

    pub fn space_extent(&self) -> usize {
        self.space_extent
    }

    pub fn len(&self) -> usize {
        self.time_extent * self.space_extent
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn full(&self) -> Region {
        Region(if self.len() == 64 { u64::MAX } else { (1u64 << self.len()) - 1 })
    }

    pub fn point(&self, t: usize, x: usize) -> Result<usize> {
        if t >= self.time_extent || x >= self.space_extent {
            return Err(LabError::InvalidGeometry(format!("point ({t},{x}) lies outside the lattice")));
        }
        Ok(t * self.space_extent + x)
    }

    pub fn coords(&self, p: usize) -> (usize, usize) {
        (p / self.space_extent, p % self.space_extent)
    }

    pub fn region(&self, points: &[(usize, usize)]) -> Result<Region> {
        points
            .iter()
            .try_fold(Region::EMPTY, |r, &(t, x)| Ok(Region(r.0 | 1 << self.point(t, x)?)))
    }

    pub fn points(&self, r: Region) -> Vec<(usize, usize)> {
        r.indices().map(|p| self.coords(p)).collect()
    }

    /// `q ≼ p`, reflexive.
    pub fn precedes(&self, q: usize, p: usize) -> bool {
        self.past[p] >> q & 1 == 1
    }

    pub fn check_region(&self, r: Region) -> Result<()> {
        if r.is_subset(self.full()) {
            Ok(())
        } else {
            Err(LabError::InvalidGeometry("region has points outside the lattice".into()))
        }
    }

    /// Row `t` as a region.
    pub fn slice(&self, t: usize) -> Region {
        Region(((1u64 << self.space_extent) - 1) << (t * self.space_extent))
    }

    fn describe(&self, r: Region, bits: u64) -> String {
        let vals: Vec<String> = r
            .indices()
            .map(|p| {
                let (t, x) = self.coords(p);
                format!("({t},{x})={}", bits >> p & 1)
            })
            .collect();
        format!("[{}]", vals.join(" "))
    }

    pub fn to_json(&self) -> Value {
        json!({"T": self.time_extent, "X": self.space_extent})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let get = |k: &str| {
            v.get(k)
                .and_then(Value::as_u64)
                .ok_or_else(|| LabError::Parse(format!("lattice needs integer field {k}")))
        };
        Lattice::new(get("T")? as usize, get("X")? as usize)
    }
}

/// `C^-(r)`: every point below or on a past light cone of `r`, including `r`.
pub fn causal_past(lattice: &Lattice, r: Region) -> Region {
    Region(r.indices().fold(0, |acc, p| acc | lattice.past[p]))
}

pub fn causal_future(lattice: &Lattice, r: Region) -> Region {
    Region(r.indices().fold(0, |acc, p| acc | lattice.future[p]))
}

/// No point of either region lies in the other's causal past.
pub fn spacelike(lattice: &Lattice, a: Region, b: Region) -> bool {
    causal_past(lattice, a).intersect(b).is_empty() && causal_past(lattice, b).intersect(a).is_empty()
}

/// A surface `t = height(x)` with slope at most one. Height `-1` means the
/// column has no point at or below the surface.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hypersurface {
    pub height: Vec<i64>,
}

impl Hypersurface {
    pub fn new(lattice: &Lattice, height: Vec<i64>) -> Result<Self> {
        if height.len() != lattice.space_extent {
            return Err(LabError::InvalidGeometry(format!(
                "surface has {} columns, lattice has {}",
                height.len(),
                lattice.space_extent
            )));
        }
        if height.iter().any(|&h| h < -1 || h >= lattice.time_extent as i64) {
            return Err(LabError::InvalidGeometry("surface height outside -1..T-1".into()));
        }
        if height.windows(2).any(|w| (w[0] - w[1]).abs() > 1) {
            return Err(LabError::InvalidGeometry("surface is not achronal (slope above one)".into()));
        }
        Ok(Hypersurface { height })
    }

    pub fn flat(lattice: &Lattice, t: i64) -> Result<Self> {
        Self::new(lattice, vec![t; lattice.space_extent])
    }

    /// `C^-(h)`: the points on or below the surface.
    pub fn past(&self, lattice: &Lattice) -> Region {
        let mut r = 0u64;
        for (x, &h) in self.height.iter().enumerate() {
            for t in 0..=h {
                r |= 1 << (t as usize * lattice.space_extent + x);
            }
        }
        Region(r)
    }

    /// Upper boundary of a past-closed region.
    pub fn boundary_of(lattice: &Lattice, r: Region) -> Result<Self> {
        if causal_past(lattice, r) != r {
            return Err(LabError::InvalidGeometry("region is not past-closed".into()));
        }
        let mut height = vec![-1i64; lattice.space_extent];
        for p in r.indices() {
            let (t, x) = lattice.coords(p);
            height[x] = height[x].max(t as i64);
        }
        Self::new(lattice, height)
    }

    pub fn to_json(&self) -> Value {
        json!(self.height)
    }
}

/// Every surface on the lattice.
pub fn all_hypersurfaces(lattice: &Lattice) -> Vec<Hypersurface> {
    let top = lattice.time_extent as i64 - 1;
    let mut out: Vec<Vec<i64>> = (-1..=top).map(|h| vec![h]).collect();
    for _ in 1..lattice.space_extent {
        out = out
            .into_iter()
            .flat_map(|v| {
                let last = *v.last().expect("non-empty");
                ((last - 1).max(-1)..=(last + 1).min(top)).map(move |h| {
                    let mut w = v.clone();
                    w.push(h);
                    w
                })
            })
            .collect();
    }
    out.into_iter().map(|height| Hypersurface { height }).collect()
}

/// `h` lies strictly below `e` and cuts `C^-(E)` into a non-empty base and
/// summit.
pub fn divides(lattice: &Lattice, h: &Hypersurface, e: Region) -> bool {
    let past = h.past(lattice);
    !e.is_empty() && e.intersect(past).is_empty() && !causal_past(lattice, e).intersect(past).is_empty()
}

/// A yes/no property of the field restricted to a region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalEvent {
    pub label: String,
    region: Region,
    points: Vec<usize>,
    accept: Vec<bool>,
}

impl LocalEvent {
    /// `f` receives the field values of `region` in increasing point order.
    pub fn from_fn(lattice: &Lattice, label: impl Into<String>, region: Region, f: impl Fn(&[bool]) -> bool) -> Result<Self> {
        lattice.check_region(region)?;
        if region.len() > MAX_EVENT_POINTS {
            return Err(LabError::InvalidEvent(format!("local events cover at most {MAX_EVENT_POINTS} points")));
        }
        let points: Vec<usize> = region.indices().collect();
        let k = points.len();
        let accept = (0..1usize << k)
            .map(|pat| {
                let vals: Vec<bool> = (0..k).map(|i| pat >> i & 1 == 1).collect();
                f(&vals)
            })
            .collect();
        Ok(LocalEvent {
            label: label.into(),
            region,
            points,
            accept,
        })
    }

    /// The field at `(t, x)` equals `value`.
    pub fn point(lattice: &Lattice, t: usize, x: usize, value: bool) -> Result<Self> {
        let r = Region(1 << lattice.point(t, x)?);
        Self::from_fn(lattice, format!("({t},{x})={}", value as u8), r, move |v| v[0] == value)
    }

    /// Conjunction of point literals.
    pub fn literals(lattice: &Lattice, lits: &[((usize, usize), bool)]) -> Result<Self> {
        let mut mask = 0u64;
        let mut want = 0u64;
        for &((t, x), v) in lits {
            let p = lattice.point(t, x)?;
            mask |= 1 << p;
            want |= (v as u64) << p;
        }
        let label = lits
            .iter()
            .map(|((t, x), v)| format!("({t},{x})={}", *v as u8))
            .collect::<Vec<_>>()
            .join("&");
        let pts: Vec<usize> = Region(mask).indices().collect();
        Self::from_fn(lattice, label, Region(mask), move |vals| {
            pts.iter().zip(vals).all(|(&p, &v)| v == (want >> p & 1 == 1))
        })
    }

    /// The field on the history's region matches it.
    pub fn history(lattice: &Lattice, h: &History) -> Result<Self> {
        let pts: Vec<usize> = h.region.indices().collect();
        let values = h.values;
        Self::from_fn(lattice, "history", h.region, move |vals| {
            pts.iter().zip(vals).all(|(&p, &v)| v == (values >> p & 1 == 1))
        })
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn holds(&self, world: u64) -> bool {
        let mut idx = 0usize;
        for (i, &p) in self.points.iter().enumerate() {
            idx |= ((world >> p & 1) as usize) << i;
        }
        self.accept[idx]
    }

    pub fn and(&self, other: &LocalEvent) -> LocalEvent {
        let region = self.region.union(other.region);
        let points: Vec<usize> = region.indices().collect();
        let accept = (0..1usize << points.len())
            .map(|pat| {
                let world = points
                    .iter()
                    .enumerate()
                    .fold(0u64, |w, (i, &p)| w | ((pat >> i & 1) as u64) << p);
                self.holds(world) && other.holds(world)
            })
            .collect();
        LocalEvent {
            label: format!("{}&{}", self.label, other.label),
            region,
            points,
            accept,
        }
    }

    pub fn to_json(&self, lattice: &Lattice) -> Value {
        let accept: Vec<String> = (0..self.accept.len())
            .filter(|&i| self.accept[i])
            .map(|i| (0..self.points.len()).map(|k| if i >> k & 1 == 1 { '1' } else { '0' }).collect())
            .collect();
        json!({"label": self.label, "region": lattice.points(self.region), "accept": accept})
    }

    pub fn from_json(lattice: &Lattice, v: &Value) -> Result<Self> {
        let pts: Vec<(usize, usize)> = serde_json::from_value(v.get("region").cloned().unwrap_or(Value::Null))
            .map_err(|e| LabError::Parse(format!("event region: {e}")))?;
        let region = lattice.region(&pts)?;
        let accept: Vec<String> = serde_json::from_value(v.get("accept").cloned().unwrap_or(Value::Null))
            .map_err(|e| LabError::Parse(format!("event accept list: {e}")))?;
        let k = region.len();
        let mut ok = std::collections::HashSet::new();
        for s in accept {
            if s.len() != k || !s.chars().all(|c| c == '0' || c == '1') {
                return Err(LabError::Parse(format!("pattern {s:?} must be {k} binary digits")));
            }
            ok.insert(s.chars().enumerate().fold(0usize, |a, (i, c)| a | ((c == '1') as usize) << i));
        }
        let label = v.get("label").and_then(Value::as_str).unwrap_or("event").to_string();
        let mut e = Self::from_fn(lattice, label, region, |_| false)?;
        for (i, a) in e.accept.iter_mut().enumerate() {
            *a = ok.contains(&i);
        }
        Ok(e)
    }
}

/// Field values on a region; `values` uses the same bit positions as worlds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct History {
    pub region: Region,
    pub values: u64,
}

impl History {
    pub fn of_world(region: Region, world: u64) -> Self {
        History {
            region,
            values: world & region.0,
        }
    }

    pub fn matches(&self, world: u64) -> bool {
        world & self.region.0 == self.values
    }
}

/// Explicit possible worlds with one shared initial measure.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldEnsemble<W: Weight = f64> {
    lattice: Lattice,
    worlds: Vec<u64>,
    weights: Vec<W>,
}

impl<W: Weight> WorldEnsemble<W> {
    pub fn new(lattice: Lattice, worlds: Vec<u64>, weights: Vec<W>) -> Result<Self> {
        if worlds.is_empty() || worlds.len() != weights.len() {
            return Err(LabError::InvalidSpace("need one weight per world and at least one world".into()));
        }
        if worlds.len() > MAX_WORLDS {
            return Err(LabError::InvalidSpace(format!("at most {MAX_WORLDS} worlds")));
        }
        if let Some(w) = worlds.iter().find(|&&w| w & !lattice.full().0 != 0) {
            return Err(LabError::InvalidSpace(format!("world {w:#x} sets points outside the lattice")));
        }
        if weights.iter().any(Weight::lt0) {
            return Err(LabError::InvalidSpace("negative world weight".into()));
        }
        let total = weights.iter().fold(W::zero(), |a, w| a + w.clone());
        if (total - W::one()).abs().to_f64_lossy() > crate::prob::NORMALIZATION_TOL {
            return Err(LabError::InvalidSpace("world weights must sum to 1".into()));
        }
        Ok(WorldEnsemble { lattice, worlds, weights })
    }

    /// Merges repeated worlds and drops zero weights before validating.
    pub fn from_weighted(lattice: Lattice, items: impl IntoIterator<Item = (u64, W)>) -> Result<Self> {
        let mut merged: BTreeMap<u64, W> = BTreeMap::new();
        for (w, p) in items {
            let e = merged.entry(w).or_insert_with(W::zero);
            *e = e.clone() + p;
        }
        let (worlds, weights) = merged.into_iter().filter(|(_, p)| p.gt0()).unzip();
        Self::new(lattice, worlds, weights)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn worlds(&self) -> &[u64] {
        &self.worlds
    }

    pub fn weights(&self) -> &[W] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    /// The worlds as atoms of a probability space, labelled `w0, w1, …`.
    pub fn space(&self) -> ProbabilitySpace<W> {
        ProbabilitySpace::new(
            self.weights
                .iter()
                .enumerate()
                .map(|(i, w)| (format!("w{i}"), w.clone()))
                .collect(),
        )
        .expect("ensemble weights are validated")
    }

    /// Worlds whose fields satisfy `e`, as an event of [`Self::space`].
    pub fn event(&self, e: &LocalEvent) -> Event {
        Event::from_fn(self.len(), |i| e.holds(self.worlds[i]))
    }

    pub fn to_json(&self) -> Value {
        let nbytes = self.lattice.len().div_ceil(8);
        let worlds: Vec<Value> = self
            .worlds
            .iter()
            .map(|w| json!({"bits": B64.encode(&w.to_le_bytes()[..nbytes])}))
            .collect();
        let weights: Vec<Value> = self.weights.iter().map(Weight::to_json).collect();
        json!({"lattice": self.lattice.to_json(), "worlds": worlds, "weights": weights})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let lattice = Lattice::from_json(v.get("lattice").unwrap_or(&Value::Null))?;
        let nbytes = lattice.len().div_ceil(8);
        let worlds = v
            .get("worlds")
            .and_then(Value::as_array)
            .ok_or_else(|| LabError::Parse("ensemble needs a worlds array".into()))?
            .iter()
            .map(|w| {
                let s = w.get("bits").and_then(Value::as_str).ok_or_else(|| LabError::Parse("world needs bits".into()))?;
                let bytes = B64.decode(s).map_err(|e| LabError::Parse(format!("world bits: {e}")))?;
                if bytes.len() != nbytes {
                    return Err(LabError::Parse(format!("world bits must be {nbytes} bytes")));
                }
                let mut buf = [0u8; 8];
                buf[..nbytes].copy_from_slice(&bytes);
                Ok(u64::from_le_bytes(buf))
            })
            .collect::<Result<Vec<_>>>()?;
        let weights = v
            .get("weights")
            .and_then(Value::as_array)
            .ok_or_else(|| LabError::Parse("ensemble needs a weights array".into()))?
            .iter()
            .map(|w| W::from_json(w).ok_or_else(|| LabError::Parse(format!("bad weight {w}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(lattice, worlds, weights)
    }
}

/// Total weight and the weight of each event, per class of worlds agreeing
/// on `key`.
struct ClassSums<W> {
    total: W,
    hits: Vec<W>,
}

fn class_sums<W: Weight>(ens: &WorldEnsemble<W>, key: Region, events: &[&LocalEvent]) -> BTreeMap<u64, ClassSums<W>> {
    let mut out: BTreeMap<u64, ClassSums<W>> = BTreeMap::new();
    for (w, p) in ens.worlds.iter().zip(&ens.weights) {
        let c = out.entry(w & key.0).or_insert_with(|| ClassSums {
            total: W::zero(),
            hits: vec![W::zero(); events.len()],
        });
        c.total = c.total.clone() + p.clone();
        for (i, e) in events.iter().enumerate() {
            if e.holds(*w) {
                c.hits[i] = c.hits[i].clone() + p.clone();
            }
        }
    }
    out
}

/// `pr(e | hist)` under the initial measure.
pub fn pr_history<W: Weight>(ens: &WorldEnsemble<W>, hist: &History, e: &LocalEvent) -> Result<W> {
    let (mut total, mut hit) = (W::zero(), W::zero());
    for (w, p) in ens.worlds.iter().zip(&ens.weights) {
        if hist.matches(*w) {
            total = total + p.clone();
            if e.holds(*w) {
                hit = hit + p.clone();
            }
        }
    }
    if !total.gt0() {
        return Err(LabError::NullCondition(format!("history {} has zero measure", ens.lattice.describe(hist.region, hist.values))));
    }
    Ok(hit / total)
}

/// `pr_{t,w}(e)`: conditioning on world `w`'s history below `h`.
pub fn pr_tw<W: Weight>(ens: &WorldEnsemble<W>, h: &Hypersurface, w: usize, e: &LocalEvent) -> Result<W> {
    let world = *ens
        .worlds
        .get(w)
        .ok_or_else(|| LabError::Precondition(format!("no world {w}")))?;
    pr_history(ens, &History::of_world(h.past(&ens.lattice), world), e)
}

fn geometry(msg: impl Into<String>) -> LabError {
    LabError::InvalidGeometry(msg.into())
}

/// Clauses of the SELD1 hypothesis, in order.
pub fn seld1_geometry(lattice: &Lattice, e: Region, f: Region, h: &Hypersurface) -> Result<()> {
    let past = h.past(lattice);
    if !divides(lattice, h, e) {
        return Err(geometry("hypersurface does not divide the past cone of E"));
    }
    if !f.intersect(past).is_empty() || f.is_empty() {
        return Err(geometry("F is not future to the hypersurface"));
    }
    if !spacelike(lattice, e, f) {
        return Err(geometry("F is not spacelike to E"));
    }
    if !causal_past(lattice, e)
        .intersect(causal_past(lattice, f))
        .minus(past)
        .is_empty()
    {
        return Err(geometry("the common past of E and F reaches above the hypersurface"));
    }
    Ok(())
}

/// Clauses of the SELD2 hypothesis: `h` divides `C^-(E)` and
/// `F ⊆ C^-(h) − C^-(E)`.
pub fn seld2_geometry(lattice: &Lattice, e: Region, f: Region, h: &Hypersurface) -> Result<()> {
    if !divides(lattice, h, e) {
        return Err(geometry("hypersurface does not divide the past cone of E"));
    }
    if f.is_empty() || !f.is_subset(h.past(lattice).minus(causal_past(lattice, e))) {
        return Err(geometry("F is not inside C^-(h) − C^-(E)"));
    }
    Ok(())
}

/// Worlds that match on `C^-(E) ∩ C^-(h)` give `E` equal probability at `h`.
pub fn check_sels<W: Weight>(ens: &WorldEnsemble<W>, e: &LocalEvent, h: &Hypersurface, tol: f64) -> Result<CheckReport> {
    let lat = &ens.lattice;
    if !divides(lat, h, e.region) {
        return Err(geometry("hypersurface does not divide the past cone of E"));
    }
    let past = h.past(lat);
    let base = causal_past(lat, e.region).intersect(past);
    let mut spread: BTreeMap<u64, (W, W)> = BTreeMap::new();
    for (key, c) in class_sums(ens, past, &[e]) {
        if !c.total.gt0() {
            continue;
        }
        let p = c.hits[0].clone() / c.total;
        let s = spread.entry(key & base.0).or_insert_with(|| (p.clone(), p.clone()));
        s.0 = W::max_of(s.0.clone(), p.clone());
        s.1 = W::min_of(s.1.clone(), p);
    }
    let mut tr = Tracker::<W>::new(tol);
    for (k, (hi, lo)) in spread {
        tr.equal([format!("base {}", lat.describe(base, k)), e.label.clone()], &hi, &lo);
    }
    Ok(tr.finish("SELS"))
}

/// `pr_t(E&F) = pr_t(E)·pr_t(F)` in every world.
pub fn check_seld1<W: Weight>(
    ens: &WorldEnsemble<W>,
    e: &LocalEvent,
    f: &LocalEvent,
    h: &Hypersurface,
    tol: f64,
) -> Result<CheckReport> {
    let lat = &ens.lattice;
    seld1_geometry(lat, e.region, f.region, h)?;
    let past = h.past(lat);
    Ok(screening_by_class(ens, past, e, f, tol).finish("SELD1"))
}

fn screening_by_class<W: Weight>(ens: &WorldEnsemble<W>, key: Region, e: &LocalEvent, f: &LocalEvent, tol: f64) -> Tracker<W> {
    let ef = e.and(f);
    let mut tr = Tracker::<W>::new(tol);
    for (k, c) in class_sums(ens, key, &[e, f, &ef]) {
        if !c.total.gt0() {
            continue;
        }
        let pe = c.hits[0].clone() / c.total.clone();
        let pf = c.hits[1].clone() / c.total.clone();
        let pef = c.hits[2].clone() / c.total;
        tr.equal([ens.lattice.describe(key, k), e.label.clone(), f.label.clone()], &pef, &(pe * pf));
    }
    tr
}

/// `pr_H(E&F) = pr_H(E)·pr_H(F)` for every history `H` on the table
/// mountain `C^-(h) ∩ C^-(E)`. An empty table mountain is reported as
/// degenerate and checked unconditionally.
pub fn check_seld2<W: Weight>(
    ens: &WorldEnsemble<W>,
    e: &LocalEvent,
    f: &LocalEvent,
    h: &Hypersurface,
    tol: f64,
) -> Result<CheckReport> {
    let lat = &ens.lattice;
    let table = causal_past(lat, e.region).intersect(h.past(lat));
    if table.is_empty() {
        if !f.region.is_subset(h.past(lat).minus(causal_past(lat, e.region))) {
            return Err(geometry("F is not inside C^-(h) − C^-(E)"));
        }
        let mut tr = screening_by_class(ens, Region::EMPTY, e, f, tol);
        tr.note("degenerate geometry: empty table mountain");
        return Ok(tr.finish("SELD2"));
    }
    seld2_geometry(lat, e.region, f.region, h)?;
    Ok(screening_by_class(ens, table, e, f, tol).finish("SELD2"))
}

/// SELD2 for every maximally specific event in `C^-(h) − C^-(E)`: each
/// full history `G` of that region, against each table-mountain history.
pub fn check_seld2_complete<W: Weight>(ens: &WorldEnsemble<W>, e: &LocalEvent, h: &Hypersurface, tol: f64) -> Result<CheckReport> {
    let lat = &ens.lattice;
    if !divides(lat, h, e.region) {
        return Err(geometry("hypersurface does not divide the past cone of E"));
    }
    let past = h.past(lat);
    let table = causal_past(lat, e.region).intersect(past);
    let classes = class_sums(ens, past, &[e]);
    let mut per_table: BTreeMap<u64, (W, W)> = BTreeMap::new();
    for (k, c) in &classes {
        let t = per_table.entry(k & table.0).or_insert_with(|| (W::zero(), W::zero()));
        t.0 = t.0.clone() + c.total.clone();
        t.1 = t.1.clone() + c.hits[0].clone();
    }
    let mut tr = Tracker::<W>::new(tol);
    for (k, c) in &classes {
        let (ht, he) = &per_table[&(k & table.0)];
        if !ht.gt0() {
            continue;
        }
        let lhs = c.hits[0].clone() / ht.clone();
        let rhs = (he.clone() / ht.clone()) * (c.total.clone() / ht.clone());
        tr.equal([lat.describe(past, *k), e.label.clone()], &lhs, &rhs);
    }
    Ok(tr.finish("SELD2_complete"))
}

/// The surface bounding `C^-(h) ∪ C^-(F)`: it agrees with `h` on `C^-(E)`
/// and has `F` in its past.
pub fn concordance_surface(lattice: &Lattice, e: Region, f: Region, h: &Hypersurface) -> Result<Hypersurface> {
    if !divides(lattice, h, e) {
        return Err(geometry("hypersurface does not divide the past cone of E"));
    }
    if !spacelike(lattice, e, f) {
        return Err(geometry("F is not spacelike to E"));
    }
    let past = h.past(lattice);
    let cone_f = causal_past(lattice, f);
    if !causal_past(lattice, e).intersect(cone_f).minus(past).is_empty() {
        return Err(geometry("the common past of E and F reaches above the hypersurface"));
    }
    Hypersurface::boundary_of(lattice, past.union(cone_f))
}

/// `pr_t(E&F)/pr_{H_E}(E&F) = pr_{H_F}(F)/pr_{H_E}(F)` in every world, with
/// `H_E`, `H_F` the world's history in `C^-(h) ∩ C^-(E)` and `C^-(h) ∩ C^-(F)`.
/// Worlds with a zero denominator are skipped.
pub fn check_ratio_assumption<W: Weight>(
    ens: &WorldEnsemble<W>,
    e: &LocalEvent,
    f: &LocalEvent,
    h: &Hypersurface,
    tol: f64,
) -> Result<CheckReport> {
    let lat = &ens.lattice;
    seld1_geometry(lat, e.region, f.region, h)?;
    let past = h.past(lat);
    let he = causal_past(lat, e.region).intersect(past);
    let hf = causal_past(lat, f.region).intersect(past);
    let ef = e.and(f);
    let by_e = class_sums(ens, he, &[f, &ef]);
    let by_f = class_sums(ens, hf, &[f]);
    let mut tr = Tracker::<W>::new(tol);
    for (k, c) in class_sums(ens, past, &[&ef]) {
        if !c.total.gt0() {
            continue;
        }
        let ce = &by_e[&(k & he.0)];
        let cf = &by_f[&(k & hf.0)];
        let tag = lat.describe(past, k);
        if !ce.hits[1].gt0() || !ce.hits[0].gt0() {
            tr.skip(format!("{tag}: zero denominator"));
            continue;
        }
        let lhs = (c.hits[0].clone() / c.total) / (ce.hits[1].clone() / ce.total.clone());
        let rhs = (cf.hits[0].clone() / cf.total.clone()) / (ce.hits[0].clone() / ce.total.clone());
        tr.equal([tag, e.label.clone(), f.label.clone()], &lhs, &rhs);
    }
    Ok(tr.finish("ratio_assumption"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrongVariant {
    /// Geometry of SELD1; cells encode features of `C^-(h)`.
    One,
    /// Geometry of SELD2; cells encode features of `C^-(h) ∩ C^-(E)`.
    Two,
}

/// The region a strong-SELD partition may depend on.
pub fn designated_region(lattice: &Lattice, e: Region, h: &Hypersurface, variant: StrongVariant) -> Region {
    match variant {
        StrongVariant::One => h.past(lattice),
        StrongVariant::Two => h.past(lattice).intersect(causal_past(lattice, e)),
    }
}

/// The finest admissible partition: one cell per history of `region`.
pub fn past_class_partition<W: Weight>(ens: &WorldEnsemble<W>, region: Region) -> Partition {
    let mut cells: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, w) in ens.worlds.iter().enumerate() {
        cells.entry(w & region.0).or_default().push(i);
    }
    Partition::new(
        cells
            .into_values()
            .map(|v| Event::from_indices(ens.len(), v))
            .collect(),
    )
    .expect("history classes partition the worlds")
}

/// Every positive cell of `part` screens `E` from `F` under the initial
/// measure. Cells must be unions of history classes of the designated
/// region.
pub fn check_strong_seld<W: Weight>(
    ens: &WorldEnsemble<W>,
    e: &LocalEvent,
    f: &LocalEvent,
    h: &Hypersurface,
    part: &Partition,
    variant: StrongVariant,
    tol: f64,
) -> Result<CheckReport> {
    let lat = &ens.lattice;
    match variant {
        StrongVariant::One => seld1_geometry(lat, e.region, f.region, h)?,
        StrongVariant::Two => seld2_geometry(lat, e.region, f.region, h)?,
    }
    if part.cells().first().map(Event::universe) != Some(ens.len()) {
        return Err(LabError::InvalidPartition("partition is not over this ensemble's worlds".into()));
    }
    let region = designated_region(lat, e.region, h, variant);
    let mut owner: BTreeMap<u64, usize> = BTreeMap::new();
    for (ci, cell) in part.cells().iter().enumerate() {
        for i in cell.indices() {
            let k = ens.worlds[i] & region.0;
            if let Some(&other) = owner.get(&k) {
                if other != ci {
                    return Err(LabError::InvalidPartition(format!(
                        "cells {other} and {ci} split worlds with the same history {}",
                        lat.describe(region, k)
                    )));
                }
            }
            owner.insert(k, ci);
        }
    }
    let ef = e.and(f);
    let mut tr = Tracker::<W>::new(tol);
    for (ci, cell) in part.cells().iter().enumerate() {
        let (mut t, mut pe, mut pf, mut pef) = (W::zero(), W::zero(), W::zero(), W::zero());
        for i in cell.indices() {
            let (w, p) = (ens.worlds[i], &ens.weights[i]);
            t = t + p.clone();
            if e.holds(w) {
                pe = pe + p.clone();
            }
            if f.holds(w) {
                pf = pf + p.clone();
            }
            if ef.holds(w) {
                pef = pef + p.clone();
            }
        }
        if !t.gt0() {
            tr.skip(format!("cell {ci} has zero weight"));
            continue;
        }
        let lhs = pef / t.clone();
        let rhs = (pe / t.clone()) * (pf / t);
        tr.equal([format!("cell {ci}"), e.label.clone(), f.label.clone()], &lhs, &rhs);
    }
    let name = match variant {
        StrongVariant::One => "strong_SELD1",
        StrongVariant::Two => "strong_SELD2",
    };
    Ok(tr.finish(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_of_a_point() {
        let lat = Lattice::new(6, 8).unwrap();
        let p = lat.region(&[(2, 2)]).unwrap();
        assert_eq!(causal_past(&lat, p).len(), 1 + 3 + 5);
        let two = lat.region(&[(2, 2), (2, 5)]).unwrap();
        assert_eq!(causal_past(&lat, two).len(), 16);
        assert!(causal_past(&lat, Region::EMPTY).is_empty());
    }

    #[test]
    fn surfaces() {
        let lat = Lattice::new(4, 5).unwrap();
        assert!(Hypersurface::new(&lat, vec![0, 2, 0, 0, 0]).is_err());
        assert!(Hypersurface::new(&lat, vec![0, 1, 2, 3, 4]).is_err());
        let e = lat.region(&[(3, 2)]).unwrap();
        assert!(divides(&lat, &Hypersurface::flat(&lat, 0).unwrap(), e));
        assert!(!divides(&lat, &Hypersurface::flat(&lat, 3).unwrap(), e));
        let stair = Hypersurface::new(&lat, vec![2, 1, 0, 1, 2]).unwrap();
        assert!(divides(&lat, &stair, e));
        assert_eq!(all_hypersurfaces(&Lattice::new(2, 2).unwrap()).len(), 7);
    }

    #[test]
    fn ensemble_json_round_trip() {
        let lat = Lattice::new(3, 3).unwrap();
        let ens = WorldEnsemble::new(lat, vec![0b101, 0b1_0000_0000], vec![0.25, 0.75]).unwrap();
        let back = WorldEnsemble::<f64>::from_json(&ens.to_json()).unwrap();
        assert_eq!(back, ens);
    }
}
