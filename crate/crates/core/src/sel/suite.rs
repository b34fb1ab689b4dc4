//! Random lattice ensembles, Bell-experiment embeddings, and the exhaustive
//! implication sweep between the SEL formulations.

use std::collections::HashMap;

use num::bigint::BigInt;
use num::rational::BigRational;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::*;
use crate::bell::BigSpaceModel;

/// How a random ensemble's measure is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// Each point is drawn from its three lower neighbours with independent
    /// noise; the initial row is independent. Respects light cones.
    LocalAutomaton,
    /// Equal mixture of two local automata; the mixing label is not recorded
    /// on the lattice, so distant points can correlate.
    Mixture,
    /// A few arbitrary worlds with arbitrary weights.
    Sparse,
}

/// Lattices visited by the random sweep.
pub const SUITE_LATTICES: [(usize, usize); 6] = [(2, 2), (2, 3), (3, 2), (3, 3), (2, 4), (4, 2)];

fn eighths<R: Rng>(rng: &mut R) -> u64 {
    // Includes the deterministic endpoints.
    rng.gen_range(0..=8)
}

/// Kernel for each point: probability (in eighths) of value 1 given the
/// three lower neighbours.
fn automaton<R: Rng>(lattice: &Lattice, rng: &mut R) -> Vec<(u64, BigInt)> {
    let (t_max, x_max) = (lattice.time_extent(), lattice.space_extent());
    let n = lattice.len();
    let kernels: Vec<[u64; 8]> = (0..n).map(|_| std::array::from_fn(|_| eighths(rng))).collect();
    let mut out = Vec::new();
    for world in 0u64..(1 << n) {
        let mut num = BigInt::from(1);
        for t in 0..t_max {
            for x in 0..x_max {
                let p = t * x_max + x;
                let ctx = if t == 0 {
                    0
                } else {
                    let below = |dx: i64| {
                        let xx = x as i64 + dx;
                        if xx < 0 || xx >= x_max as i64 {
                            0
                        } else {
                            (world >> ((t - 1) * x_max + xx as usize) & 1) as usize
                        }
                    };
                    below(-1) | below(0) << 1 | below(1) << 2
                };
                let k = kernels[p][ctx];
                num *= if world >> p & 1 == 1 { k } else { 8 - k };
                if num == BigInt::from(0) {
                    break;
                }
            }
        }
        if num != BigInt::from(0) {
            out.push((world, num));
        }
    }
    out
}

/// A random ensemble with exact rational weights.
pub fn random_ensemble(kind: EnsembleKind, lattice: &Lattice, rng: &mut ChaCha8Rng) -> WorldEnsemble<BigRational> {
    let n = lattice.len();
    let items: Vec<(u64, BigRational)> = match kind {
        EnsembleKind::LocalAutomaton => {
            let den = BigInt::from(8).pow(n as u32);
            automaton(lattice, rng)
                .into_iter()
                .map(|(w, k)| (w, BigRational::new(k, den.clone())))
                .collect()
        }
        EnsembleKind::Mixture => {
            let den = BigInt::from(2) * BigInt::from(8).pow(n as u32);
            let mut a = automaton(lattice, rng);
            a.extend(automaton(lattice, rng));
            a.into_iter().map(|(w, k)| (w, BigRational::new(k, den.clone()))).collect()
        }
        EnsembleKind::Sparse => {
            let space = 1usize << n;
            let m = rng.gen_range(2..=space.min(24));
            let picks = sample(rng, space, m);
            let raw: Vec<(u64, i64)> = picks.into_iter().map(|w| (w as u64, rng.gen_range(1..10))).collect();
            let total: i64 = raw.iter().map(|r| r.1).sum();
            raw.into_iter().map(|(w, k)| (w, crate::weight::ratio(k, total))).collect()
        }
    };
    WorldEnsemble::from_weighted(lattice.clone(), items).expect("generated weights are normalized")
}

/// Counts from the implication sweep.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub ensembles: usize,
    pub by_kind: Vec<(EnsembleKind, usize)>,
    /// Ensembles on which SELD1 held for every admissible instance.
    pub seld1_everywhere: usize,
    pub seld1_to_seld2_counterexamples: usize,
    /// `(E, h)` pairs compared for SELS against complete SELD2.
    pub sels_instances: usize,
    pub sels_held: usize,
    pub sels_seld2_counterexamples: usize,
    /// SELD1 instances where SELD2, SELS for both events and the ratio
    /// assumption all held.
    pub seld2_ratio_premises_held: usize,
    pub seld2_ratio_counterexamples: usize,
}

impl SuiteOutcome {
    pub fn counterexamples(&self) -> usize {
        self.seld1_to_seld2_counterexamples + self.sels_seld2_counterexamples + self.seld2_ratio_counterexamples
    }
}

fn point_events(lattice: &Lattice) -> Vec<LocalEvent> {
    (0..lattice.len())
        .map(|p| {
            let (t, x) = lattice.coords(p);
            LocalEvent::point(lattice, t, x, true).expect("point is inside")
        })
        .collect()
}

/// Runs every comparison on one ensemble, at tolerance zero.
pub fn sweep_ensemble(ens: &WorldEnsemble<BigRational>, out: &mut SuiteOutcome) -> Result<()> {
    let lat = ens.lattice().clone();
    let hs = all_hypersurfaces(&lat);
    let evs = point_events(&lat);

    // SELD1 everywhere ⇒ SELD2 everywhere.
    let mut d1_all = true;
    'outer: for h in &hs {
        for e in &evs {
            for f in &evs {
                if seld1_geometry(&lat, e.region(), f.region(), h).is_ok() && !check_seld1(ens, e, f, h, 0.0)?.holds {
                    d1_all = false;
                    break 'outer;
                }
            }
        }
    }
    if d1_all {
        out.seld1_everywhere += 1;
        let mut d2_all = true;
        'outer2: for h in &hs {
            for e in &evs {
                for f in &evs {
                    if seld2_geometry(&lat, e.region(), f.region(), h).is_ok() && !check_seld2(ens, e, f, h, 0.0)?.holds {
                        d2_all = false;
                        break 'outer2;
                    }
                }
            }
        }
        if !d2_all {
            out.seld1_to_seld2_counterexamples += 1;
        }
    }

    // SELS ⇔ SELD2 for every maximal event of C^-(h) − C^-(E).
    let mut sels: HashMap<(usize, usize), bool> = HashMap::new();
    for (hi, h) in hs.iter().enumerate() {
        for (ei, e) in evs.iter().enumerate() {
            if !divides(&lat, h, e.region()) {
                continue;
            }
            let a = check_sels(ens, e, h, 0.0)?.holds;
            let b = check_seld2_complete(ens, e, h, 0.0)?.holds;
            out.sels_instances += 1;
            out.sels_held += a as usize;
            if a != b {
                out.sels_seld2_counterexamples += 1;
            }
            sels.insert((hi, ei), a);
        }
    }

    // SELD2 + ratio assumption + conditionalization ⇒ SELD1.
    for (hi, h) in hs.iter().enumerate() {
        for (ei, e) in evs.iter().enumerate() {
            for (fi, f) in evs.iter().enumerate() {
                if seld1_geometry(&lat, e.region(), f.region(), h).is_err() || !divides(&lat, h, f.region()) {
                    continue;
                }
                if !sels[&(hi, ei)] || !sels[&(hi, fi)] {
                    continue;
                }
                if !check_ratio_assumption(ens, e, f, h, 0.0)?.holds {
                    continue;
                }
                let t2 = concordance_surface(&lat, e.region(), f.region(), h)?;
                if !check_seld2(ens, e, f, &t2, 0.0)?.holds {
                    continue;
                }
                out.seld2_ratio_premises_held += 1;
                if !check_seld1(ens, e, f, h, 0.0)?.holds {
                    out.seld2_ratio_counterexamples += 1;
                }
            }
        }
    }
    Ok(())
}

/// Sweeps `n` seeded random ensembles, cycling through kinds and lattices.
pub fn implication_suite(n: usize, seed: u64) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::default();
    let kinds = [EnsembleKind::LocalAutomaton, EnsembleKind::Mixture, EnsembleKind::Sparse];
    let mut counts: HashMap<EnsembleKind, usize> = HashMap::new();
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let kind = kinds[i % kinds.len()];
        let (t, x) = SUITE_LATTICES[(i / kinds.len()) % SUITE_LATTICES.len()];
        let lat = Lattice::new(t, x)?;
        let ens = random_ensemble(kind, &lat, &mut rng);
        sweep_ensemble(&ens, &mut out)?;
        out.ensembles += 1;
        *counts.entry(kind).or_default() += 1;
    }
    out.by_kind = kinds.iter().map(|k| (*k, counts.get(k).copied().unwrap_or(0))).collect();
    Ok(out)
}

/// Where a two-wing experiment sits on a 4×5 lattice.
#[derive(Debug, Clone)]
pub struct BellLayout {
    pub lattice: Lattice,
    pub left_setting: (usize, usize),
    pub right_setting: (usize, usize),
    pub left_outcome: (usize, usize),
    pub right_outcome: (usize, usize),
    /// The common past of the two outcomes: carriers for hidden bits.
    pub hidden: [(usize, usize); 4],
}

impl Default for BellLayout {
    fn default() -> Self {
        BellLayout {
            lattice: Lattice::new(4, 5).expect("fixed size"),
            left_setting: (2, 0),
            right_setting: (2, 4),
            left_outcome: (3, 0),
            right_outcome: (3, 4),
            hidden: [(0, 1), (0, 2), (0, 3), (1, 2)],
        }
    }
}

impl BellLayout {
    fn bit(&self, p: (usize, usize)) -> u64 {
        1 << self.lattice.point(p.0, p.1).expect("layout points are inside")
    }

    /// `x = a_{setting+1}` and the left outcome is `+`.
    pub fn left_event(&self, setting: usize) -> LocalEvent {
        LocalEvent::literals(&self.lattice, &[(self.left_setting, setting == 1), (self.left_outcome, true)])
            .expect("layout points are inside")
    }

    pub fn right_event(&self, setting: usize) -> LocalEvent {
        LocalEvent::literals(&self.lattice, &[(self.right_setting, setting == 1), (self.right_outcome, true)])
            .expect("layout points are inside")
    }

    /// Both settings and the hidden bits lie below; outcomes above.
    pub fn after_settings(&self) -> Hypersurface {
        Hypersurface::flat(&self.lattice, 2).expect("fixed size")
    }

    /// Only the hidden bits lie below.
    pub fn source_surface(&self) -> Hypersurface {
        Hypersurface::new(&self.lattice, vec![0, 0, 1, 0, 0]).expect("fixed size")
    }

    /// Below the left outcome, above the whole right wing.
    pub fn tilted_surface(&self) -> Hypersurface {
        Hypersurface::new(&self.lattice, vec![2, 3, 3, 3, 3]).expect("fixed size")
    }

    /// Worlds of a big-space model: choices, outcomes and up to four hidden
    /// events written to their lattice points; every other point is 0.
    pub fn embed<W: Weight>(&self, big: &BigSpaceModel<W>, hidden: &[Event]) -> Result<WorldEnsemble<W>> {
        if big.left_choice.len() != 2 || big.right_choice.len() != 2 || hidden.len() > self.hidden.len() {
            return Err(LabError::Precondition("embedding needs two settings per wing and at most four hidden events".into()));
        }
        let items = (0..big.space.len()).map(|i| {
            let mut w = 0u64;
            let mut set = |on: bool, p: (usize, usize)| {
                if on {
                    w |= self.bit(p);
                }
            };
            set(big.left_choice[1].contains(i), self.left_setting);
            set(big.right_choice[1].contains(i), self.right_setting);
            set(big.left_plus.contains(i), self.left_outcome);
            set(big.right_plus.contains(i), self.right_outcome);
            for (k, ev) in hidden.iter().enumerate() {
                set(ev.contains(i), self.hidden[k]);
            }
            (w, big.space.weight(i).clone())
        });
        WorldEnsemble::from_weighted(self.lattice.clone(), items)
    }

    /// Hidden-state cells written in binary to the hidden points.
    pub fn embed_hidden_states<W: Weight>(&self, big: &BigSpaceModel<W>) -> Result<WorldEnsemble<W>> {
        let cells = &big.lambda_cells;
        if cells.len() > 1 << self.hidden.len() {
            return Err(LabError::Precondition("at most 16 hidden states fit the layout".into()));
        }
        let n = big.space.len();
        let bits: Vec<Event> = (0..self.hidden.len())
            .map(|k| {
                Event::from_fn(n, |i| cells.iter().position(|c| c.contains(i)).is_some_and(|l| l >> k & 1 == 1))
            })
            .collect();
        self.embed(big, &bits)
    }

    /// The partition of worlds by one hidden point's value.
    pub fn hidden_bit_partition<W: Weight>(&self, ens: &WorldEnsemble<W>, k: usize) -> Partition {
        let p = self.bit(self.hidden[k]);
        past_class_partition(ens, Region(p))
    }
}
