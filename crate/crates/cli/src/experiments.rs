//! Dispatch from a validated config to the core checkers.

use std::collections::BTreeMap;
use std::path::Path;

use causality_lab::bell::{
    self, audit_boolean_combinations, bell_wigner_check, build_szabo_model, chsh_value, check_coarse_locality,
    check_factorizability, check_outcome_independence, check_parameter_independence, observable_joints,
    singlet_oracle, to_big_space, verify_szabo, HVModel, Locality, SettingsGeometry, SzaboOptions,
};
use causality_lab::causet::{
    alpha, check_bell_causality, check_dgc, check_strong_sel, check_sum_rule, grow, strong_sel_solutions,
    transition_distribution, Causet, GrowthDynamics,
};
use causality_lab::common_cause::{extend_with_common_cause, iterate_extensions_with_map, weak_pcc_check, strong_pcc_check, CorrelationFamily};
use causality_lab::prob::{correlation, prob, reichenbach_check, reichenbach_check_signed};
use causality_lab::sel::suite::{implication_suite, BellLayout};
use causality_lab::sel::{
    check_ratio_assumption, check_sels, check_seld1, check_seld2, Hypersurface, LocalEvent, WorldEnsemble,
};
use causality_lab::weight::ratio;
use causality_lab::{BigRational, CheckReport, Event, Partition, ProbabilitySpace, Tracker, Weight};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::CliError;

/// Checks with their built-in expected verdicts, named values, and extra
/// files for the output directory.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<(String, Verdict, CheckReport)>,
    pub values: BTreeMap<String, Value>,
    pub artifacts: Vec<(String, String)>,
}

impl Outcome {
    fn check(&mut self, id: impl Into<String>, expected: Verdict, report: CheckReport) {
        self.checks.push((id.into(), expected, report));
    }

    fn value(&mut self, key: &str, v: impl Serialize) {
        self.values.insert(key.into(), serde_json::to_value(v).expect("value serializes"));
    }
}

/// Seeded generator for item `i` of a sweep, independent of scheduling.
fn item_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let (seed, tol) = (cfg.seed, cfg.tolerance);
    match &cfg.experiment {
        Experiment::Sel(p) => sel(p, seed, tol, &mut out)?,
        Experiment::Pcc(p) => pcc(p, seed, tol, &mut out)?,
        Experiment::Bell(p) => bell_run(p, seed, tol, &mut out)?,
        Experiment::Szabo(p) => szabo(p, tol, &mut out)?,
        Experiment::Causet(p) => causet_run(p, seed, tol, &mut out)?,
    }
    Ok(out)
}

fn geometry(a: &Angles) -> SettingsGeometry {
    SettingsGeometry {
        left: vec![a[0], a[1]],
        right: vec![a[2], a[3]],
    }
}

fn count_report(condition: &str, found: usize) -> CheckReport {
    let mut t = Tracker::<f64>::new(0.0);
    t.equal(["counterexamples", "zero"], &(found as f64), &0.0);
    t.finish(condition)
}

// ---- sel ----

fn sel(p: &SelParams, seed: u64, tol: f64, out: &mut Outcome) -> Result<(), CliError> {
    match p {
        SelParams::ImplicationSuite { ensembles, with_bell_embedding } => {
            let s = implication_suite(*ensembles, seed)?;
            out.check("seld1_implies_seld2", Verdict::Holds, count_report("seld1_implies_seld2", s.seld1_to_seld2_counterexamples));
            out.check("sels_iff_seld2", Verdict::Holds, count_report("sels_iff_seld2", s.sels_seld2_counterexamples));
            out.check(
                "seld2_with_ratio_assumption",
                Verdict::Holds,
                count_report("seld2_with_ratio_assumption", s.seld2_ratio_counterexamples),
            );
            out.value("suite", &s);
            if *with_bell_embedding {
                bell_embedding(&CHSH_ANGLES, tol, out)?;
            }
        }
        SelParams::BellEmbedding { angles } => bell_embedding(angles, tol, out)?,
        SelParams::Check { ensemble, e, f, surface, conditions } => {
            let ens = WorldEnsemble::<BigRational>::from_json(&read_json(ensemble)?)?;
            let lat = ens.lattice();
            let e = LocalEvent::from_json(lat, e)?;
            let f = f.as_ref().map(|v| LocalEvent::from_json(lat, v)).transpose()?;
            let h = Hypersurface::new(lat, surface.clone())?;
            for c in conditions {
                let pair = || f.as_ref().expect("validated");
                let (id, r) = match c {
                    SelCondition::Sels => ("sels", check_sels(&ens, &e, &h, tol)?),
                    SelCondition::Seld1 => ("seld1", check_seld1(&ens, &e, pair(), &h, tol)?),
                    SelCondition::Seld2 => ("seld2", check_seld2(&ens, &e, pair(), &h, tol)?),
                    SelCondition::RatioAssumption => ("ratio_assumption", check_ratio_assumption(&ens, &e, pair(), &h, tol)?),
                };
                out.check(id, Verdict::Holds, r);
            }
        }
    }
    Ok(())
}

fn bell_embedding(angles: &Angles, tol: f64, out: &mut Outcome) -> Result<(), CliError> {
    let layout = BellLayout::default();
    let lat = &layout.lattice;
    let big = to_big_space(&singlet_oracle(&geometry(angles)), &[0.5, 0.5], &[0.5, 0.5])?;
    let ens = layout.embed(&big, &[])?;
    let (a, b) = (layout.left_outcome, layout.right_outcome);
    let left_plus = LocalEvent::point(lat, a.0, a.1, true)?;
    let right_plus = LocalEvent::point(lat, b.0, b.1, true)?;
    out.check(
        "seld1_outcomes_after_settings",
        Verdict::Fails,
        check_seld1(&ens, &left_plus, &right_plus, &layout.after_settings(), tol)?,
    );
    out.check(
        "seld1_setting_outcome_pairs_at_source",
        Verdict::Fails,
        check_seld1(&ens, &layout.left_event(0), &layout.right_event(0), &layout.source_surface(), tol)?,
    );
    out.check(
        "seld2_tilted_surface",
        Verdict::Fails,
        check_seld2(&ens, &left_plus, &layout.right_event(0), &layout.tilted_surface(), tol)?,
    );
    out.value("worlds", ens.len());
    Ok(())
}

// ---- pcc ----

struct Family {
    space: ProbabilitySpace<BigRational>,
    pairs: Vec<(Event, Event)>,
}

fn load_family(path: &Path) -> Result<Family, CliError> {
    let v = read_json(path)?;
    let space = ProbabilitySpace::<BigRational>::from_json(&v["space"])?;
    let raw: Vec<BTreeMap<String, Vec<String>>> = serde_json::from_value(v["pairs"].clone())
        .map_err(|e| CliError::Usage(format!("{}: pairs: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (k, p) in raw.iter().enumerate() {
        let get = |key: &str| {
            p.get(key)
                .ok_or_else(|| CliError::Usage(format!("{}: pairs[{k}] needs {key:?}", path.display())))
                .and_then(|l| Ok(space.event(l)?))
        };
        pairs.push((get("e")?, get("f")?));
    }
    Ok(Family { space, pairs })
}

fn partition_of(space: &ProbabilitySpace<BigRational>, cells: &[Vec<String>]) -> Result<Partition, CliError> {
    Ok(Partition::new(cells.iter().map(|c| space.event(c)).collect::<causality_lab::Result<Vec<_>>>()?)?)
}

fn random_correlated_pair(rng: &mut ChaCha8Rng) -> (ProbabilitySpace<BigRational>, Event, Event) {
    loop {
        let n = rng.gen_range(3..9);
        let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(1..30)).collect();
        let total: i64 = raw.iter().sum();
        let s = ProbabilitySpace::new(raw.iter().enumerate().map(|(i, &w)| (format!("s{i}"), ratio(w, total))).collect())
            .expect("weights sum to one");
        let mut event = || Event::from_indices(n, (0..n).filter(|_| rng.gen_bool(0.5)).collect::<Vec<_>>());
        let (e, f) = (event(), event());
        let inside = |x: &Event| {
            let p = prob(&s, x);
            p.gt0() && p < BigRational::one()
        };
        if inside(&e) && inside(&f) && !correlation(&s, &e, &f).is_zero() {
            return (s, e, f);
        }
    }
}

/// Eight atoms `C × E × F` where `C` and `¬C` screen off `E` from `F` by
/// construction; the raising clauses are left to chance.
fn screened_triple(rng: &mut ChaCha8Rng) -> (ProbabilitySpace<BigRational>, Event, Event, Event) {
    let mut q = |lo: i64| ratio(rng.gen_range(lo..=19), 20);
    let (c, ec, fc, en, fn_) = (q(1), q(0), q(0), q(0), q(0));
    let mut atoms = Vec::with_capacity(8);
    for (copy, pc, pe, pf) in [("c", c.clone(), ec, fc), ("n", BigRational::one() - c, en, fn_)] {
        for (x, px) in [("e", pe.clone()), ("~e", BigRational::one() - pe.clone())] {
            for (y, py) in [("f", pf.clone()), ("~f", BigRational::one() - pf.clone())] {
                atoms.push((format!("{copy}{x}{y}"), pc.clone() * px.clone() * py));
            }
        }
    }
    let s = ProbabilitySpace::new(atoms).expect("product of distributions");
    let c = s.event_where(|l| l.starts_with('c'));
    let e = s.event_where(|l| !l[1..].starts_with('~'));
    let f = s.event_where(|l| !l.ends_with("~f"));
    (s, c, e, f)
}

fn reichenbach_any_sign(
    s: &ProbabilitySpace<BigRational>,
    c: &Event,
    e: &Event,
    f: &Event,
    tol: f64,
) -> causality_lab::Result<CheckReport> {
    if correlation(s, e, f).gt0() {
        reichenbach_check(s, c, e, f, tol)
    } else {
        reichenbach_check_signed(s, c, e, f, tol)
    }
}

fn pcc(p: &PccParams, seed: u64, tol: f64, out: &mut Outcome) -> Result<(), CliError> {
    match p {
        PccParams::Suite { pairs, triples } => {
            let inputs: Vec<_> = (0..*pairs).map(|i| random_correlated_pair(&mut item_rng(seed, i))).collect();
            let results: Vec<(CheckReport, CheckReport, bool)> = inputs
                .par_iter()
                .map(|(s, e, f)| {
                    let (t, emb, c) = extend_with_common_cause(s, e, f)?;
                    let (he, hf) = (emb.push(e), emb.push(f));
                    let same = correlation(&t, &he, &hf) == correlation(s, e, f);
                    Ok((emb.verify(0.0), reichenbach_any_sign(&t, &c, &he, &hf, 0.0)?, same))
                })
                .collect::<causality_lab::Result<_>>()?;
            let embeds: Vec<CheckReport> = results.iter().map(|r| r.0.clone()).collect();
            let causes: Vec<CheckReport> = results.iter().map(|r| r.1.clone()).collect();
            out.check("measure_preserving_embeddings", Verdict::Holds, CheckReport::all("measure_preserving_embeddings", 0.0, &embeds));
            out.check("extensions_are_reichenbachian", Verdict::Holds, CheckReport::all("reichenbach", 0.0, &causes));
            let mut keep = Tracker::<f64>::new(0.0);
            for (i, r) in results.iter().enumerate() {
                if !r.2 {
                    keep.fail(vec![format!("pair {i}")]);
                }
            }
            out.check("correlations_preserved", Verdict::Holds, keep.finish("correlation_preserved"));
            out.value("extended_pairs", pairs);

            let found: Vec<Option<(usize, BigRational)>> = (0..*triples)
                .into_par_iter()
                .map(|k| {
                    let (s, c, e, f) = screened_triple(&mut item_rng(seed ^ 0x5eed, k));
                    let valid = reichenbach_check(&s, &c, &e, &f, 0.0).expect("screened cells are non-null").holds;
                    valid.then(|| (k, correlation(&s, &e, &f)))
                })
                .collect();
            let mut t = Tracker::<BigRational>::new(0.0);
            let mut valid = 0usize;
            for (k, corr) in found.into_iter().flatten() {
                valid += 1;
                t.greater([format!("triple {k}"), "zero".into()], &corr, &BigRational::zero());
            }
            t.note(format!("{valid} of {triples} triples satisfy every Reichenbach condition"));
            out.check("reichenbach_triples_positively_correlated", Verdict::Holds, t.finish("positive_correlation"));
            out.value("reichenbach_valid_triples", valid);
        }
        PccParams::Extend { family } => {
            let fam = load_family(family)?;
            let cf = CorrelationFamily::new(fam.space.clone(), fam.pairs.clone())?;
            let (space, emb, causes) = iterate_extensions_with_map(&cf)?;
            out.check("measure_preserving_embedding", Verdict::Holds, emb.verify(0.0));
            let mut parts = Vec::new();
            for (m, (e, f)) in fam.pairs.iter().enumerate() {
                if correlation(&fam.space, e, f).is_zero() {
                    continue;
                }
                let (he, hf) = (emb.push(e), emb.push(f));
                let mut r = reichenbach_any_sign(&space, &causes[m], &he, &hf, tol)?;
                r.condition = format!("pair {m}");
                parts.push(r);
            }
            out.check("causes_are_reichenbachian", Verdict::Holds, CheckReport::all("reichenbach", tol, &parts));
            let pushed = CorrelationFamily::new(space.clone(), fam.pairs.iter().map(|(e, f)| (emb.push(e), emb.push(f))).collect())?;
            let binary: Vec<Partition> = causes.iter().map(Partition::binary).collect();
            out.check("weak_pcc", Verdict::Holds, weak_pcc_check(&pushed, &binary, tol)?);
            out.value("atoms", space.len());
            let atom_map: BTreeMap<&str, Vec<String>> = (0..fam.space.len())
                .map(|i| (fam.space.label(i), emb.atom_map[i].iter().map(|&j| space.label(j).to_string()).collect()))
                .collect();
            let doc = json!({
                "space": space.to_json(),
                "atom_map": atom_map,
                "causes": causes.iter().map(|c| space.event_labels(c)).collect::<Vec<_>>(),
            });
            out.artifacts.push(("extension.json".into(), pretty(&doc)));
        }
        PccParams::Check { family, partitions, common_partition } => {
            let fam = load_family(family)?;
            let n = fam.space.len();
            let parts = match partitions {
                Some(p) => {
                    if p.len() != fam.pairs.len() {
                        return Err(CliError::Usage(format!(
                            "params.partitions: {} partitions for {} pairs",
                            p.len(),
                            fam.pairs.len()
                        )));
                    }
                    p.iter().map(|c| partition_of(&fam.space, c)).collect::<Result<Vec<_>, _>>()?
                }
                None => vec![Partition::trivial(n); fam.pairs.len()],
            };
            let common = match common_partition {
                Some(c) => partition_of(&fam.space, c)?,
                None => Partition::trivial(n),
            };
            let cf = CorrelationFamily::new(fam.space, fam.pairs)?;
            out.value("correlated_pairs", cf.correlated(tol));
            out.check("weak_pcc", Verdict::Holds, weak_pcc_check(&cf, &parts, tol)?);
            out.check("strong_pcc", Verdict::Holds, strong_pcc_check(&cf, &common, tol)?);
        }
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

// ---- bell ----

/// `E(a, b) = -cos(a - b)` summed into `S`.
fn singlet_chsh_closed_form(a: &Angles) -> f64 {
    let e = |x: f64, y: f64| -(x - y).cos();
    e(a[0], a[2]) - e(a[0], a[3]) + e(a[1], a[2]) + e(a[1], a[3])
}

fn random_factorizable(rng: &mut ChaCha8Rng, max_states: usize) -> HVModel<f64> {
    let n = rng.gen_range(1..=max_states);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let lambda = ProbabilitySpace::normalized(raw.iter().enumerate().map(|(i, w)| (format!("l{i}"), *w)).collect())
        .expect("positive weights");
    let mut kern = || (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect::<Vec<_>>();
    let (left, right) = (kern(), kern());
    HVModel::factorizable(lambda, left, right).expect("kernels are in [0, 1]")
}

fn bell_run(p: &BellParams, seed: u64, tol: f64, out: &mut Outcome) -> Result<(), CliError> {
    match p {
        BellParams::Chsh { angles } => {
            let joints = observable_joints(&singlet_oracle(&geometry(angles)));
            let s = chsh_value(&joints)?;
            let closed = singlet_chsh_closed_form(angles);
            let mut t = Tracker::<f64>::new(tol);
            t.equal(["S", "closed form"], &s, &closed);
            out.check("chsh_matches_closed_form", Verdict::Holds, t.finish("chsh_closed_form"));
            let mut local = Tracker::<f64>::new(tol);
            local.at_least(["local bound", "|S|"], &2.0, &s.abs());
            out.check("local_bound", Verdict::of(closed.abs() <= 2.0 + tol), local.finish("chsh_local_bound"));
            let tsirelson = 2.0 * 2f64.sqrt();
            let mut q = Tracker::<f64>::new(tol);
            q.at_least(["quantum bound", "|S|"], &tsirelson, &s.abs());
            out.check("quantum_bound", Verdict::Holds, q.finish("chsh_quantum_bound"));
            let parallel = observable_joints(&singlet_oracle(&SettingsGeometry::symmetric(angles)));
            let mut anti = Tracker::<f64>::new(0.0);
            for (i, row) in parallel.iter().enumerate() {
                anti.equal([format!("pr(+,+) at angle {}", angles[i])], &row[i][bell::cell(true, true)], &0.0);
            }
            out.check("parallel_anticorrelation", Verdict::Holds, anti.finish("parallel_anticorrelation"));
            out.value("chsh", s);
            out.value("abs_chsh", s.abs());
            out.value("closed_form", closed);
        }
        BellParams::LocalBound { models, max_hidden_states } => {
            let one = BigRational::one();
            let two = ratio(2, 1);
            let lambda = ProbabilitySpace::new(vec![("l".into(), one.clone())])?;
            let mut reach = Tracker::<BigRational>::new(0.0);
            let mut bound = Tracker::<BigRational>::new(0.0);
            for v in 0u32..16 {
                let bit = |k: u32| if v >> k & 1 == 1 { one.clone() } else { BigRational::zero() };
                let m = HVModel::factorizable(lambda.clone(), vec![vec![bit(0), bit(1)]], vec![vec![bit(2), bit(3)]])?;
                let s = num_traits::Signed::abs(&chsh_value(&observable_joints(&m))?);
                reach.equal([format!("vertex {v:04b}")], &s, &two);
                bound.at_least([format!("vertex {v:04b}"), "|S|".into()], &two, &s);
            }
            out.check("vertices_respect_local_bound", Verdict::Holds, bound.finish("chsh_local_bound"));
            out.check("vertices_reach_local_bound", Verdict::Holds, reach.finish("vertex_chsh_is_two"));

            let results: Vec<(CheckReport, f64)> = (0..*models)
                .into_par_iter()
                .map(|i| {
                    let m = random_factorizable(&mut item_rng(seed, i), *max_hidden_states);
                    let s = chsh_value(&observable_joints(&m)).expect("two settings per wing");
                    (check_factorizability(&m, tol), s)
                })
                .collect();
            let facts: Vec<CheckReport> = results.iter().map(|r| r.0.clone()).collect();
            out.check("random_models_factorizable", Verdict::Holds, CheckReport::all("factorizability", tol, &facts));
            let mut t = Tracker::<f64>::new(tol);
            let mut max = 0f64;
            for (i, (_, s)) in results.iter().enumerate() {
                t.at_least([format!("model {i}"), "|S|".into()], &2.0, &s.abs());
                max = max.max(s.abs());
            }
            out.check("random_models_respect_local_bound", Verdict::Holds, t.finish("chsh_local_bound"));
            out.value("max_abs_chsh", max);
            out.value("models", models);
        }
        BellParams::PiOi { angle_pairs } => {
            let mut oi_residuals = Vec::new();
            for (k, &(a, b)) in angle_pairs.iter().enumerate() {
                let m = singlet_oracle(&SettingsGeometry {
                    left: vec![a],
                    right: vec![b],
                });
                let want = (0.5 * ((a - b) / 2.0).sin().powi(2) - 0.25).abs();
                out.check(format!("parameter_independence_{k}"), Verdict::Holds, check_parameter_independence(&m, tol));
                let oi = check_outcome_independence(&m, tol);
                oi_residuals.push(oi.max_residual);
                out.check(format!("outcome_independence_{k}"), Verdict::of(want <= tol), oi);
                out.check(format!("factorizability_{k}"), Verdict::of(want <= tol), check_factorizability(&m, tol));
            }
            out.value("outcome_independence_residuals", oi_residuals);
        }
        BellParams::Audit { model } => {
            let m = HVModel::<f64>::from_json(&read_json(model)?)?;
            out.check("parameter_independence", Verdict::Holds, check_parameter_independence(&m, tol));
            out.check("outcome_independence", Verdict::Holds, check_outcome_independence(&m, tol));
            out.check("factorizability", Verdict::Holds, check_factorizability(&m, tol));
            let joints = observable_joints(&m);
            if let Ok(s) = chsh_value(&joints) {
                let mut t = Tracker::<f64>::new(tol);
                t.at_least(["local bound", "|S|"], &2.0, &s.abs());
                out.check("local_bound", Verdict::Holds, t.finish("chsh_local_bound"));
                out.value("chsh", s);
            }
            match bell_wigner_check(&joints, tol) {
                Ok(r) => out.check("bell_wigner", Verdict::Holds, r),
                Err(e) => out.value("bell_wigner", format!("not applicable: {e}")),
            }
        }
    }
    Ok(())
}

// ---- szabo ----

fn szabo(p: &SzaboParams, tol: f64, out: &mut Outcome) -> Result<(), CliError> {
    let targets = observable_joints(&singlet_oracle(&geometry(&p.angles)));
    let opts = SzaboOptions {
        left_priors: p.left_priors,
        right_priors: p.right_priors,
        seed: p.solver_seed,
    };
    let sz = build_szabo_model(&targets, &opts, tol)?;
    for r in verify_szabo(&sz, tol) {
        out.check(r.condition.clone(), Verdict::Holds, r);
    }
    let causes = sz.cause_partitions();
    for which in [Locality::Pi, Locality::Oi, Locality::Fact] {
        out.check(which.name(), Verdict::Holds, check_coarse_locality(&sz.big, &causes, which, tol)?);
    }
    let audit = audit_boolean_combinations(&sz.big, &sz.causes, 1e-3);
    out.value("audit_max_correlation", audit.max_residual);
    out.check("boolean_combinations_uncorrelated", Verdict::Fails, audit);
    let joints: Vec<Vec<_>> = (0..2)
        .map(|x| (0..2).map(|y| sz.big.observable_joint(x, y)).collect::<causality_lab::Result<Vec<_>>>())
        .collect::<causality_lab::Result<_>>()?;
    out.value("chsh", chsh_value(&joints)?);
    out.value("atoms", sz.big.space.len());
    out.value("cause_atoms", &sz.defined_atoms);
    out.value("pr_cause", &sz.pr_cause);
    out.value("feasible_spans", &sz.feasible_spans);
    let doc = json!({
        "space": sz.big.space.to_json(),
        "causes": sz.causes.iter().map(|(l, e)| json!({"label": l, "atoms": sz.big.space.event_labels(e)})).collect::<Vec<_>>(),
    });
    out.artifacts.push(("szabo_model.json".into(), pretty(&doc)));
    Ok(())
}

// ---- causet ----

fn exact_q(q: &[f64]) -> Vec<BigRational> {
    q.iter().map(|&x| BigRational::from_f64_lossy(x)).collect()
}

/// `t_0 = 1`, `t_k = a/b` with small seeded `a, b`.
fn random_law(rng: &mut ChaCha8Rng, rank: usize) -> GrowthDynamics<BigRational> {
    let mut t = vec![BigRational::one()];
    t.extend((0..rank).map(|_| ratio(rng.gen_range(0..6), rng.gen_range(1..6))));
    GrowthDynamics::from_t(t).expect("t_0 = 1 keeps every sum positive")
}

fn to_f64_law(d: &GrowthDynamics<BigRational>) -> GrowthDynamics<f64> {
    match d {
        GrowthDynamics::Chain { max_rank } => GrowthDynamics::chain(*max_rank),
        GrowthDynamics::Percolation { q, .. } => {
            GrowthDynamics::from_q(q.iter().map(Weight::to_f64_lossy).collect()).expect("same law in floats")
        }
    }
}

fn law_checks(
    d: &GrowthDynamics<BigRational>,
    exact_rank: usize,
    max_rank: usize,
    tol: f64,
) -> causality_lab::Result<Vec<(&'static str, CheckReport)>> {
    let mut empty = Tracker::<BigRational>::new(0.0);
    for (n, qn) in d.q().iter().enumerate().take(exact_rank + 1) {
        empty.equal([format!("alpha(n={n}, empty)"), format!("q_{n}")], &alpha(n, 0, 0, d)?, qn);
    }
    let f = to_f64_law(d);
    Ok(vec![
        ("inversion_identity", d.check_inversion(0.0)),
        ("markov_sum_rule", check_sum_rule(d, exact_rank, 0.0)?),
        ("empty_precursor_gives_q", empty.finish("empty_precursor_gives_q")),
        ("discrete_general_covariance", check_dgc(&f, max_rank, tol)?),
        ("bell_causality", check_bell_causality(&f, max_rank, tol)?),
    ])
}

fn causet_run(p: &CausetParams, seed: u64, tol: f64, out: &mut Outcome) -> Result<(), CliError> {
    match p {
        CausetParams::Grow { q, steps } => {
            let d = GrowthDynamics::from_q(q.clone())?;
            let grown = grow(&d, *steps, seed)?;
            let mut t = Tracker::<f64>::new(0.0);
            for b in &grown.births {
                let mask = b.precursor.iter().fold(0u64, |m, &i| m | 1 << i);
                t.equal([format!("stage {}", b.stage)], &(grown.causet.past(b.stage) as f64), &(mask as f64));
            }
            out.check("trajectory_matches_causet", Verdict::Holds, t.finish("trajectory_matches_causet"));
            out.check("markov_sum_rule", Verdict::Holds, check_sum_rule(&d, steps.saturating_sub(1), tol)?);
            out.value("relation", grown.causet.relation());
            out.value("births", &grown.births);
            out.artifacts.push(("causet.json".into(), pretty(&json!({"relation": grown.causet.relation()}))));
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["stage", "precursor_set", "probability"]).expect("in memory");
            for b in &grown.births {
                let set = b.precursor.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
                w.write_record([b.stage.to_string(), format!("{{{set}}}"), b.probability.to_string()])
                    .expect("in memory");
            }
            let bytes = w.into_inner().expect("in memory");
            out.artifacts.push(("trajectory.csv".into(), String::from_utf8(bytes).expect("utf-8")));
        }
        CausetParams::Verify { q, random_laws, exact_rank, max_rank } => {
            let rank = (*exact_rank).max(*max_rank);
            let mut laws: Vec<(String, GrowthDynamics<BigRational>)> = Vec::new();
            if let Some(q) = q {
                laws.push(("given".into(), GrowthDynamics::from_q(exact_q(q))?));
            }
            for i in 0..*random_laws {
                laws.push((format!("random_{i}"), random_law(&mut item_rng(seed, i), rank)));
            }
            let results: Vec<Vec<(&str, CheckReport)>> = laws
                .par_iter()
                .map(|(_, d)| law_checks(d, *exact_rank, *max_rank, tol))
                .collect::<causality_lab::Result<_>>()?;
            for (name, reports) in laws.iter().map(|l| &l.0).zip(results) {
                for (id, r) in reports {
                    out.check(format!("{name}/{id}"), Verdict::Holds, r);
                }
            }
            out.value("laws", laws.iter().map(|(n, d)| (n.clone(), d.q().iter().map(Weight::to_json).collect::<Vec<_>>())).collect::<BTreeMap<_, _>>());
            if let Some((_, d)) = laws.iter().find(|(n, _)| n == "given") {
                if d.max_rank() >= 2 {
                    let dist = transition_distribution(&Causet::chain(2), d)?;
                    out.value(
                        "two_chain_transitions",
                        dist.iter().map(|(s, a)| (s.elements(), a.to_json())).collect::<Vec<_>>(),
                    );
                }
            }
        }
        CausetParams::StrongSel { max_rank, divisions, q } => {
            let found = strong_sel_solutions::<BigRational>(*max_rank, *divisions)?;
            let labels: Vec<String> = found.solutions.iter().map(|d| d.label()).collect();
            let mut t = Tracker::<f64>::new(0.0);
            for l in &labels {
                if l != "chain" && l != "antichain" {
                    t.fail(vec![format!("interior solution {l}")]);
                }
            }
            for want in ["chain", "antichain"] {
                if !labels.iter().any(|l| l == want) {
                    t.fail(vec![format!("{want} missing")]);
                }
            }
            t.note(found.scope.clone());
            out.check("only_boundary_laws", Verdict::Holds, t.finish("strong_sel_solutions"));
            out.value("solutions", &labels);
            out.value("scanned", found.scanned);
            out.value("invalid", found.invalid);
            out.value("undefined", found.undefined);
            out.value("scope", &found.scope);
            if let Some(q) = q {
                let d = GrowthDynamics::from_q(exact_q(q))?;
                out.check("strong_sel_given_law", Verdict::Fails, check_strong_sel(&d, *max_rank, tol)?);
            }
        }
    }
    Ok(())
}
