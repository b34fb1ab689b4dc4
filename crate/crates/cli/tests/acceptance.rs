//! Acceptance suite: runs each checked-in scenario config, compares the
//! manifest against independent oracles and the stated time budget, and
//! prints one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use causality_lab::sel::suite::SUITE_LATTICES;
use causality_lab_cli::{run, ExperimentConfig, RunManifest};
use serde_json::{json, Value};

struct Scenario {
    id: usize,
    title: &'static str,
    config: &'static str,
    budget: Duration,
    verify: fn(&RunManifest) -> Result<(), String>,
}

fn ensure(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn check<'a>(m: &'a RunManifest, id: &str) -> Result<&'a causality_lab_cli::CheckRecord, String> {
    m.checks.iter().find(|c| c.id == id).ok_or_else(|| format!("no check {id}"))
}

fn value<'a>(m: &'a RunManifest, key: &str) -> Result<&'a Value, String> {
    m.values.get(key).ok_or_else(|| format!("no value {key}"))
}

fn num(m: &RunManifest, key: &str) -> Result<f64, String> {
    value(m, key)?.as_f64().ok_or_else(|| format!("{key} is not a number"))
}

fn all_met(m: &RunManifest) -> Result<(), String> {
    match m.checks.iter().find(|c| !c.met) {
        None => Ok(()),
        Some(c) => Err(format!("{} expected {:?} but holds={}", c.id, c.expected, c.report.holds)),
    }
}

fn singlet_chsh(m: &RunManifest) -> Result<(), String> {
    all_met(m)?;
    let root = 2.0 * 2f64.sqrt();
    let s = num(m, "abs_chsh")?;
    ensure((s - root).abs() < 1e-6, format!("|S| = {s}, want 2√2"))?;
    let anti = check(m, "parallel_anticorrelation")?;
    ensure(anti.report.holds && anti.report.tolerance == 0.0, "pr(+,+) at parallel settings is not exactly 0")
}

fn local_bound(m: &RunManifest) -> Result<(), String> {
    all_met(m)?;
    // Every ±1 assignment gives |S| = 2.
    for v in 0u32..16 {
        let o = |k: u32| if v >> k & 1 == 1 { 1i32 } else { -1 };
        let s = o(0) * o(2) - o(0) * o(3) + o(1) * o(2) + o(1) * o(3);
        ensure(s.abs() == 2, format!("vertex {v:04b} gives {s}"))?;
    }
    ensure(check(m, "vertices_reach_local_bound")?.report.holds, "vertices miss |S| = 2")?;
    ensure(value(m, "models")? == &json!(10_000), "fewer than 10^4 models")?;
    let max = num(m, "max_abs_chsh")?;
    ensure(max <= 2.0 + 1e-9, format!("random model reached |S| = {max}"))
}

fn pi_oi(m: &RunManifest) -> Result<(), String> {
    all_met(m)?;
    let cfg = load("c3_pi_oi.json");
    let Value::Array(pairs) = &serde_json::to_value(&cfg.experiment).unwrap()["params"]["angle_pairs"] else {
        return Err("config has no angle pairs".into());
    };
    let mut split = 0;
    for (k, p) in pairs.iter().enumerate() {
        let (a, b) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
        let pi = check(m, &format!("parameter_independence_{k}"))?;
        let oi = check(m, &format!("outcome_independence_{k}"))?;
        let want = (0.5 * ((a - b) / 2.0).sin().powi(2) - 0.25).abs();
        ensure((oi.report.max_residual - want).abs() < 1e-12, format!("pair {k}: OI residual {}", oi.report.max_residual))?;
        if pi.report.holds && !oi.report.holds && want > 1e-6 {
            split += 1;
        }
    }
    ensure(split >= 3, format!("PI without OI at only {split} angle pairs"))
}

fn szabo(m: &RunManifest) -> Result<(), String> {
    all_met(m)?;
    ensure(value(m, "atoms")? == &json!(256), "space is not 256 atoms")?;
    ensure(value(m, "cause_atoms")? == &json!([16, 32, 64, 128]), "cause atom counts differ")?;
    for id in [
        "cause_choice_independence",
        "outcome_distant_setting_independence",
        "cause_screening",
        "choice_choice_independence",
        "target_joints",
    ] {
        let r = &check(m, id)?.report;
        ensure(r.holds && r.max_residual < 1e-9, format!("{id} residual {}", r.max_residual))?;
    }
    let audit = num(m, "audit_max_correlation")?;
    ensure(audit > 1e-3, format!("largest combination correlation {audit}"))?;
    let s = num(m, "chsh")?.abs();
    ensure((s - 2.0 * 2f64.sqrt()).abs() < 1e-9, format!("model CHSH {s}"))
}

fn pcc(m: &RunManifest) -> Result<(), String> {
    all_met(m)?;
    ensure(value(m, "extended_pairs")? == &json!(100), "fewer than 100 extensions")?;
    for id in ["measure_preserving_embeddings", "extensions_are_reichenbachian", "correlations_preserved"] {
        ensure(check(m, id)?.report.tolerance == 0.0, format!("{id} is not exact"))?;
    }
    let valid = value(m, "reichenbach_valid_triples")?.as_u64().unwrap_or(0);
    ensure(valid > 0, "no Reichenbach-valid triple among 10^4")
}

fn sel_suite(m: &RunManifest) -> Result<(), String> {
    all_met(m)?;
    let suite = value(m, "suite")?;
    let n = suite["ensembles"].as_u64().unwrap_or(0);
    ensure(n >= 1000, format!("{n} ensembles"))?;
    for (t, x) in SUITE_LATTICES {
        ensure(t <= 4 && x <= 6 && t * x <= 12, format!("lattice {t}×{x} exceeds 4×6 or 2^12 worlds"))?;
    }
    for k in ["seld1_to_seld2_counterexamples", "sels_seld2_counterexamples", "seld2_ratio_counterexamples"] {
        ensure(suite[k] == json!(0), format!("{k} = {}", suite[k]))?;
    }
    for id in ["seld1_outcomes_after_settings", "seld2_tilted_surface"] {
        ensure(!check(m, id)?.report.holds, format!("{id} unexpectedly holds"))?;
    }
    Ok(())
}

fn causet_dynamics(m: &RunManifest) -> Result<(), String> {
    all_met(m)?;
    let laws = value(m, "laws")?.as_object().ok_or("laws missing")?;
    ensure(laws.keys().filter(|k| k.starts_with("random_")).count() == 20, "not 20 random laws")?;
    for name in laws.keys() {
        for (id, tol) in [
            ("inversion_identity", 0.0),
            ("markov_sum_rule", 0.0),
            ("empty_precursor_gives_q", 0.0),
            ("discrete_general_covariance", 1e-12),
            ("bell_causality", 1e-12),
        ] {
            let r = &check(m, &format!("{name}/{id}"))?.report;
            ensure(r.holds && r.tolerance == tol, format!("{name}/{id}"))?;
        }
    }
    // Hand computation for q = (1, 1/2, 1/4) on the 2-chain.
    let got: BTreeMap<String, Value> = value(m, "two_chain_transitions")?
        .as_array()
        .ok_or("transitions missing")?
        .iter()
        .map(|p| (p[0].to_string(), p[1].clone()))
        .collect();
    let want: BTreeMap<String, Value> =
        [("[]", "1/4"), ("[0]", "1/4"), ("[0,1]", "1/2")].map(|(k, v)| (k.to_string(), json!(v))).into();
    ensure(got == want, format!("2-chain transitions {got:?}"))
}

fn strong_sel(m: &RunManifest) -> Result<(), String> {
    all_met(m)?;
    ensure(value(m, "solutions")? == &json!(["chain", "antichain"]), "solutions other than the boundary laws")?;
    ensure(value(m, "scanned")? == &json!(101 * 101), "grid is not 0.01 over two parameters")?;
    let r = &check(m, "strong_sel_given_law")?.report;
    ensure(
        r.witnesses.iter().any(|w| w.lhs == 0.25 && w.rhs == 0.5),
        "missing witness 1/4 against 1/2",
    )
}

fn load(name: &str) -> ExperimentConfig {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn main() {
    let scenarios = [
        Scenario { id: 1, title: "singlet CHSH 2√2 and parallel anti-correlation", config: "c1_singlet_chsh.json", budget: Duration::from_secs(1), verify: singlet_chsh },
        Scenario { id: 2, title: "local bound on 10^4 factorizable models and 16 vertices", config: "c2_local_bound.json", budget: Duration::from_secs(30), verify: local_bound },
        Scenario { id: 3, title: "singlet keeps PI and breaks OI", config: "c3_pi_oi.json", budget: Duration::from_secs(1), verify: pi_oi },
        Scenario { id: 4, title: "four-cause reconstruction and Boolean-combination audit", config: "c4_szabo.json", budget: Duration::from_secs(60), verify: szabo },
        Scenario { id: 5, title: "common-cause extensions and correlation theorem", config: "c5_pcc_extension.json", budget: Duration::from_secs(60), verify: pcc },
        Scenario { id: 6, title: "SEL implication suite and Bell-embedded violations", config: "c6_sel_suite.json", budget: Duration::from_secs(300), verify: sel_suite },
        Scenario { id: 7, title: "growth identities, covariance and Bell causality", config: "c7_causet_dynamics.json", budget: Duration::from_secs(120), verify: causet_dynamics },
        Scenario { id: 8, title: "strong SEL admits only chain and antichain", config: "c8_strong_sel.json", budget: Duration::from_secs(120), verify: strong_sel },
    ];
    let mut failed = 0;
    let mut manifests = Vec::new();
    for s in &scenarios {
        let cfg = load(s.config);
        let start = Instant::now();
        let result = run(&cfg).map_err(|e| e.to_string());
        let took = start.elapsed();
        let verdict = result.as_ref().map_err(Clone::clone).and_then(|o| {
            (s.verify)(&o.manifest)?;
            ensure(took <= s.budget, format!("took {took:.2?}, budget {:?}", s.budget))
        });
        report(s.id, s.title, took, &verdict, &mut failed);
        manifests.push((cfg, result.ok().map(|o| o.manifest.to_json_string())));
    }

    let start = Instant::now();
    let mut reproduced = Ok(());
    for (cfg, first) in &manifests {
        let again = run(cfg).map(|o| o.manifest.to_json_string()).map_err(|e| e.to_string());
        if first.as_ref() != again.as_ref().ok() {
            reproduced = Err(format!("{} differs on re-run", cfg.name));
            break;
        }
    }
    report(9, "manifests re-generated from config and seed are byte-identical", start.elapsed(), &reproduced, &mut failed);

    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn report(id: usize, title: &str, took: Duration, verdict: &Result<(), String>, failed: &mut usize) {
    match verdict {
        Ok(()) => println!("criterion {id}: PASS  {title} ({took:.2?})"),
        Err(why) => {
            *failed += 1;
            println!("criterion {id}: FAIL  {title} ({took:.2?}): {why}");
        }
    }
}
