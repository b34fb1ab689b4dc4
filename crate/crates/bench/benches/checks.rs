use std::f64::consts::PI;

use causality_lab::bell::{
    build_szabo_model, chsh_value, observable_joints, singlet_oracle, verify_szabo, SettingsGeometry, SzaboOptions,
};
use causality_lab::causet::{check_dgc, grow, strong_sel_solutions, GrowthDynamics};
use causality_lab::common_cause::extend_with_common_cause;
use causality_lab::{BigRational, Event, ProbabilitySpace};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn bell(c: &mut Criterion) {
    let geom = SettingsGeometry::symmetric(&[0.0, PI / 2.0, PI / 4.0, 3.0 * PI / 4.0]);
    c.bench_function("singlet_chsh", |b| {
        b.iter(|| chsh_value(&observable_joints(&singlet_oracle(black_box(&geom)))).unwrap())
    });
    let geom = SettingsGeometry { left: vec![0.0, PI / 2.0], right: vec![PI / 4.0, 3.0 * PI / 4.0] };
    let targets = observable_joints(&singlet_oracle(&geom));
    c.bench_function("szabo_build_and_verify", |b| {
        b.iter(|| {
            let sz = build_szabo_model(&targets, &SzaboOptions::default(), 1e-9).unwrap();
            verify_szabo(&sz, 1e-9)
        })
    });
}

fn common_cause(c: &mut Criterion) {
    let space = ProbabilitySpace::new(
        [("ef", ratio(2, 5)), ("e", ratio(1, 10)), ("f", ratio(1, 10)), ("none", ratio(2, 5))]
            .map(|(n, w)| (n.to_string(), w))
            .into(),
    )
    .unwrap();
    let e = Event::from_indices(4, [0, 1]);
    let f = Event::from_indices(4, [0, 2]);
    c.bench_function("extend_with_common_cause", |b| {
        b.iter(|| extend_with_common_cause(black_box(&space), &e, &f).unwrap())
    });
}

fn causet(c: &mut Criterion) {
    let q: Vec<BigRational> = (0..7).map(|n| ratio(1, 1 << n)).collect();
    let d = GrowthDynamics::from_q(q).unwrap();
    c.bench_function("dgc_rank5_exact", |b| b.iter(|| check_dgc(black_box(&d), 5, 0.0).unwrap()));
    let qf: Vec<f64> = (0..7).map(|n| 0.5f64.powi(n)).collect();
    let df = GrowthDynamics::from_q(qf).unwrap();
    c.bench_function("grow_6_steps", |b| b.iter(|| grow(black_box(&df), 6, 7).unwrap()));
    let mut g = c.benchmark_group("strong_sel");
    g.sample_size(10);
    g.bench_function("rank3_grid100", |b| b.iter(|| strong_sel_solutions::<BigRational>(3, 100).unwrap()));
    g.finish();
}

criterion_group!(benches, bell, common_cause, causet);
criterion_main!(benches);
