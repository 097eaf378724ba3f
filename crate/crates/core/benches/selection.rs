//! Compare builds with `cargo bench` and `cargo bench --no-default-features`.

use std::path::Path;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use nael_core::adapt::{episode_objective, EthicalParams};
use nael_core::global::{select_action, Thresholds};
use nael_core::par;
use nael_core::valley::{
    build_field, initial_state, joint_actions, observe, reports_to_state, scenario_allocations, source_trust,
    Scenario,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mode() -> &'static str {
    if par::is_parallel() {
        "parallel"
    } else {
        "sequential"
    }
}

fn scenario() -> Scenario {
    Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/arid_valley.toml")).unwrap()
}

fn selection(c: &mut Criterion) {
    let s = scenario();
    let config = &s.config;
    let allocations = scenario_allocations(config).unwrap();
    let params = EthicalParams::from_scenario(&s);
    let state = initial_state(config);
    let report = observe(config, &state, &mut ChaCha8Rng::seed_from_u64(1));
    let field = build_field(&s, &params, &report, &allocations).unwrap();
    let joint = joint_actions(&s, &report, &allocations).unwrap();
    let symbolic = reports_to_state(&report, &source_trust(config).unwrap(), config.evidence_window).unwrap();
    let thresholds = Thresholds {
        tau: config.tau,
        theta: config.theta,
    };
    c.bench_function(&format!("select_action/{}", mode()), |b| {
        b.iter(|| select_action(&field, &joint, &s.norms, &symbolic, thresholds, 0).unwrap())
    });
    c.bench_function(&format!("build_field/{}", mode()), |b| {
        b.iter_batched(
            || report.clone(),
            |r| build_field(&s, &params, &r, &allocations).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn episodes(c: &mut Criterion) {
    let s = scenario();
    let allocations = scenario_allocations(&s.config).unwrap();
    let params = EthicalParams::from_scenario(&s);
    let mut group = c.benchmark_group("objective");
    group.sample_size(10);
    group.bench_function(format!("8x5_days/{}", mode()), |b| {
        b.iter(|| episode_objective(&params, &s, &allocations, 7, 8).unwrap())
    });
    group.finish();
}

criterion_group!(benches, selection, episodes);
criterion_main!(benches);
