use std::path::Path;

use nael_core::adapt::{episode_objective, EthicalParams};
use nael_core::valley::{
    evenness, initial_state, run_episode, scenario_allocations, step, Allocation, Scenario, ValleyState,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scenario() -> Scenario {
    Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/arid_valley.toml")).unwrap()
}

fn evenness_of(state: &ValleyState) -> f64 {
    evenness(&state.species.iter().map(|&n| n as f64).collect::<Vec<_>>())
}

#[test]
fn objective_is_the_mean_over_seeds() {
    let s = scenario();
    let allocations = scenario_allocations(&s.config).unwrap();
    let params = EthicalParams::from_scenario(&s);
    let days = s.config.adapt.episode_days;
    let a = run_episode(&s, &params, &allocations, 11, days)
        .unwrap()
        .objective();
    let b = run_episode(&s, &params, &allocations, 12, days)
        .unwrap()
        .objective();
    let mean = episode_objective(&params, &s, &allocations, 11, 2).unwrap();
    assert!((mean - (a + b) / 2.0).abs() < 1e-12, "{mean} vs {a}, {b}");
}

#[test]
fn episodes_replay_exactly() {
    let s = scenario();
    let allocations = scenario_allocations(&s.config).unwrap();
    let params = EthicalParams::from_scenario(&s);
    let labels = |seed| {
        run_episode(&s, &params, &allocations, seed, 8)
            .unwrap()
            .days
            .iter()
            .map(|d| {
                (
                    d.decision.chosen.clone(),
                    d.decision.chosen_breakdown().total.to_bits(),
                )
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(labels(5), labels(5));
}

fn evenness_after(alloc: &Allocation, days: u32) -> f64 {
    let s = scenario();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut state = initial_state(&s.config);
    for _ in 0..days {
        state = step(&s.config, &state, alloc, &mut rng).0;
    }
    evenness_of(&state)
}

#[test]
fn sustaining_share_keeps_the_sanctuary_even() {
    let s = scenario();
    let start = evenness_of(&initial_state(&s.config));
    let wet = evenness_after(&Allocation::new("wet", [0.4, 0.4, 0.2]).unwrap(), 60);
    let dry = evenness_after(&Allocation::new("dry", [0.7, 0.3, 0.0]).unwrap(), 60);
    assert!(wet >= start - 0.02, "wet {wet} vs start {start}");
    assert!(dry < wet, "dry {dry} vs wet {wet}");
}

#[test]
fn zero_obligation_weights_remove_penalties() {
    let s = scenario();
    let allocations = scenario_allocations(&s.config).unwrap();
    let mut params = EthicalParams::from_scenario(&s);
    for w in params.obligation_weights.values_mut() {
        *w = 0.0;
    }
    let episode = run_episode(&s, &params, &allocations, 7, 4).unwrap();
    for day in &episode.days {
        assert!(day
            .decision
            .evaluations
            .iter()
            .all(|e| e.breakdown.penalty < 1e-300));
    }
}
