use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    build_field, initial_state, joint_actions, observe, refresh, reports_to_state, source_trust, step,
    Allocation, Report, Scenario, ValleyError, ValleyState,
};
use crate::adapt::EthicalParams;
use crate::ethica::{active_verdicts, EthicaError};
use crate::global::{select_action, DecisionRecord, GlobalError, Thresholds};

/// Everything that happened on one day of an episode.
#[derive(Debug, Clone)]
pub struct DayRecord {
    pub day: u32,
    pub report: Report,
    pub decision: DecisionRecord,
    pub allocation: Allocation,
    pub before: ValleyState,
    pub after: ValleyState,
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub seed: u64,
    pub days: Vec<DayRecord>,
}

impl Episode {
    /// Sum of the chosen candidates' totals.
    pub fn objective(&self) -> f64 {
        self.days
            .iter()
            .map(|d| d.decision.chosen_breakdown().total)
            .sum()
    }
}

/// Runs the perceive, filter, select, act cycle for `days` days from the
/// scenario's initial state, calling `on_day` after each day. Returns the sum
/// of chosen totals.
pub fn run_episode_with(
    scenario: &Scenario,
    params: &EthicalParams,
    allocations: &[Allocation],
    seed: u64,
    days: u32,
    mut on_day: impl FnMut(DayRecord),
) -> Result<f64, ValleyError> {
    let config = &scenario.config;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trust = source_trust(config)?;
    let norms = scenario.norms_with_weights(&params.obligation_weights);
    let thresholds = Thresholds {
        tau: config.tau,
        theta: config.theta,
    };
    let mut state = initial_state(config);
    let mut report = observe(config, &state, &mut rng);
    let mut objective = 0.0;
    let mut field = build_field(scenario, params, &report, allocations)?;
    let mut joint = joint_actions(scenario, &report, allocations)?;
    for day in 0..days {
        if day > 0 {
            refresh(scenario, &report, allocations, &mut field, &mut joint)?;
        }
        let symbolic = reports_to_state(&report, &trust, config.evidence_window)?;
        let decision = match select_action(&field, &joint, &norms, &symbolic, thresholds, day) {
            Err(GlobalError::Ethica(EthicaError::NoPermittedAction { excluded })) => {
                let universe: BTreeSet<String> = joint
                    .iter()
                    .flat_map(|j| j.candidate.realizes.iter().cloned())
                    .chain(norms.iter().map(|n| n.action.clone()))
                    .collect();
                let verdicts = active_verdicts(&norms, &symbolic, config.theta, &universe)?;
                return Err(ValleyError::DeadEnd {
                    day,
                    excluded,
                    verdicts: Box::new(verdicts),
                });
            }
            other => other?,
        };
        objective += decision.chosen_breakdown().total;
        let allocation = allocations
            .iter()
            .find(|a| a.label == decision.chosen)
            .cloned()
            .expect("chosen label comes from the candidate set");
        let (next, next_report) = step(config, &state, &allocation, &mut rng);
        on_day(DayRecord {
            day,
            report: std::mem::replace(&mut report, next_report),
            decision,
            allocation,
            before: std::mem::replace(&mut state, next.clone()),
            after: next,
        });
    }
    Ok(objective)
}

pub fn run_episode(
    scenario: &Scenario,
    params: &EthicalParams,
    allocations: &[Allocation],
    seed: u64,
    days: u32,
) -> Result<Episode, ValleyError> {
    let mut records = Vec::with_capacity(days as usize);
    run_episode_with(scenario, params, allocations, seed, days, |d| records.push(d))?;
    Ok(Episode { seed, days: records })
}
