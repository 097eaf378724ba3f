//! The Arid Valley: two communities and a wildlife sanctuary sharing a daily
//! water budget under drought.

mod config;
mod dynamics;
mod field;
mod sim;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ethica::{CandidateAction, EthicaError, Verdicts};
use crate::global::GlobalError;
use crate::infer::InferError;

pub use config::{
    has_water_atom, stressed_atom, AdaptConfig, CommunityConfig, ModelSpec, NamedAllocation, SanctuaryConfig,
    Scenario, ScenarioConfig, SCHEMA_VERSION,
};
pub use dynamics::{
    evenness, exact_report, initial_state, observe, reports_to_state, source_trust, step, stress_level,
    CommunityReport, Report, SanctuaryReport, ValleyState,
};
pub use field::level_preferences;
pub use field::{build_field, joint_actions, project_species, refresh};
pub use sim::{run_episode, run_episode_with, DayRecord, Episode};

/// Grid steps accepted by [`candidate_allocations`].
pub const GRID_STEPS: [f64; 6] = [0.05, 0.1, 0.2, 0.25, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValleyError {
    #[error("grid step {0} is not one of 0.05, 0.1, 0.2, 0.25, 0.5, 1.0")]
    InvalidGridStep(f64),
    #[error("config: {0}")]
    Config(String),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("invalid allocation `{0}`")]
    InvalidAllocation(String),
    #[error("day {day}: no permitted action remains ({excluded} excluded)")]
    DeadEnd {
        day: u32,
        excluded: usize,
        verdicts: Box<Verdicts>,
    },
    #[error(transparent)]
    Ethica(#[from] EthicaError),
    #[error(transparent)]
    Global(#[from] GlobalError),
    #[error(transparent)]
    Infer(#[from] InferError),
}

impl ValleyError {
    /// The dead-end error when every candidate was excluded.
    pub fn is_no_permitted_action(&self) -> bool {
        matches!(
            self,
            ValleyError::DeadEnd { .. }
                | ValleyError::Ethica(EthicaError::NoPermittedAction { .. })
                | ValleyError::Global(GlobalError::Ethica(EthicaError::NoPermittedAction { .. }))
        )
    }
}

/// `exp(−κ·deficit)`.
pub fn survival_probability(deficit: u32, kappa: f64) -> f64 {
    (-kappa * f64::from(deficit)).exp()
}

/// Shares of the daily budget for (C1, C2, W).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub label: String,
    pub shares: [f64; 3],
}

impl Allocation {
    pub fn new(label: impl Into<String>, shares: [f64; 3]) -> Result<Self, ValleyError> {
        let label = label.into();
        let sum: f64 = shares.iter().sum();
        if shares.iter().any(|s| !(*s >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(ValleyError::InvalidAllocation(label));
        }
        Ok(Self { label, shares })
    }

    /// Integer units by largest remainder; always sums to `budget`.
    pub fn units(&self, budget: u32) -> [u32; 3] {
        let sum: f64 = self.shares.iter().sum();
        let raw: Vec<f64> = self
            .shares
            .iter()
            .map(|s| (s / sum * f64::from(budget) * 1e9).round() / 1e9)
            .collect();
        let mut units = [0u32; 3];
        for (u, r) in units.iter_mut().zip(&raw) {
            *u = r.floor() as u32;
        }
        let assigned: u32 = units.iter().sum();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&i, &j| {
            let fi = raw[i] - raw[i].floor();
            let fj = raw[j] - raw[j].floor();
            fj.total_cmp(&fi).then(i.cmp(&j))
        });
        for &i in order.iter().take(budget.saturating_sub(assigned) as usize) {
            units[i] += 1;
        }
        units
    }
}

fn grid_label(shares: &[f64; 3]) -> String {
    format!("{:.2}/{:.2}/{:.2}", shares[0], shares[1], shares[2])
}

/// Every lattice point of the share simplex at `grid_step`, sorted
/// lexicographically by shares.
pub fn candidate_allocations(grid_step: f64) -> Result<Vec<Allocation>, ValleyError> {
    if !GRID_STEPS.iter().any(|s| (s - grid_step).abs() < 1e-9) {
        return Err(ValleyError::InvalidGridStep(grid_step));
    }
    let n = (1.0 / grid_step).round() as u32;
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=n - i {
            let k = n - i - j;
            let shares = [i, j, k].map(|x| f64::from(x) / f64::from(n));
            out.push(Allocation {
                label: grid_label(&shares),
                shares,
            });
        }
    }
    Ok(out)
}

/// The grid with named allocations substituted for matching grid points;
/// off-grid named allocations are appended.
pub fn scenario_allocations(config: &ScenarioConfig) -> Result<Vec<Allocation>, ValleyError> {
    let mut out = candidate_allocations(config.grid_step)?;
    for named in &config.named {
        let alloc = Allocation::new(named.label.clone(), named.shares)?;
        match out.iter_mut().find(|a| {
            a.shares
                .iter()
                .zip(&named.shares)
                .all(|(x, y)| (x - y).abs() < 1e-9)
        }) {
            Some(slot) => slot.label = alloc.label,
            None => out.push(alloc),
        }
    }
    Ok(out)
}

/// Named allocations only, in config order.
pub fn named_allocations(config: &ScenarioConfig) -> Result<Vec<Allocation>, ValleyError> {
    config
        .named
        .iter()
        .map(|n| Allocation::new(n.label.clone(), n.shares))
        .collect()
}

pub fn give_water(id: &str) -> String {
    format!("give_water({id})")
}

pub fn share_water(id: &str) -> String {
    format!("share({id})")
}

pub fn withhold(id: &str) -> String {
    format!("withhold({id})")
}

/// Every primitive action an allocation can realize.
pub fn primitive_actions(config: &ScenarioConfig) -> BTreeSet<String> {
    config
        .party_ids()
        .iter()
        .flat_map(|id| [give_water(id), share_water(id), withhold(id)])
        .collect()
}

/// Needs of (C1, C2, W) in config order.
pub(crate) fn needs(config: &ScenarioConfig) -> [u32; 3] {
    [
        config.communities[0].need,
        config.communities[1].need,
        config.sanctuary.need,
    ]
}

/// `give_water(X)` when X's need is met, `share(X)` when X gets anything,
/// `withhold(X)` when X gets nothing.
pub fn realized_actions(config: &ScenarioConfig, alloc: &Allocation) -> CandidateAction {
    let units = alloc.units(config.budget);
    let needs = needs(config);
    let mut realizes = BTreeSet::new();
    for (i, id) in config.party_ids().iter().enumerate() {
        if units[i] >= needs[i] {
            realizes.insert(give_water(id));
        }
        if units[i] > 0 {
            realizes.insert(share_water(id));
        } else {
            realizes.insert(withhold(id));
        }
    }
    CandidateAction {
        label: alloc.label.clone(),
        realizes,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    pub(crate) const DEFAULT_TOML: &str = include_str!("../../../../scenarios/arid_valley.toml");
    pub(crate) const DEFAULT_NORMS: &str = include_str!("../../../../scenarios/arid_valley.norms");

    pub(crate) fn default_scenario() -> Scenario {
        Scenario::from_parts(ScenarioConfig::from_toml(DEFAULT_TOML).unwrap(), DEFAULT_NORMS).unwrap()
    }

    #[test]
    fn survival_examples() {
        assert_eq!(survival_probability(0, 0.5), 1.0);
        assert_abs_diff_eq!(survival_probability(2, 0.5), 0.36787944117144233, epsilon = 1e-15);
        for d in 0..10 {
            assert!(survival_probability(d + 1, 0.5) < survival_probability(d, 0.5));
        }
    }

    #[test]
    fn grid_counts() {
        assert_eq!(candidate_allocations(1.0).unwrap().len(), 3);
        assert_eq!(candidate_allocations(0.5).unwrap().len(), 6);
        let tenth = candidate_allocations(0.1).unwrap();
        assert_eq!(tenth.len(), 66);
        let labels: Vec<&str> = tenth.iter().map(|a| a.label.as_str()).collect();
        assert!(labels.contains(&"0.70/0.30/0.00"));
        assert!(labels.contains(&"0.40/0.40/0.20"));
        assert!(tenth.windows(2).all(|w| w[0].shares < w[1].shares));
        assert_eq!(candidate_allocations(0.05).unwrap().len(), 231);
        assert_eq!(candidate_allocations(0.3), Err(ValleyError::InvalidGridStep(0.3)));
    }

    #[test]
    fn named_labels_replace_grid_points() {
        let s = default_scenario();
        let all = scenario_allocations(&s.config).unwrap();
        assert_eq!(all.len(), 66);
        assert!(all.iter().any(|a| a.label == "A1" && a.shares == [0.7, 0.3, 0.0]));
        assert!(all.iter().any(|a| a.label == "A2"));
    }

    #[test]
    fn largest_remainder_examples() {
        let third = Allocation::new("t", [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert_eq!(third.units(100), [34, 33, 33]);
        let a1 = Allocation::new("A1", [0.7, 0.3, 0.0]).unwrap();
        assert_eq!(a1.units(100), [70, 30, 0]);
        let a2 = Allocation::new("A2", [0.4, 0.4, 0.2]).unwrap();
        assert_eq!(a2.units(100), [40, 40, 20]);
        assert!(Allocation::new("bad", [0.5, 0.6, 0.0]).is_err());
    }

    #[test]
    fn realized_paper_actions() {
        let s = default_scenario();
        let a1 = realized_actions(&s.config, &Allocation::new("A1", [0.7, 0.3, 0.0]).unwrap());
        assert!(a1.realizes.contains("give_water(C1)"));
        assert!(a1.realizes.contains("withhold(W)"));
        let a2 = realized_actions(&s.config, &Allocation::new("A2", [0.4, 0.4, 0.2]).unwrap());
        assert!(!a2.realizes.contains("give_water(C1)"));
        assert!(a2.realizes.contains("share(C1)"));
        assert!(a2.realizes.contains("give_water(W)"));
    }

    proptest! {
        #[test]
        fn units_conserve_budget(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0, budget in 1u32..1000) {
            let sum = a + b + c;
            prop_assume!(sum > 1e-6);
            let alloc = Allocation::new("p", [a / sum, b / sum, c / sum]);
            prop_assume!(alloc.is_ok());
            let units = alloc.unwrap().units(budget);
            prop_assert_eq!(units.iter().sum::<u32>(), budget);
        }
    }
}
