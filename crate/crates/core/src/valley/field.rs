use std::collections::{BTreeMap, BTreeSet};

use super::dynamics::expected_species_step;
use super::{
    config::shortfall_action, needs, realized_actions, source_trust, survival_probability, Allocation,
    Report, Scenario, ScenarioConfig, ValleyError,
};
use crate::adapt::EthicalParams;
use crate::global::{AgentModel, EthicalField, JointAction, StakeholderModel, SELF_ID};
use crate::infer::{exact_posterior, CategoricalDist, GenerativeModel, InferError};

/// Log-preferences over deficit (or stress) levels: `γ·ln survival(o)`.
pub fn level_preferences(config: &ScenarioConfig) -> Vec<f64> {
    (0..=config.max_deficit)
        .map(|o| config.preference_precision * survival_probability(o, config.survival_steepness).ln())
        .collect()
}

impl EthicalParams {
    /// The parameters a scenario starts from.
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let c = &scenario.config;
        let prefs = level_preferences(c);
        Self {
            self_preferences: c.self_model.preferences.clone(),
            stakeholder_preferences: c.party_ids().into_iter().map(|id| (id, prefs.clone())).collect(),
            obligation_weights: scenario
                .norms
                .iter()
                .filter(|n| n.modality == crate::ethica::Modality::Obligation)
                .map(|n| (n.id.clone(), n.weight))
                .collect(),
            env_weight: c.env_weight,
        }
    }
}

fn level_labels(prefix: &str, max: u32) -> Vec<String> {
    (0..=max).map(|i| format!("{prefix}{i}")).collect()
}

/// Readings equal the level with probability `1 − ε`, else an adjacent level.
fn adjacent_noise(n: usize, eps: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|s| {
            let mut row = vec![0.0; n];
            if n == 1 {
                row[0] = 1.0;
                return row;
            }
            row[s] = 1.0 - eps;
            match s {
                0 => row[1] += eps,
                _ if s == n - 1 => row[s - 1] += eps,
                _ => {
                    row[s - 1] += eps / 2.0;
                    row[s + 1] += eps / 2.0;
                }
            }
            row
        })
        .collect()
}

fn recv(units: u32) -> String {
    format!("recv{units}")
}

#[derive(Clone, Copy)]
enum Party {
    /// Meeting the need resets the deficit; otherwise it grows.
    Community,
    /// Meeting the need relieves one stress level; otherwise stress grows.
    Sanctuary,
}

fn party_model(
    config: &ScenarioConfig,
    party: Party,
    need: u32,
    noise: f64,
    levels: &BTreeSet<u32>,
    preferences: Vec<f64>,
) -> Result<GenerativeModel, InferError> {
    let max = config.max_deficit as usize;
    let prefix = match party {
        Party::Community => "d",
        Party::Sanctuary => "stress",
    };
    let labels = level_labels(prefix, config.max_deficit);
    let n = labels.len();
    let transition = levels
        .iter()
        .map(|&u| {
            let p = (f64::from(u) / f64::from(need)).min(1.0);
            (0..n)
                .map(|s| {
                    let mut row = vec![0.0; n];
                    let relieved = match party {
                        Party::Community => 0,
                        Party::Sanctuary => s.saturating_sub(1),
                    };
                    row[relieved] += p;
                    row[(s + 1).min(max)] += 1.0 - p;
                    row
                })
                .collect()
        })
        .collect();
    GenerativeModel::new(
        labels.clone(),
        labels,
        levels.iter().map(|&u| recv(u)).collect(),
        adjacent_noise(n, noise),
        transition,
        preferences,
        CategoricalDist::uniform(n)?,
    )
}

/// Expected species distribution after `horizon` days at `units` for W.
pub fn project_species(
    config: &ScenarioConfig,
    counts: &[f64],
    units: u32,
    horizon: usize,
) -> Result<CategoricalDist, InferError> {
    let mut counts = counts.to_vec();
    for _ in 0..horizon {
        counts = expected_species_step(config, &counts, units);
    }
    CategoricalDist::from_weights(counts)
}

/// Stakeholder models for C1, C2 and W with beliefs from `report`, the
/// deciding agent's own model, and the uniform ecological target.
pub fn build_field(
    scenario: &Scenario,
    params: &EthicalParams,
    report: &Report,
    allocations: &[Allocation],
) -> Result<EthicalField, ValleyError> {
    let config = &scenario.config;
    let trust = source_trust(config)?;
    let needs = needs(config);
    let mut levels: [BTreeSet<u32>; 3] = Default::default();
    for a in allocations {
        for (set, u) in levels.iter_mut().zip(a.units(config.budget)) {
            set.insert(u);
        }
    }

    let prefs_for = |id: &str| {
        params
            .stakeholder_preferences
            .get(id)
            .cloned()
            .unwrap_or_else(|| level_preferences(config))
    };
    let mut stakeholders = Vec::new();
    for (i, (c, r)) in config.communities.iter().zip(&report.communities).enumerate() {
        let model = party_model(
            config,
            Party::Community,
            needs[i],
            c.noise,
            &levels[i],
            prefs_for(&c.id),
        )?;
        let belief = exact_posterior(&model, model.prior(), &format!("d{}", r.deficit_reading))?;
        stakeholders.push(StakeholderModel {
            id: c.id.clone(),
            model,
            belief,
            trust: trust[&c.id],
        });
    }
    let s = &config.sanctuary;
    let model = party_model(
        config,
        Party::Sanctuary,
        needs[2],
        s.noise,
        &levels[2],
        prefs_for(&s.id),
    )?;
    let belief = exact_posterior(
        &model,
        model.prior(),
        &format!("stress{}", report.sanctuary.stress_reading),
    )?;
    stakeholders.push(StakeholderModel {
        id: s.id.clone(),
        model,
        belief,
        trust: trust[&s.id],
    });

    let own = config
        .self_model
        .build()?
        .with_preferences(params.self_preferences.clone())?;
    let belief = own.prior().clone();
    Ok(EthicalField {
        self_model: Some(AgentModel { model: own, belief }),
        stakeholders,
        env_target: CategoricalDist::uniform(config.species())?,
        env_weight: params.env_weight,
        horizon: config.horizon,
    })
}

fn projections(
    config: &ScenarioConfig,
    report: &Report,
    allocations: &[Allocation],
) -> Result<BTreeMap<u32, CategoricalDist>, InferError> {
    let mut out = BTreeMap::new();
    for a in allocations {
        let w = a.units(config.budget)[2];
        if let std::collections::btree_map::Entry::Vacant(slot) = out.entry(w) {
            slot.insert(project_species(
                config,
                &report.sanctuary.counts,
                w,
                config.horizon,
            )?);
        }
    }
    Ok(out)
}

/// Each allocation projected onto every agent's local action and the
/// expected species distribution.
pub fn joint_actions(
    scenario: &Scenario,
    report: &Report,
    allocations: &[Allocation],
) -> Result<Vec<JointAction>, ValleyError> {
    let config = &scenario.config;
    let needs = needs(config);
    let ids = config.party_ids();
    let projected = projections(config, report, allocations)?;
    Ok(allocations
        .iter()
        .map(|a| {
            let units = a.units(config.budget);
            let mut local: BTreeMap<String, String> = ids
                .iter()
                .zip(units)
                .map(|(id, u)| (id.clone(), recv(u)))
                .collect();
            let short = units.iter().zip(needs).filter(|(u, n)| *u < n).count();
            local.insert(SELF_ID.to_string(), shortfall_action(short));
            JointAction {
                candidate: realized_actions(config, a),
                local,
                env_projection: Some(projected[&units[2]].clone()),
            }
        })
        .collect())
}

/// Updates beliefs and projections of a field and joint actions built by
/// [`build_field`] and [`joint_actions`] for the same allocations, as if
/// both had been rebuilt from `report`.
pub fn refresh(
    scenario: &Scenario,
    report: &Report,
    allocations: &[Allocation],
    field: &mut EthicalField,
    joint: &mut [JointAction],
) -> Result<(), ValleyError> {
    let config = &scenario.config;
    for s in field.stakeholders.iter_mut() {
        let reading = match report.communities.iter().find(|c| c.id == s.id) {
            Some(c) => format!("d{}", c.deficit_reading),
            None => format!("stress{}", report.sanctuary.stress_reading),
        };
        s.belief = exact_posterior(&s.model, s.model.prior(), &reading)?;
    }
    let projected = projections(config, report, allocations)?;
    for (j, a) in joint.iter_mut().zip(allocations) {
        j.env_projection = Some(projected[&a.units(config.budget)[2]].clone());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::tests::default_scenario;
    use super::super::{initial_state, observe, scenario_allocations, CommunityConfig, CommunityReport};
    use super::*;
    use crate::global::stakeholder_efe;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(noise: Option<f64>) -> (Scenario, Report, Vec<Allocation>) {
        let mut scenario = default_scenario();
        if let Some(eps) = noise {
            for c in &mut scenario.config.communities {
                c.noise = eps;
            }
            scenario.config.sanctuary.noise = eps;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let report = observe(&scenario.config, &initial_state(&scenario.config), &mut rng);
        let allocs = scenario_allocations(&scenario.config).unwrap();
        (scenario, report, allocs)
    }

    #[test]
    fn noiseless_likelihoods_are_identity() {
        let (scenario, report, allocs) = setup(Some(0.0));
        let params = EthicalParams::from_scenario(&scenario);
        let field = build_field(&scenario, &params, &report, &allocs).unwrap();
        for s in &field.stakeholders {
            for (i, row) in s.model.likelihood().iter().enumerate() {
                for (j, &x) in row.iter().enumerate() {
                    assert_eq!(x, if i == j { 1.0 } else { 0.0 });
                }
            }
        }
        assert_eq!(field.env_target, CategoricalDist::uniform(4).unwrap());
    }

    #[test]
    fn symmetric_communities_match() {
        let (mut scenario, mut report, allocs) = setup(None);
        let c1 = scenario.config.communities[0].clone();
        scenario.config.communities[1] = CommunityConfig {
            id: "C2".into(),
            ..c1
        };
        let r1 = report.communities[0].clone();
        report.communities[1] = CommunityReport {
            id: "C2".into(),
            ..r1
        };
        let mirrored: Vec<Allocation> = allocs
            .iter()
            .flat_map(|a| {
                let [x, y, z] = a.shares;
                [a.clone(), Allocation::new("m", [y, x, z]).unwrap()]
            })
            .collect();
        let params = EthicalParams::from_scenario(&scenario);
        let field = build_field(&scenario, &params, &report, &mirrored).unwrap();
        assert_eq!(field.stakeholders[0].model, field.stakeholders[1].model);
        assert_eq!(field.stakeholders[0].belief, field.stakeholders[1].belief);
    }

    #[test]
    fn community_efe_falls_with_share() {
        let (scenario, report, _) = setup(None);
        let need = scenario.config.communities[0].need;
        let budget = scenario.config.budget;
        let share = |u: u32| f64::from(u) / f64::from(budget);
        let allocs = vec![
            Allocation::new("zero", [0.0, share(budget - need), share(need)]).unwrap(),
            Allocation::new(
                "half",
                [share(need / 2), share(budget - need), share(need - need / 2)],
            )
            .unwrap(),
            Allocation::new("full", [share(need), share(budget - need), 0.0]).unwrap(),
        ];
        let params = EthicalParams::from_scenario(&scenario);
        let field = build_field(&scenario, &params, &report, &allocs).unwrap();
        let joint = joint_actions(&scenario, &report, &allocs).unwrap();
        let g: Vec<f64> = joint
            .iter()
            .map(|j| stakeholder_efe(&field, "C1", j).unwrap())
            .collect();
        assert!(g[0] > g[1] && g[1] > g[2], "{g:?}");
    }

    #[test]
    fn refresh_matches_rebuild() {
        let (scenario, report, allocs) = setup(None);
        let params = EthicalParams::from_scenario(&scenario);
        let mut field = build_field(&scenario, &params, &report, &allocs).unwrap();
        let mut joint = joint_actions(&scenario, &report, &allocs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let state = crate::valley::ValleyState {
            day: 4,
            deficits: vec![3, 1],
            species: vec![420, 250, 150, 60],
        };
        let later = observe(&scenario.config, &state, &mut rng);
        refresh(&scenario, &later, &allocs, &mut field, &mut joint).unwrap();
        assert_eq!(field, build_field(&scenario, &params, &later, &allocs).unwrap());
        assert_eq!(joint, joint_actions(&scenario, &later, &allocs).unwrap());
    }

    #[test]
    fn joint_actions_cover_every_agent() {
        let (scenario, report, allocs) = setup(None);
        let joint = joint_actions(&scenario, &report, &allocs).unwrap();
        assert_eq!(joint.len(), 66);
        let a1 = joint.iter().find(|j| j.label() == "A1").unwrap();
        assert_eq!(a1.local["C1"], "recv70");
        assert_eq!(a1.local["W"], "recv0");
        assert_eq!(a1.local["self"], "short1");
        let params = EthicalParams::from_scenario(&scenario);
        let field = build_field(&scenario, &params, &report, &allocs).unwrap();
        assert_eq!(field.agent_ids(), vec!["C1", "C2", "W", "self"]);
    }
}
