//! Global expected free energy and the action-selection layer.
//!
//! A candidate's score sums the trust-weighted expected free energy of every
//! modelled stakeholder, a weighted ecological divergence term and the
//! penalty for the obligations it neglects.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ethica::{self, CandidateAction, EthicaError, Exclusion, Norm, SymbolicState, Verdicts};
use crate::infer::{kl_divergence, CategoricalDist, GenerativeModel, InferError};
use crate::opinion::Opinion;
use crate::par;

/// Key under which the deciding agent's own term is reported.
pub const SELF_ID: &str = "self";

/// Totals closer than this are treated as tied.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GlobalError {
    #[error("unknown stakeholder `{0}`")]
    UnknownStakeholder(String),
    #[error("candidate `{candidate}` has no local action for `{stakeholder}`")]
    UnmappedAction { stakeholder: String, candidate: String },
    #[error("candidate `{0}` has no environment projection")]
    MissingEnvProjection(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error(transparent)]
    Infer(#[from] InferError),
    #[error(transparent)]
    Ethica(#[from] EthicaError),
}

/// A generative model together with the current belief over its states.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentModel {
    pub model: GenerativeModel,
    pub belief: CategoricalDist,
}

/// The deciding agent's model of one stakeholder.
#[derive(Debug, Clone, PartialEq)]
pub struct StakeholderModel {
    pub id: String,
    pub model: GenerativeModel,
    pub belief: CategoricalDist,
    pub trust: Opinion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EthicalField {
    /// Contributes with weight 1 under [`SELF_ID`] when present.
    pub self_model: Option<AgentModel>,
    pub stakeholders: Vec<StakeholderModel>,
    pub env_target: CategoricalDist,
    pub env_weight: f64,
    pub horizon: usize,
}

impl EthicalField {
    pub fn validate(&self) -> Result<(), GlobalError> {
        if self.horizon == 0 {
            return Err(GlobalError::InvalidField("horizon must be at least 1".into()));
        }
        if !(self.env_weight >= 0.0) {
            return Err(GlobalError::InvalidField("env_weight must be nonnegative".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &self.stakeholders {
            if s.belief.len() != s.model.states().len() {
                return Err(GlobalError::InvalidField(format!(
                    "belief of `{}` does not match its state space",
                    s.id
                )));
            }
            if s.id == SELF_ID || !seen.insert(s.id.as_str()) {
                return Err(GlobalError::InvalidField(format!(
                    "duplicate stakeholder `{}`",
                    s.id
                )));
            }
        }
        Ok(())
    }

    fn agent(&self, id: &str) -> Result<(&GenerativeModel, &CategoricalDist, f64), GlobalError> {
        if id == SELF_ID {
            if let Some(me) = &self.self_model {
                return Ok((&me.model, &me.belief, 1.0));
            }
        }
        self.stakeholders
            .iter()
            .find(|s| s.id == id)
            .map(|s| (&s.model, &s.belief, s.trust.confidence_weight()))
            .ok_or_else(|| GlobalError::UnknownStakeholder(id.to_string()))
    }

    /// Ids contributing to the total, in report order.
    pub fn agent_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.stakeholders.iter().map(|s| s.id.clone()).collect();
        if self.self_model.is_some() {
            ids.push(SELF_ID.to_string());
        }
        ids.sort();
        ids
    }
}

/// A joint action with its projection onto each stakeholder's local action
/// space and the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAction {
    pub candidate: CandidateAction,
    pub local: BTreeMap<String, String>,
    /// Predicted species distribution at the end of the horizon.
    pub env_projection: Option<CategoricalDist>,
}

impl JointAction {
    pub fn label(&self) -> &str {
        &self.candidate.label
    }

    fn local_action(&self, id: &str) -> Result<&str, GlobalError> {
        self.local
            .get(id)
            .map(String::as_str)
            .ok_or_else(|| GlobalError::UnmappedAction {
                stakeholder: id.to_string(),
                candidate: self.label().to_string(),
            })
    }
}

/// EFE summed over `horizon` steps, repeating `action` and propagating the
/// belief through the transition model.
pub fn rollout_efe(
    model: &GenerativeModel,
    belief: &CategoricalDist,
    action: &str,
    horizon: usize,
) -> Result<f64, InferError> {
    let a = model.action_index(action)?;
    let mut belief = belief.clone();
    let mut total = 0.0;
    for _ in 0..horizon {
        let (efe, next) = model.efe_by_index(&belief, a)?;
        total += efe.total;
        belief = next;
    }
    Ok(total)
}

/// Unweighted horizon EFE of stakeholder `id` under `action`.
pub fn stakeholder_efe(field: &EthicalField, id: &str, action: &JointAction) -> Result<f64, GlobalError> {
    let (model, belief, _) = field.agent(id)?;
    let local = action.local_action(id)?;
    Ok(rollout_efe(model, belief, local, field.horizon)?)
}

/// `KL(projected ‖ target)`; with a uniform target this is `log K − H(projected)`.
pub fn env_free_energy(projected: &CategoricalDist, target: &CategoricalDist) -> Result<f64, GlobalError> {
    if target.probs().iter().any(|&t| t <= 0.0) {
        return Err(GlobalError::InvalidField(
            "environment target must be strictly positive".into(),
        ));
    }
    Ok(kl_divergence(projected, target)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StakeholderTerm {
    pub raw: f64,
    pub weight: f64,
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalBreakdown {
    pub terms: BTreeMap<String, StakeholderTerm>,
    pub env_divergence: f64,
    pub env_term: f64,
    pub penalty: f64,
    pub total: f64,
}

impl GlobalBreakdown {
    /// Re-sums the parts; equals `total` up to rounding.
    pub fn reconstructed_total(&self) -> f64 {
        self.terms.values().map(|t| t.weighted).sum::<f64>() + self.env_term + self.penalty
    }
}

fn assemble(
    field: &EthicalField,
    ids: &[String],
    action: &JointAction,
    penalty: f64,
    raw_efe: impl Fn(usize, &str) -> Result<f64, GlobalError>,
) -> Result<GlobalBreakdown, GlobalError> {
    let mut terms = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        let (_, _, weight) = field.agent(id)?;
        let raw = raw_efe(i, id)?;
        terms.insert(
            id.clone(),
            StakeholderTerm {
                raw,
                weight,
                weighted: weight * raw,
            },
        );
    }
    let env_divergence = if field.env_weight > 0.0 {
        let projected = action
            .env_projection
            .as_ref()
            .ok_or_else(|| GlobalError::MissingEnvProjection(action.label().to_string()))?;
        env_free_energy(projected, &field.env_target)?
    } else {
        match &action.env_projection {
            Some(p) => env_free_energy(p, &field.env_target)?,
            None => 0.0,
        }
    };
    let env_term = field.env_weight * env_divergence;
    let mut breakdown = GlobalBreakdown {
        terms,
        env_divergence,
        env_term,
        penalty,
        total: 0.0,
    };
    breakdown.total = breakdown.reconstructed_total();
    Ok(breakdown)
}

/// Global expected free energy of one candidate.
pub fn global_efe(
    field: &EthicalField,
    action: &JointAction,
    penalties: &BTreeMap<String, f64>,
) -> Result<GlobalBreakdown, GlobalError> {
    field.validate()?;
    let penalty = penalties.get(action.label()).copied().unwrap_or(0.0);
    assemble(field, &field.agent_ids(), action, penalty, |_, id| {
        stakeholder_efe(field, id, action)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEvaluation {
    pub label: String,
    pub breakdown: GlobalBreakdown,
}

/// Full audit of one decision cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub day: u32,
    pub evaluations: Vec<CandidateEvaluation>,
    pub verdicts: Verdicts,
    pub exclusions: Vec<Exclusion>,
    pub chosen: String,
    pub tie_break: Option<String>,
}

impl DecisionRecord {
    pub fn chosen_breakdown(&self) -> &GlobalBreakdown {
        &self
            .evaluations
            .iter()
            .find(|e| e.label == self.chosen)
            .expect("chosen candidate is evaluated")
            .breakdown
    }
}

/// Thresholds for the reasoning layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Prohibition exclusion threshold.
    pub tau: f64,
    /// Norm firing threshold.
    pub theta: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tau: ethica::DEFAULT_TAU,
            theta: ethica::DEFAULT_THETA,
        }
    }
}

/// One perceive-filter-select pass: verdicts, filtering, scoring every
/// allowed candidate, then the argmin with lexicographic tie-breaking.
pub fn select_action(
    field: &EthicalField,
    candidates: &[JointAction],
    norms: &[Norm],
    state: &SymbolicState,
    thresholds: Thresholds,
    day: u32,
) -> Result<DecisionRecord, GlobalError> {
    if candidates.is_empty() {
        return Err(EthicaError::EmptyCandidateSet.into());
    }
    field.validate()?;
    let universe: BTreeSet<String> = candidates
        .iter()
        .flat_map(|c| c.candidate.realizes.iter())
        .chain(norms.iter().map(|n| &n.action))
        .cloned()
        .collect();
    let verdicts = ethica::active_verdicts(norms, state, thresholds.theta, &universe)?;
    let filtered =
        ethica::filter_actions(candidates.iter().map(|c| &c.candidate), &verdicts, thresholds.tau)?;

    let allowed_labels: BTreeSet<&str> = filtered.allowed.iter().map(String::as_str).collect();
    let allowed: Vec<&JointAction> = candidates
        .iter()
        .filter(|c| allowed_labels.contains(c.label()))
        .collect();

    // Many candidates share a local action; score each (agent, action) pair once.
    let ids = field.agent_ids();
    let mut pairs: BTreeSet<(usize, &str)> = BTreeSet::new();
    for c in &allowed {
        for (i, id) in ids.iter().enumerate() {
            pairs.insert((i, c.local_action(id)?));
        }
    }
    let pairs: Vec<(usize, &str)> = pairs.into_iter().collect();
    let scored = par::map(&pairs, |&(i, local)| -> Result<f64, GlobalError> {
        let (model, belief, _) = field.agent(&ids[i])?;
        Ok(rollout_efe(model, belief, local, field.horizon)?)
    });
    let mut table: BTreeMap<(usize, &str), f64> = BTreeMap::new();
    for (pair, value) in pairs.into_iter().zip(scored) {
        table.insert(pair, value?);
    }

    let evaluations = par::map(&allowed, |c| -> Result<CandidateEvaluation, GlobalError> {
        let penalty = filtered.penalties.get(c.label()).copied().unwrap_or(0.0);
        let breakdown = assemble(field, &ids, c, penalty, |i, id| {
            Ok(table[&(i, c.local_action(id)?)])
        })?;
        Ok(CandidateEvaluation {
            label: c.label().to_string(),
            breakdown,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let best = evaluations
        .iter()
        .map(|e| e.breakdown.total)
        .fold(f64::INFINITY, f64::min);
    let mut tied: Vec<&str> = evaluations
        .iter()
        .filter(|e| e.breakdown.total - best <= TIE_TOL * best.abs().max(1.0))
        .map(|e| e.label.as_str())
        .collect();
    tied.sort_unstable();
    let chosen = tied[0].to_string();
    let tie_break =
        (tied.len() > 1).then(|| format!("tie between {} broken lexicographically", tied.join(", ")));

    Ok(DecisionRecord {
        day,
        evaluations,
        verdicts,
        exclusions: filtered.exclusions,
        chosen,
        tie_break,
    })
}
