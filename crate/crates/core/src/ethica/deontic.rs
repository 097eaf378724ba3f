use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::formula::Formula;
use super::EthicaError;
use crate::opinion::Opinion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Obligation,
    Permission,
    Prohibition,
}

impl Modality {
    pub fn keyword(self) -> &'static str {
        match self {
            Modality::Obligation => "obligate",
            Modality::Permission => "permit",
            Modality::Prohibition => "forbid",
        }
    }
}

/// A conditional deontic rule: when `condition` holds, `modality` applies to `action`.
#[derive(Debug, Clone, PartialEq)]
pub struct Norm {
    pub id: String,
    pub condition: Formula,
    pub modality: Modality,
    pub action: String,
    /// Nats charged when a fired obligation is neglected; also the
    /// conflict-resolution weight.
    pub weight: f64,
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "norm {} weight {}: when {} then {} {}",
            self.id,
            self.weight,
            self.condition,
            self.modality.keyword(),
            self.action
        )
    }
}

/// Graded beliefs the evaluator reads from.
///
/// `atoms` is the deciding agent's own view; `frames` hold each stakeholder's
/// modelled view and `trust` the opinion held about each stakeholder.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SymbolicState {
    pub atoms: BTreeMap<String, Opinion>,
    pub frames: BTreeMap<String, BTreeMap<String, Opinion>>,
    pub trust: BTreeMap<String, Opinion>,
}

fn eval_in(
    f: &Formula,
    frame: &BTreeMap<String, Opinion>,
    state: &SymbolicState,
) -> Result<Opinion, EthicaError> {
    Ok(match f {
        Formula::True => Opinion::certain_true(),
        Formula::False => Opinion::certain_false(),
        Formula::Atom(name) => *frame
            .get(name)
            .ok_or_else(|| EthicaError::UnknownAtom(name.clone()))?,
        Formula::Not(x) => eval_in(x, frame, state)?.complement(),
        Formula::And(x, y) => eval_in(x, frame, state)?.multiply(&eval_in(y, frame, state)?)?,
        Formula::Or(x, y) => eval_in(x, frame, state)?.comultiply(&eval_in(y, frame, state)?)?,
        Formula::Implies(x, y) => eval_in(x, frame, state)?
            .complement()
            .comultiply(&eval_in(y, frame, state)?)?,
        Formula::From(id, x) => {
            let inner = state
                .frames
                .get(id)
                .ok_or_else(|| EthicaError::UnknownStakeholder(id.clone()))?;
            let trust = state
                .trust
                .get(id)
                .ok_or_else(|| EthicaError::UnknownStakeholder(id.clone()))?;
            trust.discount(&eval_in(x, inner, state)?)
        }
    })
}

/// Evaluates `f` to an opinion against the agent's own atom valuations.
pub fn eval_formula(f: &Formula, state: &SymbolicState) -> Result<Opinion, EthicaError> {
    eval_in(f, &state.atoms, state)
}

/// Crisp gate: the projected probability reaches `theta`.
pub fn holds(x: &Opinion, theta: f64) -> bool {
    x.expected_probability() >= theta
}

/// Probability that the norm's condition obtains in `state`.
pub fn violation_probability(norm: &Norm, state: &SymbolicState) -> Result<f64, EthicaError> {
    Ok(eval_formula(&norm.condition, state)?.expected_probability())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiredNorm {
    pub id: String,
    pub modality: Modality,
    pub action: String,
    pub weight: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prohibition {
    pub opinion: Opinion,
    pub weight: f64,
}

impl Prohibition {
    pub fn probability(&self) -> f64 {
        self.opinion.expected_probability()
    }
}

/// An action that was both obligated and forbidden (or permitted and forbidden).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub action: String,
    pub obligation_weight: f64,
    pub prohibition_weight: f64,
    pub resolved_to: Modality,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub obligated: BTreeMap<String, f64>,
    pub forbidden: BTreeMap<String, Prohibition>,
    pub permitted: BTreeSet<String>,
    pub fired: Vec<FiredNorm>,
    pub conflicts: Vec<Conflict>,
}

fn check_threshold(t: f64) -> Result<(), EthicaError> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(EthicaError::InvalidThreshold(t))
    }
}

/// Fires every norm whose condition holds at `theta` and resolves the result
/// into obligations, prohibitions and permissions over `candidates`.
///
/// Unlisted actions are permitted. Obligations imply permissions; an action
/// both obligated and forbidden goes to the side with the larger summed
/// weight, prohibition on ties.
pub fn active_verdicts(
    norms: &[Norm],
    state: &SymbolicState,
    theta: f64,
    candidates: &BTreeSet<String>,
) -> Result<Verdicts, EthicaError> {
    if candidates.is_empty() {
        return Err(EthicaError::EmptyCandidateSet);
    }
    check_threshold(theta)?;
    let mut v = Verdicts::default();
    let mut explicit_permits = BTreeSet::new();
    for norm in norms {
        let opinion = eval_formula(&norm.condition, state)?;
        if !holds(&opinion, theta) {
            continue;
        }
        v.fired.push(FiredNorm {
            id: norm.id.clone(),
            modality: norm.modality,
            action: norm.action.clone(),
            weight: norm.weight,
            probability: opinion.expected_probability(),
        });
        match norm.modality {
            Modality::Obligation => {
                *v.obligated.entry(norm.action.clone()).or_insert(0.0) += norm.weight;
            }
            Modality::Permission => {
                explicit_permits.insert(norm.action.clone());
            }
            Modality::Prohibition => {
                let entry = v
                    .forbidden
                    .entry(norm.action.clone())
                    .or_insert(Prohibition { opinion, weight: 0.0 });
                entry.weight += norm.weight;
                if opinion.expected_probability() > entry.opinion.expected_probability() {
                    entry.opinion = opinion;
                }
            }
        }
    }

    let contested: Vec<String> = v
        .obligated
        .keys()
        .filter(|a| v.forbidden.contains_key(*a))
        .cloned()
        .collect();
    for action in contested {
        let ow = v.obligated[&action];
        let pw = v.forbidden[&action].weight;
        let resolved_to = if ow > pw {
            v.forbidden.remove(&action);
            Modality::Obligation
        } else {
            v.obligated.remove(&action);
            Modality::Prohibition
        };
        v.conflicts.push(Conflict {
            action,
            obligation_weight: ow,
            prohibition_weight: pw,
            resolved_to,
        });
    }
    for action in explicit_permits.iter().filter(|a| v.forbidden.contains_key(*a)) {
        v.conflicts.push(Conflict {
            action: action.clone(),
            obligation_weight: 0.0,
            prohibition_weight: v.forbidden[action].weight,
            resolved_to: Modality::Prohibition,
        });
    }

    v.permitted = candidates
        .iter()
        .chain(explicit_permits.iter())
        .filter(|a| !v.forbidden.contains_key(*a))
        .cloned()
        .collect();
    // O a -> P a
    v.permitted.extend(v.obligated.keys().cloned());
    debug_assert!(v.obligated.keys().all(|a| v.permitted.contains(a)));
    debug_assert!(v.forbidden.keys().all(|a| !v.permitted.contains(a)));
    Ok(v)
}

/// A candidate the selection layer may choose, with the primitive action
/// labels it realizes. A plain label realizes only itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateAction {
    pub label: String,
    pub realizes: BTreeSet<String>,
}

impl CandidateAction {
    pub fn new(label: impl Into<String>, realizes: impl IntoIterator<Item = String>) -> Self {
        Self {
            label: label.into(),
            realizes: realizes.into_iter().collect(),
        }
    }

    pub fn simple(label: impl Into<String>) -> Self {
        let label = label.into();
        Self {
            realizes: [label.clone()].into(),
            label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub candidate: String,
    pub forbidden_action: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub allowed: Vec<String>,
    pub penalties: BTreeMap<String, f64>,
    pub exclusions: Vec<Exclusion>,
}

/// Drops candidates realizing a prohibition at probability ≥ `tau` and prices
/// every candidate by the obligations it neglects.
pub fn filter_actions<'a>(
    candidates: impl IntoIterator<Item = &'a CandidateAction>,
    verdicts: &Verdicts,
    tau: f64,
) -> Result<FilterOutcome, EthicaError> {
    check_threshold(tau)?;
    let mut allowed = Vec::new();
    let mut penalties = BTreeMap::new();
    let mut exclusions = Vec::new();
    for c in candidates {
        let blocking = c.realizes.iter().find_map(|a| {
            verdicts
                .forbidden
                .get(a)
                .map(|p| (a, p.probability()))
                .filter(|(_, p)| *p >= tau)
        });
        if let Some((action, probability)) = blocking {
            exclusions.push(Exclusion {
                candidate: c.label.clone(),
                forbidden_action: action.clone(),
                probability,
            });
        } else {
            allowed.push(c.label.clone());
        }
        let penalty: f64 = verdicts
            .obligated
            .iter()
            .filter(|(a, _)| !c.realizes.contains(*a))
            .fold(0.0, |acc, (_, w)| acc + w);
        penalties.insert(c.label.clone(), penalty);
    }
    if allowed.is_empty() {
        return Err(EthicaError::NoPermittedAction {
            excluded: exclusions.len(),
        });
    }
    Ok(FilterOutcome {
        allowed,
        penalties,
        exclusions,
    })
}

/// Fired obligations that `candidate` leaves unmet.
pub fn neglected_obligations<'a>(candidate: &CandidateAction, verdicts: &'a Verdicts) -> Vec<&'a FiredNorm> {
    verdicts
        .fired
        .iter()
        .filter(|n| n.modality == Modality::Obligation)
        .filter(|n| verdicts.obligated.contains_key(&n.action))
        .filter(|n| !candidate.realizes.contains(&n.action))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ethica::parse_norms;
    use approx::assert_abs_diff_eq;

    fn op(b: f64, d: f64, u: f64) -> Opinion {
        Opinion::new(b, d, u, 0.5).unwrap()
    }

    fn labels(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn state_with(atoms: &[(&str, Opinion)]) -> SymbolicState {
        SymbolicState {
            atoms: atoms.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn eval_examples() {
        let s = state_with(&[("x", op(1.0, 0.0, 0.0)), ("y", op(1.0, 0.0, 0.0))]);
        assert_eq!(eval_formula(&Formula::atom("x"), &s).unwrap(), op(1.0, 0.0, 0.0));
        let both = eval_formula(&Formula::and(Formula::atom("x"), Formula::atom("y")), &s).unwrap();
        assert!(both.approx_eq(&Opinion::new(1.0, 0.0, 0.0, 0.25).unwrap(), 1e-12));

        let mut s = SymbolicState::default();
        s.frames
            .insert("C2".into(), [("phi".to_string(), op(1.0, 0.0, 0.0))].into());
        s.trust.insert("C2".into(), op(0.5, 0.3, 0.2));
        let out = eval_formula(&Formula::from("C2", Formula::atom("phi")), &s).unwrap();
        // b = 0.5·1, d = 0.5·0, u = 0.3 + 0.2 + 0.5·0
        assert!(out.approx_eq(&op(0.5, 0.0, 0.5), 1e-12), "{out}");
    }

    #[test]
    fn eval_errors() {
        let s = SymbolicState::default();
        assert_eq!(
            eval_formula(&Formula::atom("ghost"), &s),
            Err(EthicaError::UnknownAtom("ghost".into()))
        );
        assert_eq!(
            eval_formula(&Formula::from("C9", Formula::True), &s),
            Err(EthicaError::UnknownStakeholder("C9".into()))
        );
    }

    #[test]
    fn holds_examples() {
        assert!(holds(&op(1.0, 0.0, 0.0), 0.95));
        assert!(!holds(&Opinion::vacuous(0.5), 0.95));
        assert!(holds(&op(0.8, 0.0, 0.2), 0.9));
    }

    #[test]
    fn obligation_implies_permission() {
        let norms = parse_norms("norm o weight 1.5: when true then obligate a1").unwrap();
        let v = active_verdicts(&norms, &SymbolicState::default(), 0.5, &labels(&["a1", "a2"])).unwrap();
        assert_eq!(v.obligated, [("a1".to_string(), 1.5)].into());
        assert_eq!(v.permitted, labels(&["a1", "a2"]));
        assert!(v.forbidden.is_empty());
    }

    #[test]
    fn direct_prohibition() {
        let norms = parse_norms("norm f weight 1: when true then forbid a2").unwrap();
        let v = active_verdicts(&norms, &SymbolicState::default(), 0.5, &labels(&["a1", "a2"])).unwrap();
        assert_eq!(
            v.forbidden.keys().cloned().collect::<BTreeSet<_>>(),
            labels(&["a2"])
        );
        assert_eq!(v.permitted, labels(&["a1"]));
    }

    #[test]
    fn tie_goes_to_prohibition() {
        let norms = parse_norms(
            "norm o weight 1.0: when true then obligate a1\nnorm f weight 1.0: when true then forbid a1",
        )
        .unwrap();
        let v = active_verdicts(&norms, &SymbolicState::default(), 0.5, &labels(&["a1", "a2"])).unwrap();
        assert!(v.forbidden.contains_key("a1"));
        assert!(v.obligated.is_empty());
        assert_eq!(v.conflicts.len(), 1);
        assert_eq!(v.conflicts[0].resolved_to, Modality::Prohibition);
        assert_eq!(v.permitted, labels(&["a2"]));
    }

    #[test]
    fn heavier_obligation_wins_conflict() {
        let norms = parse_norms(
            "norm o weight 3.0: when true then obligate a1\nnorm f weight 1.0: when true then forbid a1",
        )
        .unwrap();
        let v = active_verdicts(&norms, &SymbolicState::default(), 0.5, &labels(&["a1"])).unwrap();
        assert_eq!(v.obligated["a1"], 3.0);
        assert!(v.forbidden.is_empty());
        assert_eq!(v.conflicts[0].resolved_to, Modality::Obligation);
    }

    #[test]
    fn duplicate_obligations_sum() {
        let norms = parse_norms(
            "norm o1 weight 1.0: when true then obligate a1\nnorm o2 weight 0.5: when true then obligate a1",
        )
        .unwrap();
        let v = active_verdicts(&norms, &SymbolicState::default(), 0.5, &labels(&["a1"])).unwrap();
        assert_eq!(v.obligated["a1"], 1.5);
        assert_eq!(v.fired.len(), 2);
    }

    #[test]
    fn empty_candidates_rejected() {
        assert_eq!(
            active_verdicts(&[], &SymbolicState::default(), 0.5, &BTreeSet::new()),
            Err(EthicaError::EmptyCandidateSet)
        );
    }

    #[test]
    fn violation_probability_examples() {
        let norms = parse_norms("norm f weight 1: when x then forbid a").unwrap();
        for (o, expected) in [
            (op(1.0, 0.0, 0.0), 1.0),
            (op(0.0, 1.0, 0.0), 0.0),
            (op(0.375, 0.375, 0.25), 0.5),
        ] {
            let s = state_with(&[("x", o)]);
            assert_abs_diff_eq!(
                violation_probability(&norms[0], &s).unwrap(),
                expected,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn filter_without_fired_norms() {
        let cands = vec![CandidateAction::simple("a1"), CandidateAction::simple("a2")];
        let out = filter_actions(&cands, &Verdicts::default(), 0.8).unwrap();
        assert_eq!(out.allowed, vec!["a1", "a2"]);
        assert!(out.penalties.values().all(|p| *p == 0.0));
    }

    #[test]
    fn filter_prices_neglected_obligations() {
        let norms =
            parse_norms("norm n1 weight 2.0: when not has_water(C1) then obligate give_water(C1)").unwrap();
        let s = state_with(&[("has_water(C1)", op(0.0, 1.0, 0.0))]);
        let cands = vec![
            CandidateAction::new("A1", ["give_water(C1)".to_string()]),
            CandidateAction::new("A2", ["give_water(C2)".to_string()]),
        ];
        let universe = labels(&["give_water(C1)", "give_water(C2)"]);
        let v = active_verdicts(&norms, &s, 0.5, &universe).unwrap();
        let out = filter_actions(&cands, &v, 0.8).unwrap();
        assert_eq!(out.penalties["A1"], 0.0);
        assert_eq!(out.penalties["A2"], 2.0);
        let neglected = neglected_obligations(&cands[1], &v);
        assert_eq!(neglected.len(), 1);
        assert_eq!(neglected[0].id, "n1");
    }

    #[test]
    fn filter_dead_end() {
        let norms = parse_norms(
            "norm f1 weight 1: when true then forbid a1\nnorm f2 weight 1: when true then forbid a2",
        )
        .unwrap();
        let v = active_verdicts(&norms, &SymbolicState::default(), 0.5, &labels(&["a1", "a2"])).unwrap();
        let cands = vec![CandidateAction::simple("a1"), CandidateAction::simple("a2")];
        assert_eq!(
            filter_actions(&cands, &v, 0.8),
            Err(EthicaError::NoPermittedAction { excluded: 2 })
        );
    }

    #[test]
    fn prohibition_below_tau_does_not_exclude() {
        let norms = parse_norms("norm f weight 1: when x then forbid a1").unwrap();
        let s = state_with(&[("x", op(0.5, 0.0, 0.5))]);
        let v = active_verdicts(&norms, &s, 0.5, &labels(&["a1"])).unwrap();
        let cands = vec![CandidateAction::simple("a1")];
        assert!(filter_actions(&cands, &v, 0.8).is_ok());
        assert!(filter_actions(&cands, &v, 0.75).is_err());
    }
}
