//! Discrete generative models and exact inference.
//!
//! Everything here works on small tabular models: a likelihood matrix
//! `P(o|s)`, one transition matrix `P(s'|s,a)` per action, log-preferences
//! `C(o)` over observations and a prior over states. Quantities are in nats.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Probabilities below this are treated as zero in `p·log p` terms.
pub const PROB_EPS: f64 = 1e-12;

/// Tolerance on the total mass of a distribution.
pub const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferError {
    #[error("distribution has empty support")]
    EmptySupport,
    #[error("invalid probability {value} at index {index}")]
    InvalidProbability { index: usize, value: f64 },
    #[error("distribution sums to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("support mismatch: {left} vs {right}")]
    SupportMismatch { left: usize, right: usize },
    #[error("absolute continuity violated at index {index}")]
    AbsoluteContinuityViolation { index: usize },
    #[error("observation has zero evidence under the model")]
    ZeroEvidence,
    #[error("unknown observation `{0}`")]
    UnknownObservation(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// A probability vector over a finite support.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct CategoricalDist {
    probs: Vec<f64>,
}

impl CategoricalDist {
    pub fn new(probs: Vec<f64>) -> Result<Self, InferError> {
        if probs.is_empty() {
            return Err(InferError::EmptySupport);
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(InferError::InvalidProbability { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(InferError::NotNormalized { sum });
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, InferError> {
        if weights.is_empty() {
            return Err(InferError::EmptySupport);
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(InferError::InvalidProbability { index, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(InferError::ZeroEvidence);
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn uniform(n: usize) -> Result<Self, InferError> {
        if n == 0 {
            return Err(InferError::EmptySupport);
        }
        Ok(Self {
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn point_mass(n: usize, index: usize) -> Result<Self, InferError> {
        if index >= n {
            return Err(InferError::EmptySupport);
        }
        let mut probs = vec![0.0; n];
        probs[index] = 1.0;
        Ok(Self { probs })
    }

    /// Softmax of arbitrary finite reals; always strictly positive.
    pub fn softmax(logits: &[f64]) -> Result<Self, InferError> {
        if logits.is_empty() {
            return Err(InferError::EmptySupport);
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(InferError::InvalidModel("non-finite preference".into()));
        }
        let exps: Vec<f64> = logits.iter().map(|c| (c - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        Ok(Self {
            probs: exps.into_iter().map(|e| e / sum).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.probs[index]
    }
}

impl<'de> Deserialize<'de> for CategoricalDist {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let probs = Vec::<f64>::deserialize(deserializer)?;
        CategoricalDist::new(probs).map_err(serde::de::Error::custom)
    }
}

fn plogp_ratio(p: f64, q: f64) -> f64 {
    if p < PROB_EPS {
        0.0
    } else {
        p * (p / q).ln()
    }
}

/// `KL(p ‖ q)` in nats.
pub fn kl_divergence(p: &CategoricalDist, q: &CategoricalDist) -> Result<f64, InferError> {
    if p.len() != q.len() {
        return Err(InferError::SupportMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut total = 0.0;
    for (index, (&pi, &qi)) in p.probs.iter().zip(&q.probs).enumerate() {
        if pi < PROB_EPS {
            continue;
        }
        if qi <= 0.0 {
            return Err(InferError::AbsoluteContinuityViolation { index });
        }
        total += plogp_ratio(pi, qi);
    }
    // rounding can leave a tiny negative residue when p == q
    Ok(total.max(0.0))
}

/// Shannon entropy in nats.
pub fn entropy(p: &CategoricalDist) -> f64 {
    entropy_of(&p.probs)
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p >= PROB_EPS)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Risk, ambiguity and their sum for one action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfeBreakdown {
    pub risk: f64,
    pub ambiguity: f64,
    pub total: f64,
}

/// Tabular generative model of one agent's world.
///
/// `likelihood[s][o] = P(o|s)` and `transition[a][s][s'] = P(s'|s,a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerativeModel {
    states: Vec<String>,
    observations: Vec<String>,
    actions: Vec<String>,
    likelihood: Vec<Vec<f64>>,
    transition: Vec<Vec<Vec<f64>>>,
    preferences: Vec<f64>,
    prior: CategoricalDist,
}

fn check_row(row: &[f64], expected_len: usize, what: impl Fn() -> String) -> Result<(), InferError> {
    if row.len() != expected_len {
        return Err(InferError::InvalidModel(format!(
            "{} has {} entries, expected {}",
            what(),
            row.len(),
            expected_len
        )));
    }
    if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
        return Err(InferError::InvalidModel(format!(
            "{} has an entry outside [0,1]",
            what()
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(InferError::InvalidModel(format!("{} sums to {sum}", what())));
    }
    Ok(())
}

impl GenerativeModel {
    pub fn new(
        states: Vec<String>,
        observations: Vec<String>,
        actions: Vec<String>,
        likelihood: Vec<Vec<f64>>,
        transition: Vec<Vec<Vec<f64>>>,
        preferences: Vec<f64>,
        prior: CategoricalDist,
    ) -> Result<Self, InferError> {
        let model = Self {
            states,
            observations,
            actions,
            likelihood,
            transition,
            preferences,
            prior,
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks every structural invariant, naming the first offending row.
    pub fn validate(&self) -> Result<(), InferError> {
        let (ns, no) = (self.states.len(), self.observations.len());
        if ns == 0 || no == 0 || self.actions.is_empty() {
            return Err(InferError::InvalidModel(
                "empty state, observation or action set".into(),
            ));
        }
        if self.likelihood.len() != ns {
            return Err(InferError::InvalidModel(format!(
                "likelihood has {} rows, expected {ns}",
                self.likelihood.len()
            )));
        }
        for (s, row) in self.likelihood.iter().enumerate() {
            check_row(row, no, || {
                format!("likelihood row for state `{}`", self.states[s])
            })?;
        }
        if self.transition.len() != self.actions.len() {
            return Err(InferError::InvalidModel(format!(
                "transition has {} action slices, expected {}",
                self.transition.len(),
                self.actions.len()
            )));
        }
        for (a, slice) in self.transition.iter().enumerate() {
            if slice.len() != ns {
                return Err(InferError::InvalidModel(format!(
                    "transition for action `{}` has {} rows, expected {ns}",
                    self.actions[a],
                    slice.len()
                )));
            }
            for (s, row) in slice.iter().enumerate() {
                check_row(row, ns, || {
                    format!(
                        "transition row for state `{}` under action `{}`",
                        self.states[s], self.actions[a]
                    )
                })?;
            }
        }
        if self.preferences.len() != no {
            return Err(InferError::InvalidModel(format!(
                "preferences have {} entries, expected {no}",
                self.preferences.len()
            )));
        }
        if self.preferences.iter().any(|c| !c.is_finite()) {
            return Err(InferError::InvalidModel("non-finite preference".into()));
        }
        if self.prior.len() != ns {
            return Err(InferError::InvalidModel(
                "prior support does not match states".into(),
            ));
        }
        Ok(())
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn observations(&self) -> &[String] {
        &self.observations
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn likelihood(&self) -> &[Vec<f64>] {
        &self.likelihood
    }

    pub fn transition(&self, action: usize) -> &[Vec<f64>] {
        &self.transition[action]
    }

    pub fn preferences(&self) -> &[f64] {
        &self.preferences
    }

    pub fn prior(&self) -> &CategoricalDist {
        &self.prior
    }

    pub fn with_preferences(mut self, preferences: Vec<f64>) -> Result<Self, InferError> {
        self.preferences = preferences;
        self.validate()?;
        Ok(self)
    }

    pub fn observation_index(&self, label: &str) -> Result<usize, InferError> {
        self.observations
            .iter()
            .position(|o| o == label)
            .ok_or_else(|| InferError::UnknownObservation(label.to_string()))
    }

    pub fn action_index(&self, label: &str) -> Result<usize, InferError> {
        self.actions
            .iter()
            .position(|a| a == label)
            .ok_or_else(|| InferError::UnknownAction(label.to_string()))
    }

    /// `σ(C)`: the preferred outcome distribution.
    pub fn preferred_outcomes(&self) -> CategoricalDist {
        CategoricalDist::softmax(&self.preferences).expect("validated preferences")
    }

    /// `Q(s'|a) = Σ_s P(s'|s,a)·belief(s)`.
    pub fn predict_state_dist(
        &self,
        belief: &CategoricalDist,
        action: &str,
    ) -> Result<CategoricalDist, InferError> {
        let a = self.action_index(action)?;
        self.predict_state_by_index(belief, a)
    }

    pub(crate) fn predict_state_by_index(
        &self,
        belief: &CategoricalDist,
        action: usize,
    ) -> Result<CategoricalDist, InferError> {
        let ns = self.states.len();
        if belief.len() != ns {
            return Err(InferError::SupportMismatch {
                left: belief.len(),
                right: ns,
            });
        }
        let mut next = vec![0.0; ns];
        for (row, &bs) in self.transition[action].iter().zip(belief.probs()) {
            if bs == 0.0 {
                continue;
            }
            for (n, &p) in next.iter_mut().zip(row) {
                *n += p * bs;
            }
        }
        renormalized(next)
    }

    fn outcomes_from_states(&self, states: &CategoricalDist) -> Result<CategoricalDist, InferError> {
        let mut out = vec![0.0; self.observations.len()];
        for (row, &qs) in self.likelihood.iter().zip(states.probs()) {
            if qs == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(row) {
                *o += p * qs;
            }
        }
        renormalized(out)
    }

    pub(crate) fn efe_by_index(
        &self,
        belief: &CategoricalDist,
        action: usize,
    ) -> Result<(EfeBreakdown, CategoricalDist), InferError> {
        let next_states = self.predict_state_by_index(belief, action)?;
        let outcomes = self.outcomes_from_states(&next_states)?;
        let risk = kl_divergence(&outcomes, &self.preferred_outcomes())?;
        let ambiguity: f64 = self
            .likelihood
            .iter()
            .zip(next_states.probs())
            .map(|(row, &qs)| qs * entropy_of(row))
            .sum();
        Ok((
            EfeBreakdown {
                risk,
                ambiguity,
                total: risk + ambiguity,
            },
            next_states,
        ))
    }
}

// Accumulated sums drift by a few ulps; pull them back onto the simplex.
fn renormalized(mut probs: Vec<f64>) -> Result<CategoricalDist, InferError> {
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(InferError::NotNormalized { sum });
    }
    for p in probs.iter_mut() {
        *p = (*p / sum).clamp(0.0, 1.0);
    }
    Ok(CategoricalDist { probs })
}

fn joint_for(model: &GenerativeModel, prior: &CategoricalDist, obs: &str) -> Result<Vec<f64>, InferError> {
    let o = model.observation_index(obs)?;
    if prior.len() != model.states.len() {
        return Err(InferError::SupportMismatch {
            left: prior.len(),
            right: model.states.len(),
        });
    }
    Ok(model
        .likelihood
        .iter()
        .zip(prior.probs())
        .map(|(row, &p)| row[o] * p)
        .collect())
}

/// `posterior(s) ∝ P(obs|s)·prior(s)`.
pub fn exact_posterior(
    model: &GenerativeModel,
    prior: &CategoricalDist,
    obs: &str,
) -> Result<CategoricalDist, InferError> {
    let joint = joint_for(model, prior, obs)?;
    let evidence: f64 = joint.iter().sum();
    if evidence <= 0.0 {
        return Err(InferError::ZeroEvidence);
    }
    Ok(CategoricalDist {
        probs: joint.into_iter().map(|j| j / evidence).collect(),
    })
}

/// `F = Σ_s q(s)[log q(s) − log P(obs, s)]`.
pub fn variational_free_energy(
    model: &GenerativeModel,
    q: &CategoricalDist,
    prior: &CategoricalDist,
    obs: &str,
) -> Result<f64, InferError> {
    let joint = joint_for(model, prior, obs)?;
    if q.len() != joint.len() {
        return Err(InferError::SupportMismatch {
            left: q.len(),
            right: joint.len(),
        });
    }
    if joint.iter().sum::<f64>() <= 0.0 {
        return Err(InferError::ZeroEvidence);
    }
    let mut total = 0.0;
    for (index, (&qs, &js)) in q.probs().iter().zip(&joint).enumerate() {
        if qs < PROB_EPS {
            continue;
        }
        if js <= 0.0 {
            return Err(InferError::AbsoluteContinuityViolation { index });
        }
        total += qs * (qs.ln() - js.ln());
    }
    Ok(total)
}

/// `Q(o'|a) = Σ_{s'} P(o'|s')·Σ_s P(s'|s,a)·belief(s)`.
pub fn predict_outcome_dist(
    model: &GenerativeModel,
    belief: &CategoricalDist,
    action: &str,
) -> Result<CategoricalDist, InferError> {
    let next = model.predict_state_dist(belief, action)?;
    model.outcomes_from_states(&next)
}

/// Single-step expected free energy of `action`.
///
/// Risk is `KL(Q(o'|a) ‖ σ(C))`; ambiguity is the expected entropy of the
/// likelihood row under the predicted states.
pub fn expected_free_energy(
    model: &GenerativeModel,
    belief: &CategoricalDist,
    action: &str,
) -> Result<EfeBreakdown, InferError> {
    let a = model.action_index(action)?;
    model.efe_by_index(belief, a).map(|(efe, _)| efe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn labels(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{}", i + 1)).collect()
    }

    fn dist(p: &[f64]) -> CategoricalDist {
        CategoricalDist::new(p.to_vec()).unwrap()
    }

    /// Two states, two observations, one "stay" action.
    fn coin_model(likelihood: Vec<Vec<f64>>) -> GenerativeModel {
        GenerativeModel::new(
            labels("s", 2),
            labels("o", 2),
            vec!["stay".into()],
            likelihood,
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
            vec![0.0, 0.0],
            CategoricalDist::uniform(2).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn categorical_rejects_bad_input() {
        assert_eq!(CategoricalDist::new(vec![]), Err(InferError::EmptySupport));
        assert!(matches!(
            CategoricalDist::new(vec![0.5, 0.6]),
            Err(InferError::NotNormalized { .. })
        ));
        assert!(matches!(
            CategoricalDist::new(vec![1.5, -0.5]),
            Err(InferError::InvalidProbability { index: 0, .. })
        ));
    }

    #[test]
    fn kl_examples() {
        assert_eq!(
            kl_divergence(&dist(&[0.5, 0.5]), &dist(&[0.5, 0.5])).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            kl_divergence(&dist(&[1.0, 0.0]), &dist(&[0.5, 0.5])).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-12
        );
        // 0.8 ln 4 + 0.2 ln(1/4)
        let oracle = 0.8 * (0.8f64 / 0.2).ln() + 0.2 * (0.2f64 / 0.8).ln();
        assert_abs_diff_eq!(
            kl_divergence(&dist(&[0.8, 0.2]), &dist(&[0.2, 0.8])).unwrap(),
            oracle,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(oracle, 0.831_776_616_671_934_3, epsilon = 1e-12);
    }

    #[test]
    fn kl_errors() {
        assert!(matches!(
            kl_divergence(&dist(&[1.0]), &dist(&[0.5, 0.5])),
            Err(InferError::SupportMismatch { .. })
        ));
        assert_eq!(
            kl_divergence(&dist(&[0.5, 0.5]), &dist(&[1.0, 0.0])),
            Err(InferError::AbsoluteContinuityViolation { index: 1 })
        );
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&dist(&[1.0, 0.0, 0.0])), 0.0);
        assert_abs_diff_eq!(
            entropy(&CategoricalDist::uniform(4).unwrap()),
            4f64.ln(),
            epsilon = 1e-12
        );
        let oracle = -(0.5 * 0.5f64.ln() + 2.0 * 0.25 * 0.25f64.ln());
        assert_abs_diff_eq!(entropy(&dist(&[0.5, 0.25, 0.25])), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle, 1.039_720_770_839_917_9, epsilon = 1e-12);
    }

    #[test]
    fn posterior_examples() {
        let model = coin_model(vec![vec![0.8, 0.2], vec![0.2, 0.8]]);
        let post = exact_posterior(&model, model.prior(), "o1").unwrap();
        assert_abs_diff_eq!(post.get(0), 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(post.get(1), 0.2, epsilon = 1e-12);

        let identity = coin_model(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let post = exact_posterior(&identity, &dist(&[0.3, 0.7]), "o2").unwrap();
        assert_eq!(post.probs(), &[0.0, 1.0]);

        let dogmatic = dist(&[1.0, 0.0]);
        let post = exact_posterior(&model, &dogmatic, "o2").unwrap();
        assert_eq!(post.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn posterior_zero_evidence() {
        let identity = coin_model(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(
            exact_posterior(&identity, &dist(&[1.0, 0.0]), "o2"),
            Err(InferError::ZeroEvidence)
        );
        assert!(matches!(
            exact_posterior(&identity, &dist(&[1.0, 0.0]), "o9"),
            Err(InferError::UnknownObservation(_))
        ));
    }

    #[test]
    fn vfe_examples() {
        let single = GenerativeModel::new(
            vec!["s".into()],
            vec!["o".into()],
            vec!["a".into()],
            vec![vec![1.0]],
            vec![vec![vec![1.0]]],
            vec![0.0],
            dist(&[1.0]),
        )
        .unwrap();
        assert_eq!(
            variational_free_energy(&single, &dist(&[1.0]), &dist(&[1.0]), "o").unwrap(),
            0.0
        );

        let model = coin_model(vec![vec![0.8, 0.2], vec![0.2, 0.8]]);
        let prior = model.prior().clone();
        let at_post = variational_free_energy(&model, &dist(&[0.8, 0.2]), &prior, "o1").unwrap();
        assert_abs_diff_eq!(at_post, -(0.5f64.ln()), epsilon = 1e-12);
        let at_flat = variational_free_energy(&model, &dist(&[0.5, 0.5]), &prior, "o1").unwrap();
        let oracle = 0.5 * (0.5f64 / 0.4).ln() + 0.5 * (0.5f64 / 0.1).ln();
        assert_abs_diff_eq!(at_flat, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(at_flat, 0.916_290_731_874_155, epsilon = 1e-12);
        assert!(at_flat > at_post);
    }

    #[test]
    fn vfe_continuity_violation() {
        let identity = coin_model(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let prior = identity.prior().clone();
        assert_eq!(
            variational_free_energy(&identity, &dist(&[0.5, 0.5]), &prior, "o1"),
            Err(InferError::AbsoluteContinuityViolation { index: 1 })
        );
    }

    fn chain(likelihood_s2: Vec<f64>, preferences: Vec<f64>) -> GenerativeModel {
        GenerativeModel::new(
            labels("s", 2),
            labels("o", 2),
            vec!["move".into()],
            vec![vec![1.0, 0.0], likelihood_s2],
            vec![vec![vec![0.0, 1.0], vec![0.0, 1.0]]],
            preferences,
            dist(&[1.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn predict_outcome_examples() {
        let model = chain(vec![0.0, 1.0], vec![0.0, 0.0]);
        let out = predict_outcome_dist(&model, &dist(&[1.0, 0.0]), "move").unwrap();
        assert_eq!(out.probs(), &[0.0, 1.0]);

        let flat = GenerativeModel::new(
            labels("s", 2),
            labels("o", 3),
            vec!["stay".into()],
            vec![vec![1.0 / 3.0; 3], vec![1.0 / 3.0; 3]],
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
            vec![0.0; 3],
            CategoricalDist::uniform(2).unwrap(),
        )
        .unwrap();
        let out = predict_outcome_dist(&flat, flat.prior(), "stay").unwrap();
        for p in out.probs() {
            assert_abs_diff_eq!(*p, 1.0 / 3.0, epsilon = 1e-12);
        }
        assert!(matches!(
            predict_outcome_dist(&flat, flat.prior(), "jump"),
            Err(InferError::UnknownAction(_))
        ));
    }

    #[test]
    fn efe_examples() {
        let preferred = chain(vec![0.0, 1.0], vec![-1000.0, 0.0]);
        let efe = expected_free_energy(&preferred, &dist(&[1.0, 0.0]), "move").unwrap();
        assert_eq!(efe.risk, 0.0);
        assert_eq!(efe.ambiguity, 0.0);
        assert_eq!(efe.total, 0.0);

        let noisy = chain(vec![0.5, 0.5], vec![0.0, 0.0]);
        let efe = expected_free_energy(&noisy, &dist(&[1.0, 0.0]), "move").unwrap();
        assert_abs_diff_eq!(efe.risk, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(efe.ambiguity, std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(efe.total, efe.risk + efe.ambiguity, epsilon = 1e-15);
    }

    #[test]
    fn model_validation_names_offender() {
        let err = GenerativeModel::new(
            labels("s", 2),
            labels("o", 2),
            vec!["go".into()],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![vec![0.9, 0.0], vec![0.0, 1.0]]],
            vec![0.0, 0.0],
            CategoricalDist::uniform(2).unwrap(),
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("state `s1`") && msg.contains("action `go`"), "{msg}");
    }
}
