//! Gradient descent on expected global free energy over the ethical
//! parameters, with central finite differences and common random numbers.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;
use crate::valley::{run_episode_with, Allocation, Scenario, ValleyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdaptError {
    #[error("objective is not finite ({value}) at coordinate {coordinate:?}")]
    NonFiniteObjective { coordinate: Option<usize>, value: f64 },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("parameter vector has {got} entries, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Valley(#[from] ValleyError),
}

/// Tunable parameters of the ethical policy.
///
/// Flattened order: self preferences, each stakeholder's preferences by
/// ascending id, obligation weights by ascending norm id, then `env_weight`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EthicalParams {
    pub self_preferences: Vec<f64>,
    pub stakeholder_preferences: BTreeMap<String, Vec<f64>>,
    pub obligation_weights: BTreeMap<String, f64>,
    pub env_weight: f64,
}

impl EthicalParams {
    pub fn dim(&self) -> usize {
        self.self_preferences.len()
            + self.stakeholder_preferences.values().map(Vec::len).sum::<usize>()
            + self.obligation_weights.len()
            + 1
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.self_preferences.clone();
        for v in self.stakeholder_preferences.values() {
            out.extend(v);
        }
        out.extend(self.obligation_weights.values());
        out.push(self.env_weight);
        out
    }

    /// Column names matching [`flatten`](Self::flatten).
    pub fn names(&self) -> Vec<String> {
        let mut out: Vec<String> = (0..self.self_preferences.len())
            .map(|i| format!("pref.self.{i}"))
            .collect();
        for (id, v) in &self.stakeholder_preferences {
            out.extend((0..v.len()).map(|i| format!("pref.{id}.{i}")));
        }
        out.extend(self.obligation_weights.keys().map(|id| format!("weight.{id}")));
        out.push("env_weight".into());
        out
    }

    /// Which coordinates are kept nonnegative.
    pub fn constrained(&self) -> Vec<bool> {
        let prefs = self.dim() - self.obligation_weights.len() - 1;
        (0..self.dim()).map(|i| i >= prefs).collect()
    }

    /// A copy of `self` with values taken from `theta`.
    pub fn with_flat(&self, theta: &[f64]) -> Result<Self, AdaptError> {
        if theta.len() != self.dim() {
            return Err(AdaptError::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        let mut it = theta.iter().copied();
        let mut out = self.clone();
        for x in out.self_preferences.iter_mut() {
            *x = it.next().unwrap_or_default();
        }
        for v in out.stakeholder_preferences.values_mut() {
            for x in v.iter_mut() {
                *x = it.next().unwrap_or_default();
            }
        }
        for x in out.obligation_weights.values_mut() {
            *x = it.next().unwrap_or_default();
        }
        out.env_weight = it.next().unwrap_or_default();
        Ok(out)
    }
}

/// A scalar objective over a flat parameter vector.
pub trait Objective: Sync {
    fn evaluate(&self, theta: &[f64]) -> Result<f64, AdaptError>;

    /// The value plus an optional fingerprint of the discrete choices made;
    /// differing fingerprints across a perturbation mark a filter flip.
    fn evaluate_traced(&self, theta: &[f64]) -> Result<(f64, Option<u64>), AdaptError> {
        Ok((self.evaluate(theta)?, None))
    }

    /// Coordinates that must stay nonnegative.
    fn constrained(&self, dim: usize) -> Vec<bool> {
        vec![false; dim]
    }
}

fn checked(value: f64, coordinate: Option<usize>) -> Result<f64, AdaptError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(AdaptError::NonFiniteObjective { coordinate, value })
    }
}

/// Central differences per coordinate. Constrained coordinates closer than
/// `delta` to zero use a forward difference instead.
pub fn finite_diff_gradient<O: Objective + ?Sized>(
    objective: &O,
    theta: &[f64],
    delta: f64,
) -> Result<Vec<f64>, AdaptError> {
    if !(delta > 0.0) {
        return Err(AdaptError::InvalidArgument(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let constrained = objective.constrained(theta.len());
    let base = if constrained.iter().zip(theta).any(|(&c, &x)| c && x < delta) {
        Some(checked(objective.evaluate(theta)?, None)?)
    } else {
        None
    };
    par::map_range(theta.len(), |i| -> Result<f64, AdaptError> {
        let mut plus = theta.to_vec();
        plus[i] += delta;
        let (hi, sig_hi) = objective.evaluate_traced(&plus)?;
        let hi = checked(hi, Some(i))?;
        if constrained[i] && theta[i] < delta {
            let lo = base.unwrap_or_default();
            return Ok((hi - lo) / delta);
        }
        let mut minus = theta.to_vec();
        minus[i] -= delta;
        let (lo, sig_lo) = objective.evaluate_traced(&minus)?;
        let lo = checked(lo, Some(i))?;
        if sig_hi != sig_lo {
            log::info!("coordinate {i}: discrete choice flips within ±{delta}");
        }
        Ok((hi - lo) / (2.0 * delta))
    })
    .into_iter()
    .collect()
}

/// `θ − η·g`, then constrained coordinates clipped at zero.
pub fn update_step(theta: &[f64], grad: &[f64], eta: f64, constrained: &[bool]) -> Vec<f64> {
    theta
        .iter()
        .zip(grad)
        .enumerate()
        .map(|(i, (&x, &g))| {
            let y = x - eta * g;
            if constrained.get(i).copied().unwrap_or(false) {
                y.max(0.0)
            } else {
                y
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub objective: f64,
    pub theta: Vec<f64>,
}

/// Objective and parameters before training (epoch 0) and after each epoch.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub rows: Vec<EpochRecord>,
}

impl History {
    pub fn final_theta(&self) -> Option<&[f64]> {
        self.rows.last().map(|r| r.theta.as_slice())
    }

    pub fn to_csv(&self, names: &[String]) -> String {
        let mut out = String::from("epoch,objective");
        for n in names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{}", r.epoch, r.objective);
            for x in &r.theta {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
        out
    }
}

pub struct TrainOptions {
    pub eta: f64,
    pub delta: f64,
    pub epochs: usize,
}

/// Runs `epochs` descent steps from `theta0`, calling `on_epoch` with each
/// new row.
pub fn train<O: Objective + ?Sized>(
    objective: &O,
    theta0: &[f64],
    options: &TrainOptions,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<History, AdaptError> {
    if options.epochs == 0 {
        return Err(AdaptError::InvalidArgument("epochs must be at least 1".into()));
    }
    if !(options.eta >= 0.0) {
        return Err(AdaptError::InvalidArgument(format!(
            "eta must be nonnegative, got {}",
            options.eta
        )));
    }
    let constrained = objective.constrained(theta0.len());
    let mut theta = theta0.to_vec();
    let mut history = History::default();
    let first = EpochRecord {
        epoch: 0,
        objective: checked(objective.evaluate(&theta)?, None)?,
        theta: theta.clone(),
    };
    on_epoch(&first);
    history.rows.push(first);
    for epoch in 1..=options.epochs {
        let grad = finite_diff_gradient(objective, &theta, options.delta)?;
        theta = update_step(&theta, &grad, options.eta, &constrained);
        let row = EpochRecord {
            epoch,
            objective: checked(objective.evaluate(&theta)?, None)?,
            theta: theta.clone(),
        };
        on_epoch(&row);
        history.rows.push(row);
    }
    Ok(history)
}

/// Mean over `episodes` seeded episodes (seeds `seed`, `seed + 1`, …) of the
/// summed chosen totals.
pub fn episode_objective(
    params: &EthicalParams,
    scenario: &Scenario,
    allocations: &[Allocation],
    seed: u64,
    episodes: usize,
) -> Result<f64, AdaptError> {
    Ok(traced_objective(params, scenario, allocations, seed, episodes)?.0)
}

fn traced_objective(
    params: &EthicalParams,
    scenario: &Scenario,
    allocations: &[Allocation],
    seed: u64,
    episodes: usize,
) -> Result<(f64, u64), AdaptError> {
    if episodes == 0 {
        return Err(AdaptError::InvalidArgument("episodes must be at least 1".into()));
    }
    let days = scenario.config.adapt.episode_days;
    let runs = par::map_range(episodes, |k| -> Result<(f64, Vec<String>), ValleyError> {
        let mut chosen = Vec::with_capacity(days as usize);
        let total = run_episode_with(scenario, params, allocations, seed + k as u64, days, |d| {
            chosen.push(d.decision.chosen)
        })?;
        Ok((total, chosen))
    });
    let mut sum = 0.0;
    let mut hasher = DefaultHasher::new();
    for run in runs {
        let (total, chosen) = run?;
        sum += total;
        chosen.hash(&mut hasher);
    }
    Ok((sum / episodes as f64, hasher.finish()))
}

/// [`episode_objective`] as a function of the flattened parameters.
pub struct ValleyObjective<'a> {
    pub scenario: &'a Scenario,
    pub allocations: &'a [Allocation],
    pub template: EthicalParams,
    pub seed: u64,
    pub episodes: usize,
}

impl Objective for ValleyObjective<'_> {
    fn evaluate(&self, theta: &[f64]) -> Result<f64, AdaptError> {
        Ok(self.evaluate_traced(theta)?.0)
    }

    fn evaluate_traced(&self, theta: &[f64]) -> Result<(f64, Option<u64>), AdaptError> {
        let params = self.template.with_flat(theta)?;
        let (value, sig) =
            traced_objective(&params, self.scenario, self.allocations, self.seed, self.episodes)?;
        Ok((value, Some(sig)))
    }

    fn constrained(&self, _dim: usize) -> Vec<bool> {
        self.template.constrained()
    }
}
