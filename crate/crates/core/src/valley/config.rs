use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{primitive_actions, ValleyError, GRID_STEPS};
use crate::ethica::{self, Modality, Norm};
use crate::infer::{CategoricalDist, GenerativeModel, InferError};

pub const SCHEMA_VERSION: u32 = 1;

/// One community sharing the water budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunityConfig {
    pub id: String,
    /// Units per day that reset the deficit counter.
    pub need: u32,
    /// Sensor noise level of this community's reports.
    pub noise: f64,
    /// Evidence `[r, s]` behind the trust held in this source.
    pub trust: [f64; 2],
    #[serde(default)]
    pub initial_deficit: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SanctuaryConfig {
    pub id: String,
    /// Units per day that sustain the species populations.
    pub need: u32,
    pub noise: f64,
    pub trust: [f64; 2],
    pub initial_counts: Vec<u32>,
    pub capacity: f64,
    /// Per species `[dry_rate, sustained_rate]`; the daily growth rate
    /// interpolates between them by the covered fraction of `need`.
    pub response: Vec<[f64; 2]>,
    /// Standard deviation of the multiplicative log-normal growth noise.
    pub growth_noise: f64,
    /// Width of one stress level on the `1 − evenness` scale.
    pub stress_bin_width: f64,
    /// Stress level at and above which `stressed(W)` is true.
    pub stressed_level: u32,
}

/// Tabular model as written in TOML; `transition` maps each action to its
/// rows `P(s'|s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub states: Vec<String>,
    pub observations: Vec<String>,
    pub actions: Vec<String>,
    pub likelihood: Vec<Vec<f64>>,
    pub transition: BTreeMap<String, Vec<Vec<f64>>>,
    pub preferences: Vec<f64>,
    pub prior: Vec<f64>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<GenerativeModel, InferError> {
        let transition =
            self.actions
                .iter()
                .map(|a| {
                    self.transition.get(a).cloned().ok_or_else(|| {
                        InferError::InvalidModel(format!("no transition rows for action `{a}`"))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
        if let Some(extra) = self.transition.keys().find(|k| !self.actions.contains(k)) {
            return Err(InferError::InvalidModel(format!(
                "transition rows given for undeclared action `{extra}`"
            )));
        }
        let prior = CategoricalDist::new(self.prior.clone())
            .map_err(|e| InferError::InvalidModel(format!("prior: {e}")))?;
        GenerativeModel::new(
            self.states.clone(),
            self.observations.clone(),
            self.actions.clone(),
            self.likelihood.clone(),
            transition,
            self.preferences.clone(),
            prior,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedAllocation {
    pub label: String,
    pub shares: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptConfig {
    pub eta: f64,
    pub delta: f64,
    pub epochs: usize,
    pub episodes: usize,
    pub episode_days: u32,
}

/// The scenario document (`schema_version = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub days: u32,
    pub budget: u32,
    pub grid_step: f64,
    pub max_deficit: u32,
    /// κ in `survival = exp(−κ·deficit)`.
    pub survival_steepness: f64,
    /// Scales log-survival into log-preferences.
    pub preference_precision: f64,
    pub horizon: usize,
    pub env_weight: f64,
    pub tau: f64,
    pub theta: f64,
    pub evidence_window: f64,
    /// Binary readings behind each evidence count pair.
    pub report_samples: u32,
    /// Norm file, relative to the config file.
    pub norms: PathBuf,
    #[serde(default)]
    pub named: Vec<NamedAllocation>,
    pub communities: Vec<CommunityConfig>,
    pub sanctuary: SanctuaryConfig,
    pub self_model: ModelSpec,
    pub adapt: AdaptConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ValleyError> {
        toml::from_str(text).map_err(|e| ValleyError::Config(e.to_string()))
    }

    pub fn party_ids(&self) -> Vec<String> {
        self.communities
            .iter()
            .map(|c| c.id.clone())
            .chain(std::iter::once(self.sanctuary.id.clone()))
            .collect()
    }

    pub fn species(&self) -> usize {
        self.sanctuary.initial_counts.len()
    }

    /// Atom names the scenario populates.
    pub fn atom_names(&self) -> BTreeSet<String> {
        self.communities
            .iter()
            .map(|c| has_water_atom(&c.id))
            .chain(std::iter::once(stressed_atom(&self.sanctuary.id)))
            .collect()
    }

    /// Every structural problem, in a stable order.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |s: String| out.push(s);
        if self.schema_version != SCHEMA_VERSION {
            push(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.budget == 0 {
            push("budget must be positive".into());
        }
        if !GRID_STEPS.iter().any(|s| (s - self.grid_step).abs() < 1e-9) {
            push(format!(
                "grid_step {} is not one of {GRID_STEPS:?}",
                self.grid_step
            ));
        }
        if self.max_deficit == 0 {
            push("max_deficit must be at least 1".into());
        }
        if !(self.survival_steepness > 0.0) {
            push("survival_steepness must be positive".into());
        }
        if !(self.preference_precision > 0.0) {
            push("preference_precision must be positive".into());
        }
        if self.horizon == 0 {
            push("horizon must be at least 1".into());
        }
        if !(self.env_weight >= 0.0) {
            push("env_weight must be nonnegative".into());
        }
        for (name, t) in [("tau", self.tau), ("theta", self.theta)] {
            if !(t > 0.0 && t <= 1.0) {
                push(format!("{name} = {t} outside (0,1]"));
            }
        }
        if !(self.evidence_window > 0.0) {
            push("evidence_window must be positive".into());
        }
        if self.communities.len() != 2 {
            push(format!(
                "expected exactly 2 communities, found {}",
                self.communities.len()
            ));
        }
        let mut ids = BTreeSet::new();
        for id in self.party_ids() {
            if !ids.insert(id.clone()) {
                push(format!("duplicate party id `{id}`"));
            }
            if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                push(format!("party id `{id}` must be alphanumeric"));
            }
        }
        for c in &self.communities {
            if c.need == 0 {
                push(format!("community `{}`: need must be positive", c.id));
            }
            if !(0.0..=1.0).contains(&c.noise) {
                push(format!("community `{}`: noise {} outside [0,1]", c.id, c.noise));
            }
            if c.trust.iter().any(|x| !(*x >= 0.0)) {
                push(format!(
                    "community `{}`: trust evidence must be nonnegative",
                    c.id
                ));
            }
            if c.initial_deficit > self.max_deficit {
                push(format!(
                    "community `{}`: initial_deficit exceeds max_deficit",
                    c.id
                ));
            }
        }
        let s = &self.sanctuary;
        if s.need == 0 {
            push(format!("sanctuary `{}`: need must be positive", s.id));
        }
        if !(0.0..=1.0).contains(&s.noise) {
            push(format!("sanctuary `{}`: noise {} outside [0,1]", s.id, s.noise));
        }
        if s.trust.iter().any(|x| !(*x >= 0.0)) {
            push(format!(
                "sanctuary `{}`: trust evidence must be nonnegative",
                s.id
            ));
        }
        if s.initial_counts.len() < 2 {
            push("sanctuary needs at least 2 species".into());
        }
        if s.initial_counts.iter().all(|&n| n == 0) {
            push("sanctuary species counts may not all be zero".into());
        }
        if s.response.len() != s.initial_counts.len() {
            push(format!(
                "sanctuary response has {} rows for {} species",
                s.response.len(),
                s.initial_counts.len()
            ));
        }
        if !(s.capacity > 0.0) {
            push("sanctuary capacity must be positive".into());
        }
        if !(s.growth_noise >= 0.0) {
            push("sanctuary growth_noise must be nonnegative".into());
        }
        if !(s.stress_bin_width > 0.0) {
            push("sanctuary stress_bin_width must be positive".into());
        }
        match self.self_model.build() {
            Ok(model) => {
                for k in 0..=self.party_ids().len() {
                    let label = shortfall_action(k);
                    if !model.actions().contains(&label) {
                        push(format!("self_model is missing action `{label}`"));
                    }
                }
            }
            Err(e) => push(format!("self_model: {e}")),
        }
        for n in &self.named {
            let sum: f64 = n.shares.iter().sum();
            if n.shares.iter().any(|x| !(*x >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                push(format!(
                    "named allocation `{}` shares must be nonnegative and sum to 1",
                    n.label
                ));
            }
        }
        if self.adapt.episodes == 0 || self.adapt.episode_days == 0 {
            push("adapt.episodes and adapt.episode_days must be positive".into());
        }
        if !(self.adapt.delta > 0.0) || !(self.adapt.eta >= 0.0) {
            push("adapt.delta must be positive and adapt.eta nonnegative".into());
        }
        out
    }

    /// Problems with `norms` against this scenario's actions, atoms and parties.
    pub fn norm_diagnostics(&self, norms: &[Norm]) -> Vec<String> {
        let actions = primitive_actions(self);
        let atoms = self.atom_names();
        let parties: BTreeSet<String> = self.party_ids().into_iter().collect();
        let mut out = Vec::new();
        for n in norms {
            if !actions.contains(&n.action) {
                out.push(format!(
                    "norm `{}` references unknown action `{}`",
                    n.id, n.action
                ));
            }
            for a in n.condition.atoms() {
                if !atoms.contains(&a) {
                    out.push(format!("norm `{}` references unknown atom `{a}`", n.id));
                }
            }
            for p in n.condition.stakeholders() {
                if !parties.contains(&p) {
                    out.push(format!("norm `{}` references unknown stakeholder `{p}`", n.id));
                }
            }
        }
        out
    }
}

pub fn has_water_atom(id: &str) -> String {
    format!("has_water({id})")
}

pub fn stressed_atom(id: &str) -> String {
    format!("stressed({id})")
}

pub(crate) fn shortfall_action(k: usize) -> String {
    format!("short{k}")
}

/// A loaded, validated scenario: config plus parsed norms.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub norms: Vec<Norm>,
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ValleyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ValleyError::Config(format!("{}: {e}", path.display())))?;
        let config = ScenarioConfig::from_toml(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_config(config, base_dir)
    }

    pub fn from_config(config: ScenarioConfig, base_dir: PathBuf) -> Result<Self, ValleyError> {
        let mut problems = config.diagnostics();
        let norm_path = base_dir.join(&config.norms);
        let norms = match std::fs::read_to_string(&norm_path) {
            Ok(text) => match ethica::parse_norms(&text) {
                Ok(norms) => norms,
                Err(e) => {
                    problems.push(format!("{}: {e}", norm_path.display()));
                    Vec::new()
                }
            },
            Err(e) => {
                problems.push(format!("{}: {e}", norm_path.display()));
                Vec::new()
            }
        };
        if problems.is_empty() {
            problems.extend(config.norm_diagnostics(&norms));
        }
        if !problems.is_empty() {
            return Err(ValleyError::Invalid(problems));
        }
        Ok(Self {
            config,
            norms,
            base_dir,
        })
    }

    /// Builds a scenario from in-memory parts, as tests do.
    pub fn from_parts(config: ScenarioConfig, norms_text: &str) -> Result<Self, ValleyError> {
        let mut problems = config.diagnostics();
        let norms = ethica::parse_norms(norms_text)?;
        problems.extend(config.norm_diagnostics(&norms));
        if !problems.is_empty() {
            return Err(ValleyError::Invalid(problems));
        }
        Ok(Self {
            config,
            norms,
            base_dir: PathBuf::new(),
        })
    }

    /// Norms with obligation weights replaced from `weights` where present.
    pub fn norms_with_weights(&self, weights: &BTreeMap<String, f64>) -> Vec<Norm> {
        self.norms
            .iter()
            .cloned()
            .map(|mut n| {
                if n.modality == Modality::Obligation {
                    if let Some(&w) = weights.get(&n.id) {
                        // the deontic layer needs a positive weight
                        n.weight = w.max(f64::MIN_POSITIVE);
                    }
                }
                n
            })
            .collect()
    }
}
