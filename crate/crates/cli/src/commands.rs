use std::fs;
use std::path::{Path, PathBuf};

use nael_core::adapt::{self, AdaptError, EthicalParams, TrainOptions, ValleyObjective};
use nael_core::global::{select_action, Thresholds};
use nael_core::par;
use nael_core::trace::{day_events, summary_header, summary_row, TraceEvent};
use nael_core::valley::{
    self, build_field, exact_report, joint_actions, reports_to_state, run_episode, scenario_allocations,
    source_trust, Allocation, Episode, Scenario, ValleyError, ValleyState,
};
use serde::Deserialize;

use crate::{Cli, Command, DecideArgs, RunArgs, TrainArgs};

const MAX_DIAGNOSTICS: usize = 20;

pub enum Failure {
    Config(String),
    DeadEnd(String),
    NonFinite(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::DeadEnd(_) => 3,
            Failure::NonFinite(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::DeadEnd(m) | Failure::NonFinite(m) => m,
        }
    }
}

impl From<ValleyError> for Failure {
    fn from(e: ValleyError) -> Self {
        match e {
            ValleyError::DeadEnd {
                day,
                excluded,
                verdicts,
            } => {
                let mut msg = format!("day {day}: every candidate is forbidden ({excluded} excluded)");
                for (action, p) in &verdicts.forbidden {
                    msg.push_str(&format!(
                        "\n  forbidden {action} (p={:.6}, weight {:.6})",
                        p.probability(),
                        p.weight
                    ));
                }
                for (action, w) in &verdicts.obligated {
                    msg.push_str(&format!("\n  obligated {action} (weight {w:.6})"));
                }
                Failure::DeadEnd(msg)
            }
            ref other if other.is_no_permitted_action() => Failure::DeadEnd(other.to_string()),
            ValleyError::Invalid(list) => Failure::Config(diagnostic_list(&list)),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<AdaptError> for Failure {
    fn from(e: AdaptError) -> Self {
        match e {
            AdaptError::NonFiniteObjective { .. } => Failure::NonFinite(e.to_string()),
            AdaptError::Valley(v) => v.into(),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn diagnostic_list(list: &[String]) -> String {
    let mut msg = format!("{} problem(s)", list.len());
    for d in list.iter().take(MAX_DIAGNOSTICS) {
        msg.push_str("\n  ");
        msg.push_str(d);
    }
    msg
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| io_failure(path, e))
}

pub fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Validate => validate(cli),
        Command::Run(args) => run(cli, args),
        Command::Decide(args) => decide(cli, args),
        Command::Train(args) => train(cli, args),
    }
}

fn load(cli: &Cli) -> Result<Scenario, Failure> {
    let mut scenario = Scenario::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        scenario.config.seed = seed;
    }
    Ok(scenario)
}

fn load_params(scenario: &Scenario, path: Option<&PathBuf>) -> Result<EthicalParams, Failure> {
    let defaults = EthicalParams::from_scenario(scenario);
    let Some(path) = path else {
        return Ok(defaults);
    };
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let params: EthicalParams = toml::from_str(&text).map_err(|e| io_failure(path, e))?;
    if params.dim() != defaults.dim() || params.names() != defaults.names() {
        return Err(Failure::Config(format!(
            "{}: parameters do not match the scenario's agents and norms",
            path.display()
        )));
    }
    Ok(params)
}

fn select_candidates(scenario: &Scenario, only: &[String]) -> Result<Vec<Allocation>, Failure> {
    let all = scenario_allocations(&scenario.config)?;
    if only.is_empty() {
        return Ok(all);
    }
    only.iter()
        .map(|label| {
            all.iter()
                .find(|a| &a.label == label)
                .cloned()
                .ok_or_else(|| Failure::Config(format!("unknown candidate `{label}`")))
        })
        .collect()
}

fn validate(cli: &Cli) -> Result<(), Failure> {
    let scenario = load(cli)?;
    if !cli.quiet {
        let c = &scenario.config;
        println!(
            "{}: ok ({} norms, {} candidates, {} species, horizon {})",
            cli.config.display(),
            scenario.norms.len(),
            scenario_allocations(c)?.len(),
            c.species(),
            c.horizon
        );
    }
    Ok(())
}

fn suffixed(path: &Path, seed: u64, episodes: usize) -> PathBuf {
    if episodes <= 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.seed{seed}.{ext}"),
        None => format!("{stem}.seed{seed}"),
    };
    path.with_file_name(name)
}

fn run(cli: &Cli, args: &RunArgs) -> Result<(), Failure> {
    let scenario = load(cli)?;
    let params = load_params(&scenario, args.params.as_ref())?;
    let allocations = select_candidates(&scenario, &args.only)?;
    let days = args.days.unwrap_or(scenario.config.days);
    let episodes = args.episodes.max(1);
    let seed = scenario.config.seed;

    let results: Vec<Result<Episode, ValleyError>> = par::with_threads(args.jobs, || {
        par::map_range(episodes, |k| {
            run_episode(&scenario, &params, &allocations, seed + k as u64, days)
        })
    });

    let budget = scenario.config.budget;
    for result in results {
        let episode = result?;
        let ids = episode
            .days
            .first()
            .map(|d| {
                d.decision
                    .chosen_breakdown()
                    .terms
                    .keys()
                    .cloned()
                    .collect::<Vec<_>>()
            })
            .unwrap_or_default();
        if let Some(path) = &args.trace {
            let mut seq = 0;
            let mut out = String::new();
            for record in &episode.days {
                for event in day_events(record, budget, &mut seq) {
                    out.push_str(&event.to_json_line());
                }
            }
            write_file(&suffixed(path, episode.seed, episodes), &out)?;
        }
        if let Some(path) = &args.summary {
            let mut out = summary_header(&ids);
            for record in &episode.days {
                out.push_str(&summary_row(record, &ids));
            }
            write_file(&suffixed(path, episode.seed, episodes), &out)?;
        }
        if !cli.quiet {
            for record in &episode.days {
                println!(
                    "seed {} day {:>3}  {:<16} G = {:.6}",
                    episode.seed,
                    record.day,
                    record.decision.chosen,
                    record.decision.chosen_breakdown().total
                );
            }
            println!("seed {} objective {:.6}", episode.seed, episode.objective());
        }
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    #[serde(default)]
    day: u32,
    deficits: Vec<u32>,
    species: Vec<u32>,
}

fn read_state(scenario: &Scenario, path: Option<&PathBuf>) -> Result<ValleyState, Failure> {
    let Some(path) = path else {
        return Ok(valley::initial_state(&scenario.config));
    };
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let s: StateFile = toml::from_str(&text).map_err(|e| io_failure(path, e))?;
    let c = &scenario.config;
    let mut problems = Vec::new();
    if s.deficits.len() != c.communities.len() {
        problems.push(format!(
            "expected {} deficits, found {}",
            c.communities.len(),
            s.deficits.len()
        ));
    }
    if s.deficits.iter().any(|&d| d > c.max_deficit) {
        problems.push(format!("deficits must lie in [0, {}]", c.max_deficit));
    }
    if s.species.len() != c.species() {
        problems.push(format!(
            "expected {} species counts, found {}",
            c.species(),
            s.species.len()
        ));
    }
    if s.species.iter().all(|&n| n == 0) {
        problems.push("species counts may not all be zero".into());
    }
    if !problems.is_empty() {
        return Err(Failure::Config(format!(
            "{}: {}",
            path.display(),
            problems.join("; ")
        )));
    }
    Ok(ValleyState {
        day: s.day,
        deficits: s.deficits,
        species: s.species,
    })
}

fn decide(cli: &Cli, args: &DecideArgs) -> Result<(), Failure> {
    let scenario = load(cli)?;
    let params = load_params(&scenario, args.params.as_ref())?;
    let allocations = select_candidates(&scenario, &args.only)?;
    let state = read_state(&scenario, args.state.as_ref())?;

    let report = exact_report(&scenario.config, &state);

    let config = &scenario.config;
    let trust = source_trust(config)?;
    let symbolic = reports_to_state(&report, &trust, config.evidence_window)?;
    let field = build_field(&scenario, &params, &report, &allocations)?;
    let joint = joint_actions(&scenario, &report, &allocations)?;
    let norms = scenario.norms_with_weights(&params.obligation_weights);
    let thresholds = Thresholds {
        tau: config.tau,
        theta: config.theta,
    };
    let decision = select_action(&field, &joint, &norms, &symbolic, thresholds, state.day)
        .map_err(|e| Failure::from(ValleyError::from(e)))?;
    print!(
        "{}",
        crate::table::render(&decision, &joint, args.explain, thresholds)
    );
    Ok(())
}

fn train(cli: &Cli, args: &TrainArgs) -> Result<(), Failure> {
    let mut scenario = load(cli)?;
    if let Some(days) = args.days {
        scenario.config.adapt.episode_days = days;
    }
    let a = scenario.config.adapt.clone();
    let params = load_params(&scenario, args.params.as_ref())?;
    let allocations = scenario_allocations(&scenario.config)?;
    let objective = ValleyObjective {
        scenario: &scenario,
        allocations: &allocations,
        template: params.clone(),
        seed: scenario.config.seed,
        episodes: args.episodes.unwrap_or(a.episodes),
    };
    let options = TrainOptions {
        eta: args.eta.unwrap_or(a.eta),
        delta: args.delta.unwrap_or(a.delta),
        epochs: args.epochs.unwrap_or(a.epochs),
    };
    let names = params.names();
    let quiet = cli.quiet;
    let history = par::with_threads(args.jobs, || {
        adapt::train(&objective, &params.flatten(), &options, |row| {
            if !quiet {
                eprintln!("epoch {:>3}  objective {:.6}", row.epoch, row.objective);
            }
        })
    })?;

    let final_theta = history.final_theta().unwrap_or_default();
    let trained = params.with_flat(final_theta)?;
    if let Some(path) = &args.out {
        let text = toml::to_string(&trained).map_err(|e| io_failure(path, e))?;
        write_file(path, &text)?;
    }
    if let Some(path) = &args.history {
        write_file(path, &history.to_csv(&names))?;
    }
    if let Some(path) = &args.trace {
        let mut out = String::new();
        for (seq, row) in history.rows.iter().enumerate() {
            let event = TraceEvent::TrainingEpoch {
                seq: seq as u64,
                epoch: row.epoch,
                objective: row.objective,
                params: names.iter().cloned().zip(row.theta.iter().copied()).collect(),
            };
            out.push_str(&event.to_json_line());
        }
        write_file(path, &out)?;
    }
    if !quiet {
        let first = history.rows.first().map(|r| r.objective).unwrap_or_default();
        let last = history.rows.last().map(|r| r.objective).unwrap_or_default();
        println!("objective {first:.6} -> {last:.6} over {} epochs", options.epochs);
    }
    Ok(())
}
