use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{has_water_atom, stressed_atom, Allocation, ScenarioConfig, ValleyError};
use crate::ethica::{EthicaError, SymbolicState};
use crate::infer::entropy_of;
use crate::opinion::Opinion;

/// Ground truth of the valley on one day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValleyState {
    pub day: u32,
    /// Days without adequate water, per community, capped at `max_deficit`.
    pub deficits: Vec<u32>,
    pub species: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityReport {
    pub id: String,
    pub noise: f64,
    pub deficit_reading: u32,
    /// Readings for and against `has_water`.
    pub evidence: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanctuaryReport {
    pub id: String,
    pub noise: f64,
    pub counts: Vec<f64>,
    pub stress_reading: u32,
    /// Readings for and against `stressed`.
    pub evidence: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub day: u32,
    pub communities: Vec<CommunityReport>,
    pub sanctuary: SanctuaryReport,
}

pub fn initial_state(config: &ScenarioConfig) -> ValleyState {
    ValleyState {
        day: 0,
        deficits: config.communities.iter().map(|c| c.initial_deficit).collect(),
        species: config.sanctuary.initial_counts.clone(),
    }
}

/// Pielou evenness `H / ln K` of the species distribution, in [0, 1].
pub fn evenness(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if counts.len() < 2 || total <= 0.0 {
        return 0.0;
    }
    let p: Vec<f64> = counts.iter().map(|c| c / total).collect();
    (entropy_of(&p) / (counts.len() as f64).ln()).clamp(0.0, 1.0)
}

/// Sanctuary stress level: `1 − evenness` binned by `bin_width`, capped.
pub fn stress_level(counts: &[f64], bin_width: f64, max_level: u32) -> u32 {
    let x = (1.0 - evenness(counts)) / bin_width;
    (x + 1e-9).floor().clamp(0.0, f64::from(max_level)) as u32
}

fn to_f64(counts: &[u32]) -> Vec<f64> {
    counts.iter().map(|&c| f64::from(c)).collect()
}

/// One day of expected (noise-free) species dynamics given W's units.
pub(crate) fn expected_species_step(config: &ScenarioConfig, counts: &[f64], units: u32) -> Vec<f64> {
    let s = &config.sanctuary;
    let cover = (f64::from(units) / f64::from(s.need)).min(1.0);
    counts
        .iter()
        .zip(&s.response)
        .map(|(&n, &[dry, wet])| {
            let rate = dry + (wet - dry) * cover;
            let growth = if rate > 0.0 {
                rate * (1.0 - n / s.capacity)
            } else {
                rate
            };
            (n * (1.0 + growth)).max(0.0)
        })
        .collect()
}

/// A reading equal to `level` with probability `1 − ε`, otherwise an
/// adjacent level.
fn noisy_level<R: Rng>(level: u32, max: u32, eps: f64, rng: &mut R) -> u32 {
    let u: f64 = rng.random();
    let side: f64 = rng.random();
    if u >= eps || max == 0 {
        level
    } else if level == 0 {
        1
    } else if level == max || side < 0.5 {
        level - 1
    } else {
        level + 1
    }
}

fn evidence<R: Rng>(truth: bool, samples: u32, eps: f64, rng: &mut R) -> [f64; 2] {
    let mut r = 0.0;
    let mut s = 0.0;
    for _ in 0..samples {
        let flipped = rng.random::<f64>() < eps;
        if truth != flipped {
            r += 1.0;
        } else {
            s += 1.0;
        }
    }
    [r, s]
}

/// Noisy reports of `state` from every source.
pub fn observe<R: Rng>(config: &ScenarioConfig, state: &ValleyState, rng: &mut R) -> Report {
    let communities = config
        .communities
        .iter()
        .zip(&state.deficits)
        .map(|(c, &d)| CommunityReport {
            id: c.id.clone(),
            noise: c.noise,
            deficit_reading: noisy_level(d, config.max_deficit, c.noise, rng),
            evidence: evidence(d == 0, config.report_samples, c.noise, rng),
        })
        .collect();
    let s = &config.sanctuary;
    let truth = to_f64(&state.species);
    let level = stress_level(&truth, s.stress_bin_width, config.max_deficit);
    let counts = truth
        .iter()
        .map(|&n| {
            let z: f64 = rng.sample(StandardNormal);
            n * (s.noise * z - 0.5 * s.noise * s.noise).exp()
        })
        .collect();
    let sanctuary = SanctuaryReport {
        id: s.id.clone(),
        noise: s.noise,
        counts,
        stress_reading: noisy_level(level, config.max_deficit, s.noise, rng),
        evidence: evidence(level >= s.stressed_level, config.report_samples, s.noise, rng),
    };
    Report {
        day: state.day,
        communities,
        sanctuary,
    }
}

/// The report noiseless sensors would give for `state`.
pub fn exact_report(config: &ScenarioConfig, state: &ValleyState) -> Report {
    let mut exact = config.clone();
    for c in &mut exact.communities {
        c.noise = 0.0;
    }
    exact.sanctuary.noise = 0.0;
    observe(&exact, state, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0))
}

/// Advances one day under `alloc` and reports on the new state.
pub fn step<R: Rng>(
    config: &ScenarioConfig,
    state: &ValleyState,
    alloc: &Allocation,
    rng: &mut R,
) -> (ValleyState, Report) {
    let units = alloc.units(config.budget);
    let deficits = config
        .communities
        .iter()
        .zip(&state.deficits)
        .zip(units)
        .map(|((c, &d), u)| {
            if u >= c.need {
                0
            } else {
                (d + 1).min(config.max_deficit)
            }
        })
        .collect();

    let s = &config.sanctuary;
    let expected = expected_species_step(config, &to_f64(&state.species), units[2]);
    let mut species: Vec<u32> = expected
        .iter()
        .map(|&n| {
            let z: f64 = rng.sample(StandardNormal);
            let noisy = n * (s.growth_noise * z - 0.5 * s.growth_noise * s.growth_noise).exp();
            noisy.round().max(0.0) as u32
        })
        .collect();
    if species.iter().all(|&n| n == 0) {
        let keep = (0..state.species.len())
            .max_by_key(|&i| (state.species[i], std::cmp::Reverse(i)))
            .unwrap_or(0);
        species[keep] = 1;
    }

    let next = ValleyState {
        day: state.day + 1,
        deficits,
        species,
    };
    let report = observe(config, &next, rng);
    (next, report)
}

/// Trust in each source, from the configured evidence.
pub fn source_trust(config: &ScenarioConfig) -> Result<BTreeMap<String, Opinion>, ValleyError> {
    let mut out = BTreeMap::new();
    for c in &config.communities {
        out.insert(c.id.clone(), trust_opinion(c.trust, config.evidence_window)?);
    }
    let s = &config.sanctuary;
    out.insert(s.id.clone(), trust_opinion(s.trust, config.evidence_window)?);
    Ok(out)
}

fn trust_opinion(ev: [f64; 2], window: f64) -> Result<Opinion, ValleyError> {
    Opinion::from_evidence_with(ev[0], ev[1], window, 0.5).map_err(|e| EthicaError::from(e).into())
}

/// Atom opinions from report evidence discounted by source trust; each
/// source's frame holds its own undiscounted readings and nothing else.
/// Sources without a trust entry are trusted vacuously.
pub fn reports_to_state(
    report: &Report,
    trust: &BTreeMap<String, Opinion>,
    window: f64,
) -> Result<SymbolicState, ValleyError> {
    let readings: Vec<(String, String, [f64; 2])> = report
        .communities
        .iter()
        .map(|c| (c.id.clone(), has_water_atom(&c.id), c.evidence))
        .chain(std::iter::once((
            report.sanctuary.id.clone(),
            stressed_atom(&report.sanctuary.id),
            report.sanctuary.evidence,
        )))
        .collect();

    let mut state = SymbolicState::default();
    let vacuous = Opinion::vacuous(0.5);
    for (source, atom, [r, s]) in &readings {
        let own = Opinion::from_evidence_with(*r, *s, window, 0.5).map_err(EthicaError::from)?;
        let t = trust.get(source).copied().unwrap_or(vacuous);
        state.atoms.insert(atom.clone(), t.discount(&own));
        state.trust.insert(source.clone(), t);
        let frame: BTreeMap<String, Opinion> = readings
            .iter()
            .map(|(_, a, _)| (a.clone(), if a == atom { own } else { vacuous }))
            .collect();
        state.frames.insert(source.clone(), frame);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::super::tests::default_scenario;
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn alloc(shares: [f64; 3]) -> Allocation {
        Allocation::new("x", shares).unwrap()
    }

    #[test]
    fn starved_communities_accumulate_deficit() {
        let cfg = default_scenario().config;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s0 = initial_state(&cfg);
        let (s1, _) = step(&cfg, &s0, &alloc([0.0, 0.0, 1.0]), &mut rng);
        assert_eq!(s1.deficits, vec![s0.deficits[0] + 1, s0.deficits[1] + 1]);
        assert_eq!(s1.day, 1);
        let mut s = s1;
        for _ in 0..20 {
            s = step(&cfg, &s, &alloc([0.0, 0.0, 1.0]), &mut rng).0;
        }
        assert_eq!(s.deficits, vec![cfg.max_deficit; 2]);
    }

    #[test]
    fn met_need_resets_deficit() {
        let cfg = default_scenario().config;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let state = ValleyState {
            day: 3,
            deficits: vec![4, 2],
            species: cfg.sanctuary.initial_counts.clone(),
        };
        let (next, _) = step(&cfg, &state, &alloc([0.7, 0.3, 0.0]), &mut rng);
        assert_eq!(next.deficits, vec![0, 0]);
    }

    #[test]
    fn noiseless_report_is_exact() {
        let mut cfg = default_scenario().config;
        for c in &mut cfg.communities {
            c.noise = 0.0;
        }
        cfg.sanctuary.noise = 0.0;
        let state = ValleyState {
            day: 0,
            deficits: vec![0, 3],
            species: vec![400, 300, 200, 100],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let report = observe(&cfg, &state, &mut rng);
        let n = f64::from(cfg.report_samples);
        assert_eq!(report.communities[0].evidence, [n, 0.0]);
        assert_eq!(report.communities[1].evidence, [0.0, n]);
        assert_eq!(report.communities[1].deficit_reading, 3);
        assert_eq!(report.sanctuary.counts, vec![400.0, 300.0, 200.0, 100.0]);
        let full = BTreeMap::from([
            ("C1".to_string(), Opinion::certain_true()),
            ("C2".to_string(), Opinion::certain_true()),
            ("W".to_string(), Opinion::certain_true()),
        ]);
        let sym = reports_to_state(&report, &full, cfg.evidence_window).unwrap();
        let h = sym.atoms["has_water(C1)"];
        let u = cfg.evidence_window / (n + cfg.evidence_window);
        assert!((h.uncertainty() - u).abs() < 1e-12);
        assert!((h.belief() - (1.0 - u)).abs() < 1e-12);
    }

    #[test]
    fn step_is_deterministic() {
        let cfg = default_scenario().config;
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut s = initial_state(&cfg);
            let mut reports = Vec::new();
            for _ in 0..10 {
                let (n, r) = step(&cfg, &s, &alloc([0.4, 0.4, 0.2]), &mut rng);
                s = n;
                reports.push(r);
            }
            (s, serde_json::to_string(&reports).unwrap())
        };
        assert_eq!(run(), run());
    }

    fn report_with(evidence: [f64; 2]) -> Report {
        Report {
            day: 0,
            communities: vec![
                CommunityReport {
                    id: "C1".into(),
                    noise: 0.0,
                    deficit_reading: 0,
                    evidence,
                },
                CommunityReport {
                    id: "C2".into(),
                    noise: 0.0,
                    deficit_reading: 0,
                    evidence,
                },
            ],
            sanctuary: SanctuaryReport {
                id: "W".into(),
                noise: 0.0,
                counts: vec![1.0, 1.0],
                stress_reading: 0,
                evidence,
            },
        }
    }

    #[test]
    fn evidence_mapping_examples() {
        let full: BTreeMap<String, Opinion> = ["C1", "C2", "W"]
            .map(|id| (id.to_string(), Opinion::certain_true()))
            .into();
        let none = reports_to_state(&report_with([0.0, 0.0]), &full, 2.0).unwrap();
        assert!(none.atoms.values().all(|o| o.uncertainty() == 1.0));

        let eight = reports_to_state(&report_with([8.0, 0.0]), &full, 2.0).unwrap();
        let o = eight.atoms["has_water(C1)"];
        assert!(o.approx_eq(&Opinion::new(0.8, 0.0, 0.2, 0.5).unwrap(), 1e-12));
        assert!(eight.frames["C1"]["stressed(W)"].uncertainty() == 1.0);
        assert!(eight.frames["W"]["stressed(W)"].approx_eq(&o, 1e-12));

        let vac: BTreeMap<String, Opinion> = ["C1", "C2", "W"]
            .map(|id| (id.to_string(), Opinion::vacuous(0.5)))
            .into();
        let blind = reports_to_state(&report_with([8.0, 0.0]), &vac, 2.0).unwrap();
        assert!(blind.atoms.values().all(|o| o.uncertainty() == 1.0));
    }

    #[test]
    fn stress_levels() {
        assert_eq!(evenness(&[5.0, 5.0, 5.0, 5.0]), 1.0);
        assert_eq!(evenness(&[5.0, 0.0, 0.0, 0.0]), 0.0);
        assert_eq!(stress_level(&[400.0, 300.0, 200.0, 100.0], 0.04, 5), 1);
        assert_eq!(stress_level(&[1.0, 0.0, 0.0, 0.0], 0.04, 5), 5);
    }

    fn mean_entropy_trend(w_share: f64) -> (f64, f64) {
        let cfg = default_scenario().config;
        let shares = [(1.0 - w_share) / 2.0, (1.0 - w_share) / 2.0, w_share];
        let mut first = 0.0;
        let mut last = 0.0;
        let seeds = 20;
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = initial_state(&cfg);
            first += evenness(&to_f64(&s.species));
            for _ in 0..100 {
                s = step(&cfg, &s, &alloc(shares), &mut rng).0;
            }
            last += evenness(&to_f64(&s.species));
        }
        (first / seeds as f64, last / seeds as f64)
    }

    #[test]
    fn ecology_entropy_follows_water() {
        let cfg = default_scenario().config;
        let sustain = f64::from(cfg.sanctuary.need) / f64::from(cfg.budget);
        let (start, end) = mean_entropy_trend(sustain);
        assert!(end >= start, "sustained: {start} -> {end}");
        let (start, end) = mean_entropy_trend(0.0);
        assert!(end <= start, "dry: {start} -> {end}");
    }

    #[test]
    fn expected_dynamics_move_evenness_with_water() {
        let cfg = default_scenario().config;
        let mut wet = to_f64(&cfg.sanctuary.initial_counts);
        let mut dry = wet.clone();
        for _ in 0..100 {
            let e_wet = evenness(&wet);
            let e_dry = evenness(&dry);
            wet = expected_species_step(&cfg, &wet, cfg.sanctuary.need);
            dry = expected_species_step(&cfg, &dry, 0);
            assert!(evenness(&wet) >= e_wet - 1e-12);
            assert!(evenness(&dry) <= e_dry + 1e-12);
        }
    }
}
