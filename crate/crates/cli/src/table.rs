use std::fmt::Write as _;

use nael_core::ethica::neglected_obligations;
use nael_core::global::{DecisionRecord, JointAction, Thresholds};

const COL: usize = 12;

/// The decision table: one row per allowed candidate with its weighted
/// terms, the argmin marked with `*`.
pub fn render(
    decision: &DecisionRecord,
    joint: &[JointAction],
    explain: bool,
    thresholds: Thresholds,
) -> String {
    let mut out = String::new();
    let ids: Vec<String> = decision
        .evaluations
        .first()
        .map(|e| e.breakdown.terms.keys().cloned().collect())
        .unwrap_or_default();
    let width = decision
        .evaluations
        .iter()
        .map(|e| e.label.len())
        .chain(std::iter::once("candidate".len()))
        .max()
        .unwrap_or(9);

    let _ = writeln!(
        out,
        "day {}: {} candidate(s) scored, {} excluded",
        decision.day,
        decision.evaluations.len(),
        decision.exclusions.len()
    );
    let _ = write!(out, "  {:<width$}", "candidate");
    for id in &ids {
        let _ = write!(out, " {id:>COL$}");
    }
    let _ = writeln!(out, " {:>COL$} {:>COL$} {:>COL$}", "env", "penalty", "total");
    for e in &decision.evaluations {
        let b = &e.breakdown;
        let mark = if e.label == decision.chosen { '*' } else { ' ' };
        let _ = write!(out, "{mark} {:<width$}", e.label);
        for id in &ids {
            let _ = write!(out, " {:>COL$.6}", b.terms[id].weighted);
        }
        let _ = writeln!(
            out,
            " {:>COL$.6} {:>COL$.6} {:>COL$.6}",
            b.env_term, b.penalty, b.total
        );
    }

    let best = decision.chosen_breakdown().total;
    let others: Vec<String> = decision
        .evaluations
        .iter()
        .filter(|e| e.label != decision.chosen)
        .map(|e| {
            let rel = if best < e.breakdown.total { "<" } else { "=" };
            format!("{rel} G({}) = {:.6}", e.label, e.breakdown.total)
        })
        .collect();
    let _ = write!(
        out,
        "chosen {}: G({}) = {best:.6}",
        decision.chosen, decision.chosen
    );
    if !others.is_empty() && others.len() <= 3 {
        let _ = write!(out, " {}", others.join(" "));
    }
    out.push('\n');
    if let Some(note) = &decision.tie_break {
        let _ = writeln!(out, "{note}");
    }

    if explain {
        let v = &decision.verdicts;
        let _ = writeln!(out, "fired norms (theta {}):", thresholds.theta);
        if v.fired.is_empty() {
            let _ = writeln!(out, "  none");
        }
        for f in &v.fired {
            let _ = writeln!(
                out,
                "  {} {} {} weight {:.6} p {:.6}",
                f.id,
                f.modality.keyword(),
                f.action,
                f.weight,
                f.probability
            );
        }
        for c in &v.conflicts {
            let _ = writeln!(
                out,
                "  conflict on {}: obligation {:.6} vs prohibition {:.6}, resolved to {}",
                c.action,
                c.obligation_weight,
                c.prohibition_weight,
                c.resolved_to.keyword()
            );
        }
        let _ = writeln!(out, "exclusions (tau {}):", thresholds.tau);
        if decision.exclusions.is_empty() {
            let _ = writeln!(out, "  none");
        }
        for x in &decision.exclusions {
            let _ = writeln!(
                out,
                "  {} realizes {} (p {:.6})",
                x.candidate, x.forbidden_action, x.probability
            );
        }
        let _ = writeln!(out, "neglected obligations:");
        let mut any = false;
        for e in &decision.evaluations {
            let Some(j) = joint.iter().find(|j| j.label() == e.label) else {
                continue;
            };
            let neglected = neglected_obligations(&j.candidate, v);
            if neglected.is_empty() {
                continue;
            }
            any = true;
            let list: Vec<String> = neglected
                .iter()
                .map(|f| format!("{} ({}, weight {:.6})", f.id, f.action, f.weight))
                .collect();
            let _ = writeln!(out, "  {}: {}", e.label, list.join(", "));
        }
        if !any {
            let _ = writeln!(out, "  none");
        }
    }
    out
}
