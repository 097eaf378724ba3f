//! JSONL trace events and CSV summaries for episodes and training runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::global::DecisionRecord;
use crate::valley::{Allocation, DayRecord, Report, ValleyState};

/// Breakdown totals must re-sum to within this.
pub const AUDIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceEvent {
    Report {
        seq: u64,
        day: u32,
        report: Report,
    },
    Decision {
        seq: u64,
        day: u32,
        decision: DecisionRecord,
    },
    Transition {
        seq: u64,
        day: u32,
        allocation: Allocation,
        units: [u32; 3],
        before: ValleyState,
        after: ValleyState,
    },
    TrainingEpoch {
        seq: u64,
        epoch: usize,
        objective: f64,
        params: BTreeMap<String, f64>,
    },
}

impl TraceEvent {
    pub fn seq(&self) -> u64 {
        match self {
            TraceEvent::Report { seq, .. }
            | TraceEvent::Decision { seq, .. }
            | TraceEvent::Transition { seq, .. }
            | TraceEvent::TrainingEpoch { seq, .. } => *seq,
        }
    }

    /// `(day, kind rank)`; episode events are strictly increasing in it.
    pub fn order_key(&self) -> (u64, u8) {
        match self {
            TraceEvent::Report { day, .. } => (u64::from(*day), 0),
            TraceEvent::Decision { day, .. } => (u64::from(*day), 1),
            TraceEvent::Transition { day, .. } => (u64::from(*day), 2),
            TraceEvent::TrainingEpoch { epoch, .. } => (*epoch as u64, 3),
        }
    }

    pub fn to_json_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("trace events serialize");
        s.push('\n');
        s
    }
}

/// The report, decision and transition events of one day.
pub fn day_events(record: &DayRecord, budget: u32, seq: &mut u64) -> [TraceEvent; 3] {
    let mut next = || {
        let s = *seq;
        *seq += 1;
        s
    };
    [
        TraceEvent::Report {
            seq: next(),
            day: record.day,
            report: record.report.clone(),
        },
        TraceEvent::Decision {
            seq: next(),
            day: record.day,
            decision: record.decision.clone(),
        },
        TraceEvent::Transition {
            seq: next(),
            day: record.day,
            units: record.allocation.units(budget),
            allocation: record.allocation.clone(),
            before: record.before.clone(),
            after: record.after.clone(),
        },
    ]
}

/// Parses every line and checks event order and that every decision's
/// breakdowns re-sum to their totals. Returns the number of events.
pub fn audit_jsonl(text: &str) -> Result<usize, String> {
    let mut last: Option<(u64, u8)> = None;
    let mut count = 0;
    for (i, line) in text.lines().enumerate() {
        let event: TraceEvent = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
        let key = event.order_key();
        if let Some(prev) = last {
            if key <= prev {
                return Err(format!("line {}: event out of order", i + 1));
            }
        }
        last = Some(key);
        if let TraceEvent::Decision { decision, .. } = &event {
            for e in &decision.evaluations {
                let b = &e.breakdown;
                let diff = (b.reconstructed_total() - b.total).abs();
                if diff > AUDIT_TOL {
                    return Err(format!(
                        "line {}: breakdown of `{}` misses its total by {diff}",
                        i + 1,
                        e.label
                    ));
                }
            }
        }
        count += 1;
    }
    Ok(count)
}

/// Column header for per-day summaries with the given agent ids.
pub fn summary_header(agent_ids: &[String]) -> String {
    let mut out = String::from("day,chosen,total");
    for id in agent_ids {
        let _ = write!(out, ",efe.{id}");
    }
    out.push_str(",env,penalty,fired\n");
    out
}

/// One summary row: the chosen candidate's weighted terms and the fired
/// norm ids separated by `;`.
pub fn summary_row(record: &DayRecord, agent_ids: &[String]) -> String {
    let d = &record.decision;
    let b = d.chosen_breakdown();
    let mut out = format!("{},{},{}", record.day, d.chosen, b.total);
    for id in agent_ids {
        let v = b.terms.get(id).map(|t| t.weighted).unwrap_or(0.0);
        let _ = write!(out, ",{v}");
    }
    let fired: Vec<&str> = d.verdicts.fired.iter().map(|f| f.id.as_str()).collect();
    let _ = writeln!(out, ",{},{},{}", b.env_term, b.penalty, fired.join(";"));
    out
}
