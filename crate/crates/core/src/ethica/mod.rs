//! The symbolic reasoning layer: a small norm language, graded evaluation of
//! formulas to opinions, deontic verdicts and the action filter.

mod deontic;
mod formula;
mod parser;

use thiserror::Error;

use crate::opinion::OpinionError;

pub use deontic::{
    active_verdicts, eval_formula, filter_actions, holds, neglected_obligations, violation_probability,
    CandidateAction, Conflict, Exclusion, FilterOutcome, FiredNorm, Modality, Norm, Prohibition,
    SymbolicState, Verdicts,
};
pub use formula::Formula;
pub use parser::{parse_formula, parse_norms, parse_norms_with_actions, ParseError};

/// Default firing threshold for norm conditions.
pub const DEFAULT_THETA: f64 = 0.5;
/// Default exclusion threshold for prohibitions.
pub const DEFAULT_TAU: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EthicaError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("duplicate norm id `{0}`")]
    DuplicateNormId(String),
    #[error("norm `{norm}` references unknown action `{action}`")]
    UnknownActionLabel { norm: String, action: String },
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("unknown stakeholder `{0}`")]
    UnknownStakeholder(String),
    #[error("candidate set is empty")]
    EmptyCandidateSet,
    #[error("no permitted action remains ({excluded} excluded)")]
    NoPermittedAction { excluded: usize },
    #[error("threshold {0} outside (0,1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Opinion(#[from] OpinionError),
}
