//! NAEL agents: discrete active inference, a three-logic symbolic ethics
//! layer, global expected-free-energy action selection and online
//! adaptation, with the Arid Valley water-allocation scenario.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod ethica;
pub mod global;
pub mod infer;
pub mod opinion;
pub mod par;
pub mod trace;
pub mod valley;

pub use infer::{CategoricalDist, EfeBreakdown, GenerativeModel};
pub use opinion::Opinion;
