//! Finite, checkable pieces of the consistency argument for New Foundations.
//!
//! `formula` and `stratify` handle typed formulas. `natmodel` builds finite
//! models of typed set theory, `ambiguity` and `web` look for Ramsey-style
//! witnesses, and `fm` is a small permutation-model laboratory.

pub mod formula;
pub mod gen;
pub mod stratify;
pub mod natmodel;
pub mod ambiguity;
pub mod web;
pub mod fm;
pub mod cli;
