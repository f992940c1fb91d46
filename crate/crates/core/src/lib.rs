//! Local hidden variable (LHV) models for two-qubit Bell scenarios.
//!
//! The crate builds explicit LHV ensembles, evaluates CHSH, CH and Eberhard
//! expressions (genuine and non-genuine forms) on models, quantum predictions
//! or count tables, and estimates critical detection rates by nonnegative
//! least squares.

pub mod analysis;
pub mod error;
pub mod inequalities;
pub mod io;
pub mod lhv;
pub mod outcome;
pub mod quantum;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use outcome::{Outcome, Side, Sign};
