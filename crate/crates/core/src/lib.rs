//! Selection-bias mitigation engine.
//!
//! Measures how far derived cohorts drift from a baseline across a hierarchy
//! of dimensions, reweights subgroups so chosen dimensions match the baseline
//! again, scores how risky that reweighting is, and lays the results out for
//! an icicle table and a handful of plots.

pub mod cohort;
pub mod engine;
pub mod error;
pub mod exec;
pub mod ingest;
pub mod layout;
pub mod plots;
pub mod reweight;
pub mod session;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Execution;
