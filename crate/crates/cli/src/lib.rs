//! Configuration-driven scattering experiments: spectrum sweeps, field maps
//! and resonance snapshots written as CSV, plus a built-in self-check.

pub mod app;
pub mod config;
pub mod error;
pub mod experiment;
pub mod run;
pub mod selfcheck;

pub use error::CliError;
