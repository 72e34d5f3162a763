//! Config-driven runs of the nlstrain experiments, writing CSV and JSON
//! artifacts named after a hash of the resolved config.

pub mod config;
pub mod run;

pub use config::{Command, PresetRef, RunConfig};
pub use run::{config_hash, execute, run, run_file, Failure, Written, EXIT_ACCEPTANCE, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION};
