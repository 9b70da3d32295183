//! Scenario runner: domain registry, JSON configuration and artifact emission.

pub mod config;
pub mod output;
pub mod registry;
pub mod run;

pub use config::{DomainRef, Experiment, Scenario};
pub use output::{fmt_f64, Cell, Table};
pub use registry::{build_domain, registry_list, RegistryEntry};
pub use run::{landing_disc, resolve_domain, run_scenario, RunOutcome, EXIT_ERROR, EXIT_FINDING, EXIT_OK};
