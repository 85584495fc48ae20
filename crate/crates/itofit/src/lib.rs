//! Configuration-driven experiment runner on top of `itofit-core`.
//!
//! An experiment file names a data-generating system, an observation
//! design, a basis and a test function. [`runner::run_experiment`] simulates
//! the data, estimates the moment curves at every trial point, and sweeps
//! the estimate over a grid of horizons `t`; [`io`] turns the outcome into
//! CSV and JSON files.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod runner;

pub use config::{validate_config, ExperimentConfig};
pub use error::CliError;
pub use runner::{run_experiment, run_mle_demo, RunOptions, RunOutput};

/// Bundled experiment configurations, by name.
pub const BUNDLED_CONFIGS: &[(&str, &str)] = &[
    ("fig1a", include_str!("../configs/fig1a.toml")),
    ("fig1b", include_str!("../configs/fig1b.toml")),
    ("fig2a", include_str!("../configs/fig2a.toml")),
    ("fig2b", include_str!("../configs/fig2b.toml")),
    ("fig3", include_str!("../configs/fig3.toml")),
    ("fig4", include_str!("../configs/fig4.toml")),
    ("mle_demo", include_str!("../configs/mle_demo.toml")),
];

/// Parses the bundled configuration `name`.
pub fn bundled_config(name: &str) -> Option<ExperimentConfig> {
    BUNDLED_CONFIGS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| ExperimentConfig::parse(text).expect("bundled configs parse"))
}
