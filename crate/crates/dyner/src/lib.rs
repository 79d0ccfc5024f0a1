//! Command-line harness for `dyner-core`: experiment configuration files,
//! trace files and seeded Monte Carlo replication campaigns.

pub mod campaign;
pub mod cli;
pub mod config;
pub mod error;
pub mod trace_io;

pub use campaign::{emit_outputs, replication_seed, run_campaign, Campaign, CampaignSummary};
pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
