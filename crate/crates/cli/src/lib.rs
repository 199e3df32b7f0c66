//! Command-line front end: train, decode, sweep, analyze, corpus-stats, synth.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;

use std::collections::BTreeMap;

use args::{Cli, Command};
use config::{read_config_file, RunConfig};
use error::CliError;

/// Resolves the configuration for `cli` and runs its command.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let overrides = cli.command.overrides();
    let file = match &overrides.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    let mut config = RunConfig::resolve(file, overrides.to_map())?;
    match cli.command {
        Command::Train(_) => commands::train::run(&config),
        Command::Decode(_) => commands::decode::run(&mut config),
        Command::Sweep(_) => commands::sweep::run(&mut config),
        Command::Analyze(_) => commands::analyze::run(&config),
        Command::CorpusStats(_) => commands::corpus_stats::run(&config),
        Command::Synth(_) => commands::synth::run(&config),
    }
}
