// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: steady states, spectra, two-time correlators and
//! the self-check suite, written as CSV or JSON artifacts.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod timedomain;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::Common;
use crate::config::Format;
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "nmkcorr", version, about = "Non-Markovian current-noise spectra of quantum-dot models")]
pub struct Cli {
    /// Worker threads for frequency sweeps (default: available parallelism).
    #[arg(long, global = true, env = "NMKCORR_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Run configuration (TOML, or JSON when the file starts with `{`).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Named preset; overrides the config's model section.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output file, or directory for preset families (default: stdout).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl From<CommonArgs> for Common {
    fn from(a: CommonArgs) -> Self {
        Common { config: a.config, preset: a.preset, out: a.out, format: a.format }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationary state, residuals and memory times.
    Steady(CommonArgs),
    /// Noise spectrum S_N(ω) and S_c = ω² S_N over a frequency sweep.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Add the memoryless reference columns.
        #[arg(long)]
        markovian: bool,
    },
    /// ⟨N(t)N(0)⟩ from the time-local equations of motion.
    Timecorr {
        #[command(flatten)]
        common: CommonArgs,
        /// Also compare its Fourier transform with the frequency-domain spectrum.
        #[arg(long)]
        compare_spectrum: bool,
    },
    /// Run the invariant suites; exit 1 if any check fails.
    Check {
        /// Extra model whose stationary state is checked.
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// `csv` prints a table.
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Negative control: perturb the digamma evaluator.
        #[arg(long, hide = true, value_name = "DELTA")]
        corrupt_digamma: Option<f64>,
    },
    /// Preset catalogue.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum PresetAction {
    /// List preset names, descriptions and family members.
    List {
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

/// Executes the parsed command.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Steady(c) => commands::steady(&c.into()),
        Command::Spectrum { common, markovian } => commands::spectrum(&common.into(), markovian),
        Command::Timecorr { common, compare_spectrum } => commands::timecorr(&common.into(), compare_spectrum),
        Command::Check { config, format, corrupt_digamma } => {
            commands::check(config.as_deref(), format, corrupt_digamma)
        }
        Command::Preset { action: PresetAction::List { format } } => commands::preset_list(format),
    }
}
