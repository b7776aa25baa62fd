// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

use std::process::ExitCode;

use clap::Parser;
use nmkcorr_cli::error::CliError;
use nmkcorr_cli::Cli;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(CliError::Config(String::new()).exit_code());
        }
    };
    let result = match cli.threads {
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))
            .and_then(|pool| pool.install(|| nmkcorr_cli::run(cli))),
        None => nmkcorr_cli::run(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
