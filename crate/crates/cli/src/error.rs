// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

/// Failures of a CLI run, each mapped to a fixed exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config or parameters: exit 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// A solver or integrator failed: exit 3.
    #[error("numerical error: {0}")]
    Numeric(String),
    /// The self-check suite found a failure: exit 1.
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::CheckFailed(_) => "check",
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "numeric",
        }
    }

    /// One-line machine-readable form for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            error: &'a str,
            exit_code: u8,
            message: String,
        }
        let message = match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::CheckFailed(m) => m.clone(),
        };
        serde_json::to_string(&Report { error: self.kind(), exit_code: self.exit_code(), message })
            .expect("error report serializes")
    }
}

impl From<nmkcorr::Error> for CliError {
    fn from(e: nmkcorr::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
