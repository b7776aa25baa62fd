// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Error type shared by every module of the crate.

use thiserror::Error;

/// Everything that can go wrong inside the numerical core.
///
/// The variants are grouped so that a front end can map them onto a small
/// set of exit codes: `Dimension`/`Config`/`Range` are caller mistakes,
/// the rest are numerical failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("frequency {omega} is below the floor {floor}")]
    Range { omega: f64, floor: f64 },

    #[error("linear system is singular or ill-conditioned (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("resolvent has a pole at omega = {omega} (condition estimate {condition:.3e})")]
    Pole { omega: f64, condition: f64 },

    #[error("expected a one-dimensional kernel, found {found} (smallest singular values {sigma:?})")]
    Kernel { found: usize, sigma: Vec<f64> },

    #[error("kernel element has vanishing trace ({trace:.3e}); cannot normalize")]
    Normalization { trace: f64 },

    #[error("operator is not hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

impl Error {
    /// True for errors caused by the caller's input rather than by numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Dimension(_) | Error::Config(_) | Error::Range { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
