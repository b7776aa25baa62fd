// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Non-Markovian stationary correlation functions and noise spectra of small
//! open quantum systems coupled to fermionic reservoirs at second order.
//!
//! Two independent routes are provided:
//!
//! * [`correlator`]: the Laplace-domain correlator with the memory vertex
//!   correction, evaluated directly on a frequency sweep;
//! * [`tleom`]: time-local equations of motion with frequency-dispersed
//!   auxiliary operators, propagated in time and Fourier transformed.
//!
//! ```no_run
//! use nmkcorr::{correlator::{omega_grid, Correlator, SpectrumOptions}, models};
//!
//! let preset = models::lookup_one("fig3").unwrap();
//! let corr = Correlator::new(&preset.model).unwrap();
//! let n = preset.model.observable(models::CHARGE).unwrap();
//! let grid = omega_grid(-10.0, 10.0, 2001).unwrap();
//! let series = corr.spectrum(n, &grid, &SpectrumOptions::default()).unwrap();
//! println!("{} points", series.len());
//! ```

pub mod bath;
pub mod correlator;
pub mod error;
pub mod generator;
pub mod liouville;
pub mod models;
pub mod quadrature;
pub mod special;
pub mod tleom;

pub use error::{Error, Result};
