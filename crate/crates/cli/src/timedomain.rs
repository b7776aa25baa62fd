// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! The time-domain route for one job, and its comparison with the
//! frequency-domain spectrum of the same (band-limited) system.

use nmkcorr::correlator::{Correlator, SpectrumOptions};
use nmkcorr::generator::SystemModel;
use nmkcorr::liouville::Operator;
use nmkcorr::tleom::{auto_grid, build_grid, spectrum_from_correlation, Preparation, TimeCorrelation, Tleom};
use serde::Serialize;

use crate::config::{Job, PreparationKind};
use crate::error::{CliError, CliResult};
use crate::output::num;

/// A computed two-time correlator with everything needed to report it.
#[derive(Clone, Debug)]
pub struct TimeDomainRun {
    pub model: SystemModel,
    /// Sampled at every integrator step.
    pub corr: TimeCorrelation,
    pub dt: f64,
    pub grid_nodes: usize,
    pub grid_omega_max: f64,
    pub recurrence_time: f64,
    pub mean: f64,
}

impl TimeDomainRun {
    pub fn meta(&self, job: &Job) -> Vec<(&'static str, String)> {
        vec![
            ("observable", job.echo.spectrum.observable.clone()),
            ("subtract_mean", job.echo.spectrum.subtract_mean.to_string()),
            ("mean", num(self.mean)),
            ("dt", num(self.dt)),
            ("grid_nodes", self.grid_nodes.to_string()),
            ("grid_omega_max", num(self.grid_omega_max)),
            ("recurrence_time", num(self.recurrence_time)),
            ("trace_drift", num(self.corr.trace_drift)),
            ("preparation_residual", num(self.corr.preparation_residual)),
        ]
    }
}

// Integrator set-up failures are reported as numerical (exit 3) by the
// time-domain command, unlike malformed configuration (exit 2).
fn integrator(e: nmkcorr::Error) -> CliError {
    CliError::Numeric(format!("integrator: {e}"))
}

/// Runs ⟨A(t)A(0)⟩ for the job's observable on its time-domain model.
pub fn run(job: &Job) -> CliResult<TimeDomainRun> {
    let td = &job.echo.timedomain;
    let model = job.time_domain_model()?;
    let t_max = td.t_max.expect("resolved");
    let t_prep = td.t_prep.expect("resolved");
    let window = t_max + if td.preparation == PreparationKind::Relax { t_prep } else { 0.0 };
    let auto = auto_grid(&model, window, td.scheme).map_err(integrator)?;
    let grid = if td.omega_max.is_some() || td.nodes.is_some() {
        build_grid(td.omega_max.unwrap_or(auto.omega_max), td.nodes.unwrap_or(auto.len()), td.scheme)
            .map_err(integrator)?
    } else {
        auto
    };
    if grid.recurrence_time() < window {
        log::warn!(
            "grid recurrence time {:.3} is shorter than the simulated window {window}; expect revivals",
            grid.recurrence_time()
        );
    }
    let (grid_nodes, grid_omega_max, recurrence_time) = (grid.len(), grid.omega_max, grid.recurrence_time());
    let tl = Tleom::new(&model, grid).map_err(integrator)?;
    let dt = td.dt.unwrap_or_else(|| tl.default_dt());
    let a = model.observable(&job.echo.spectrum.observable)?;
    let correlator = Correlator::new(&model)?;
    let mean = correlator.mean(a).re;
    let a = if job.echo.spectrum.subtract_mean {
        a - &Operator::identity(model.dim()).scale(mean.into())
    } else {
        a.clone()
    };
    let prep = match td.preparation {
        PreparationKind::Relax => Preparation::Relax { t: t_prep },
        PreparationKind::Analytic => Preparation::Analytic { eta: td.eta },
    };
    log::info!("time-domain run '{}': {grid_nodes} nodes, dt = {dt:.3e}, window {window}", job.name);
    let corr = tl.two_time_correlator(&a, &a, t_max, dt, 1, prep).map_err(integrator)?;
    Ok(TimeDomainRun { model, corr, dt, grid_nodes, grid_omega_max, recurrence_time, mean })
}

/// Maximum relative deviation between the two routes over a band.
#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub model: String,
    pub band: f64,
    pub spacing: f64,
    pub points: usize,
    /// Points where the frequency-domain value is below
    /// `significance · max|S|` are not used for the relative measure.
    pub significance: f64,
    pub excluded: usize,
    pub max_rel_deviation: f64,
    pub worst_omega: f64,
    pub threshold: f64,
    pub pass: bool,
}

pub const ROUTE_THRESHOLD: f64 = 0.03;
const SIGNIFICANCE: f64 = 1e-3;

pub fn compare(job: &Job, run: &TimeDomainRun) -> CliResult<CompareReport> {
    let td = &job.echo.timedomain;
    let floor = job.echo.spectrum.floor;
    let n = (td.compare_band / td.compare_spacing).floor() as i64;
    let omegas: Vec<f64> =
        (-n..=n).map(|k| k as f64 * td.compare_spacing).filter(|w| w.abs() >= floor.max(1e-12)).collect();
    let correlator = Correlator::new(&run.model)?.with_floor(floor);
    let opts = SpectrumOptions { subtract_mean: job.echo.spectrum.subtract_mean };
    let freq = correlator.spectrum(run.model.observable(&job.echo.spectrum.observable)?, &omegas, &opts)?;
    let time = spectrum_from_correlation(&run.corr, &omegas, td.taper);
    let scale = freq.s_n.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut worst, mut worst_omega, mut excluded) = (0.0f64, f64::NAN, 0);
    for (k, &w) in omegas.iter().enumerate() {
        match freq.s_n[k] {
            Some(f) if f.abs() >= SIGNIFICANCE * scale => {
                let dev = ((time[k] - f) / f).abs();
                if !(dev <= worst) {
                    worst = dev;
                    worst_omega = w;
                }
            }
            _ => excluded += 1,
        }
    }
    Ok(CompareReport {
        model: job.name.clone(),
        band: td.compare_band,
        spacing: td.compare_spacing,
        points: omegas.len(),
        significance: SIGNIFICANCE,
        excluded,
        max_rel_deviation: worst,
        worst_omega,
        threshold: ROUTE_THRESHOLD,
        pass: worst <= ROUTE_THRESHOLD,
    })
}
