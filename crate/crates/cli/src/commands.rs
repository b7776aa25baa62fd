// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! The subcommands. Every job is resolved and validated before anything is
//! written, so a bad configuration never leaves partial output behind.

use std::path::{Path, PathBuf};

use nmkcorr::bath::memory_time;
use nmkcorr::correlator::{omega_grid, Correlator, SpectrumOptions};
use nmkcorr::generator::{markovian_generator, stationary_state};
use nmkcorr::models;
use serde::Serialize;

use crate::checks;
use crate::config::{resolve, Format, Job, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{self, model_hash, num, Sink, SteadyReport};
use crate::timedomain;

/// Flags shared by the computing commands.
#[derive(Clone, Debug, Default)]
pub struct Common {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Common {
    fn load(&self) -> CliResult<(RunConfig, Vec<Job>)> {
        let config = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let jobs = resolve(&config, self.preset.as_deref())?;
        Ok((config, jobs))
    }

    fn sink(&self, config: &RunConfig, jobs: usize) -> CliResult<Sink> {
        Sink::new(self.out.as_deref().or(config.output.path.as_deref()), jobs)
    }

    fn format(&self, config: &RunConfig, default: Format) -> Format {
        self.format.or(config.output.format).unwrap_or(default)
    }
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

pub fn steady_report(job: &Job) -> CliResult<SteadyReport> {
    let rho = stationary_state(&job.model)?;
    let d = rho.dim();
    let populations: Vec<f64> = (0..d).map(|i| rho.get(i, i).re).collect();
    let coherences = (0..d)
        .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
        .map(|(i, j)| {
            let z = rho.get(i, j);
            (i, j, z.re, z.im)
        })
        .collect();
    let stationarity_residual = markovian_generator(&job.model).apply_op(&rho)?.norm();
    Ok(SteadyReport {
        model: job.name.clone(),
        model_hash: model_hash(job),
        populations,
        coherences,
        trace: rho.trace().re,
        hermiticity_residual: rho.hermiticity_defect(),
        stationarity_residual,
        memory_time: job.leads.iter().map(|l| (l.label.clone(), memory_time(l))).collect(),
        config: job.echo.clone(),
    })
}

pub fn steady(common: &Common) -> CliResult<()> {
    let (config, jobs) = common.load()?;
    let sink = common.sink(&config, jobs.len())?;
    let format = common.format(&config, Format::Json);
    let reports = jobs.iter().map(steady_report).collect::<CliResult<Vec<_>>>()?;
    for (job, r) in jobs.iter().zip(&reports) {
        let text = match format {
            Format::Json => output::pretty(r),
            Format::Csv => output::steady_csv(job, r),
        };
        sink.write(&job.name, ext(format), &text)?;
    }
    Ok(())
}

/// Failed-point fraction above which a sweep is a numerical failure.
pub const MAX_GAP_FRACTION: f64 = 0.01;

pub fn spectrum_series(job: &Job, markovian: bool) -> CliResult<nmkcorr::correlator::SpectrumSeries> {
    let (lo, hi, n) = job.sweep_range();
    let omegas = omega_grid(lo, hi, n)?;
    let s = &job.echo.spectrum;
    let correlator = Correlator::new(&job.model)?.with_floor(s.floor);
    let a = job.model.observable(&s.observable)?;
    let opts = SpectrumOptions { subtract_mean: s.subtract_mean };
    let series = if markovian || s.markovian {
        correlator.spectrum_with_markovian(a, &omegas, &opts)?
    } else {
        correlator.spectrum(a, &omegas, &opts)?
    };
    if series.is_empty() {
        return Err(CliError::Config(format!("every sweep point of '{}' lies inside the floor", job.name)));
    }
    Ok(series)
}

pub fn spectrum(common: &Common, markovian: bool) -> CliResult<()> {
    let (config, jobs) = common.load()?;
    let sink = common.sink(&config, jobs.len())?;
    let format = common.format(&config, Format::Csv);
    let mut failed = Vec::new();
    for job in &jobs {
        let series = spectrum_series(job, markovian)?;
        let text = match format {
            Format::Csv => output::spectrum_csv(job, &series),
            Format::Json => output::spectrum_json(job, &series),
        };
        sink.write(&job.name, ext(format), &text)?;
        let gaps = series.gap_fraction();
        if gaps > MAX_GAP_FRACTION {
            failed.push(format!("{}: {:.1}% of sweep points failed", job.name, 100.0 * gaps));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numeric(failed.join("; ")))
    }
}

/// Default output stride: at most about 2000 rows.
fn default_stride(samples: usize) -> usize {
    samples.div_ceil(2000).max(1)
}

fn compare_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".compare.json");
    PathBuf::from(s)
}

pub fn timecorr(common: &Common, compare_spectrum: bool) -> CliResult<()> {
    let (config, jobs) = common.load()?;
    let sink = common.sink(&config, jobs.len())?;
    let format = common.format(&config, Format::Csv);
    let mut failed = Vec::new();
    for job in &jobs {
        let run = timedomain::run(job)?;
        let stride = job.echo.timedomain.stride.unwrap_or_else(|| default_stride(run.corr.times.len()));
        let mut meta = run.meta(job);
        meta.push(("stride", stride.to_string()));
        let report = if compare_spectrum { Some(timedomain::compare(job, &run)?) } else { None };
        if let Some(r) = &report {
            meta.push(("compare_max_rel_deviation", num(r.max_rel_deviation)));
        }
        let text = match format {
            Format::Csv => output::timecorr_csv(job, &run.corr, stride, &meta),
            Format::Json => output::timecorr_json(job, &run.corr, stride, &meta),
        };
        let written = sink.write(&job.name, ext(format), &text)?;
        if let Some(r) = report {
            let json = output::pretty(&r);
            match written {
                Some(p) => std::fs::write(compare_path(&p), json)
                    .map_err(|e| CliError::Config(format!("cannot write comparison report: {e}")))?,
                None => eprint!("{json}"),
            }
            if !r.pass {
                log::warn!(
                    "{}: routes differ by {:.2}% at omega = {} (threshold {:.0}%)",
                    job.name,
                    100.0 * r.max_rel_deviation,
                    r.worst_omega,
                    100.0 * r.threshold
                );
                failed.push(job.name.clone());
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("route comparison above threshold for {}", failed.join(", "))))
    }
}

pub fn check(config: Option<&Path>, format: Format, corrupt_digamma: Option<f64>) -> CliResult<()> {
    let extra = match config {
        Some(p) => {
            let cfg = RunConfig::load(p)?;
            if cfg.model.is_some() {
                resolve(&cfg, None)?
            } else {
                Vec::new()
            }
        }
        None => Vec::new(),
    };
    if let Some(delta) = corrupt_digamma {
        nmkcorr::special::set_digamma_perturbation(delta);
    }
    let results = checks::run_all(&extra)?;
    output::print_stdout(&match format {
        Format::Csv => checks::render(&results),
        Format::Json => output::pretty(&results),
    })?;
    checks::summarize(&results)
}

#[derive(Serialize)]
struct PresetEntry {
    name: &'static str,
    description: String,
    members: Vec<String>,
}

pub fn preset_list(format: Format) -> CliResult<()> {
    let entries = models::preset_names()
        .into_iter()
        .map(|name| {
            let members = models::lookup(name)?;
            Ok(PresetEntry {
                name,
                description: members[0].description.clone(),
                members: members.iter().map(|m| m.name.clone()).filter(|m| m != name).collect(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let text = match format {
        Format::Json => output::pretty(&entries),
        Format::Csv => entries
            .iter()
            .map(|e| {
                let members = if e.members.is_empty() { String::new() } else { format!(" [{}]", e.members.join(", ")) };
                format!("{:<18} {}{members}\n", e.name, e.description)
            })
            .collect(),
    };
    output::print_stdout(&text)
}
