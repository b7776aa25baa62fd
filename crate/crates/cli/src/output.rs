// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Rendering of CSV and JSON artifacts. Everything here is a pure function
//! of its inputs, so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nmkcorr::correlator::SpectrumSeries;
use nmkcorr::tleom::TimeCorrelation;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::Job;
use crate::error::{CliError, CliResult};

pub const SPECTRUM_HEADER: &str = "# nmkcorr-spectrum v1";
pub const TIMECORR_HEADER: &str = "# nmkcorr-timecorr v1";
pub const STEADY_HEADER: &str = "# nmkcorr-steady v1";

/// 12 significant digits in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// First 16 hex digits of SHA-256 over the model definition.
pub fn model_hash(job: &Job) -> String {
    let canonical = serde_json::to_string(&json!({ "kind": job.kind, "leads": job.leads })).expect("model serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn meta_lines(job: &Job, extra: &[(&str, String)]) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: &str| {
        let _ = writeln!(out, "# {k}: {v}");
    };
    line("model", &job.name);
    line("model_hash", &model_hash(job));
    line("parameters", &serde_json::to_string(&json!({ "kind": job.kind, "leads": job.leads })).unwrap());
    for (k, v) in extra {
        line(k, v);
    }
    for note in &job.notes {
        line("note", note);
    }
    for e in &job.expected {
        line("expected", &format!("{} = {} ({})", e.name, e.value, e.provenance));
    }
    line("config", &serde_json::to_string(&job.echo).unwrap());
    line("version", env!("CARGO_PKG_VERSION"));
    out
}

fn series_meta<'a>(job: &'a Job, series: &'a SpectrumSeries) -> Vec<(&'a str, String)> {
    let mut extra = vec![("observable", job.echo.spectrum.observable.clone())];
    extra.extend(series.meta.iter().map(|(k, v)| (k.as_str(), v.clone())));
    extra
}

pub fn spectrum_csv(job: &Job, series: &SpectrumSeries) -> String {
    let mut out = String::new();
    out.push_str(SPECTRUM_HEADER);
    out.push('\n');
    out.push_str(&meta_lines(job, &series_meta(job, series)));
    let markov = series.markovian.as_ref();
    out.push_str(if markov.is_some() { "omega,s_n,s_c,s_n_markov,s_c_markov\n" } else { "omega,s_n,s_c\n" });
    for k in 0..series.len() {
        let _ = write!(out, "{},{},{}", num(series.omegas[k]), opt(series.s_n[k]), opt(series.s_c[k]));
        if let Some(m) = markov {
            let _ = write!(out, ",{},{}", opt(m.s_n[k]), opt(m.s_c[k]));
        }
        out.push('\n');
    }
    out
}

pub fn spectrum_json(job: &Job, series: &SpectrumSeries) -> String {
    let mut columns = serde_json::Map::new();
    columns.insert("omega".into(), json!(series.omegas));
    columns.insert("s_n".into(), json!(series.s_n));
    columns.insert("s_c".into(), json!(series.s_c));
    if let Some(m) = &series.markovian {
        columns.insert("s_n_markov".into(), json!(m.s_n));
        columns.insert("s_c_markov".into(), json!(m.s_c));
    }
    let doc = json!({
        "format": "nmkcorr-spectrum v1",
        "model": job.name,
        "model_hash": model_hash(job),
        "meta": series.meta,
        "config": job.echo,
        "columns": columns,
    });
    pretty(&doc)
}

pub fn timecorr_csv(job: &Job, corr: &TimeCorrelation, stride: usize, extra: &[(&str, String)]) -> String {
    let mut out = String::new();
    out.push_str(TIMECORR_HEADER);
    out.push('\n');
    out.push_str(&meta_lines(job, extra));
    out.push_str("t,re,im\n");
    for k in (0..corr.times.len()).step_by(stride.max(1)) {
        let z = corr.values[k];
        let _ = writeln!(out, "{},{},{}", num(corr.times[k]), num(z.re), num(z.im));
    }
    out
}

pub fn timecorr_json(job: &Job, corr: &TimeCorrelation, stride: usize, extra: &[(&str, String)]) -> String {
    let pick = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..corr.times.len()).step_by(stride.max(1)).map(f).collect() };
    let meta: serde_json::Map<String, serde_json::Value> =
        extra.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let doc = json!({
        "format": "nmkcorr-timecorr v1",
        "model": job.name,
        "model_hash": model_hash(job),
        "meta": meta,
        "config": job.echo,
        "columns": {
            "t": pick(&|k| corr.times[k]),
            "re": pick(&|k| corr.values[k].re),
            "im": pick(&|k| corr.values[k].im),
        },
    });
    pretty(&doc)
}

/// Stationary-state summary for one job.
#[derive(Clone, Debug, Serialize)]
pub struct SteadyReport {
    pub model: String,
    pub model_hash: String,
    pub populations: Vec<f64>,
    /// `(i, j, re, im)` for i < j.
    pub coherences: Vec<(usize, usize, f64, f64)>,
    pub trace: f64,
    pub hermiticity_residual: f64,
    pub stationarity_residual: f64,
    pub memory_time: Vec<(String, f64)>,
    pub config: crate::config::RunConfig,
}

pub fn steady_csv(job: &Job, r: &SteadyReport) -> String {
    let mut out = String::new();
    out.push_str(STEADY_HEADER);
    out.push('\n');
    let mut extra = vec![
        ("trace", num(r.trace)),
        ("hermiticity_residual", num(r.hermiticity_residual)),
        ("stationarity_residual", num(r.stationarity_residual)),
    ];
    for (label, tau) in &r.memory_time {
        extra.push(("memory_time", format!("{label} {}", num(*tau))));
    }
    out.push_str(&meta_lines(job, &extra));
    out.push_str("i,j,re,im\n");
    for (i, p) in r.populations.iter().enumerate() {
        let _ = writeln!(out, "{i},{i},{},{}", num(*p), num(0.0));
    }
    for &(i, j, re, im) in &r.coherences {
        let _ = writeln!(out, "{i},{j},{},{}", num(re), num(im));
    }
    out
}

pub fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

/// Writes to stdout, reporting a closed pipe as an error instead of panicking.
pub fn print_stdout(content: &str) -> CliResult<()> {
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(content.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::Config(format!("cannot write to stdout: {e}")))
}

/// Where artifacts go: stdout, one file, or one file per job in a directory.
#[derive(Clone, Debug)]
pub enum Sink {
    Stdout,
    File(PathBuf),
    Dir(PathBuf),
}

impl Sink {
    /// `--out` semantics: a directory when several jobs are written.
    pub fn new(out: Option<&Path>, jobs: usize) -> CliResult<Self> {
        match (out, jobs) {
            (None, 1) => Ok(Sink::Stdout),
            (None, _) => Err(CliError::Config(format!("{jobs} models in this preset family: give --out DIR"))),
            (Some(p), 1) if !p.is_dir() => Ok(Sink::File(p.to_path_buf())),
            (Some(p), _) => Ok(Sink::Dir(p.to_path_buf())),
        }
    }

    /// Path written for `job` with extension `ext`, if any.
    pub fn path_for(&self, job: &str, ext: &str) -> Option<PathBuf> {
        match self {
            Sink::Stdout => None,
            Sink::File(p) => Some(p.clone()),
            Sink::Dir(d) => Some(d.join(format!("{job}.{ext}"))),
        }
    }

    pub fn write(&self, job: &str, ext: &str, content: &str) -> CliResult<Option<PathBuf>> {
        match self.path_for(job, ext) {
            None => {
                print_stdout(content)?;
                Ok(None)
            }
            Some(path) => {
                if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                    std::fs::create_dir_all(parent)
                        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", parent.display())))?;
                }
                std::fs::write(&path, content)
                    .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
                log::info!("wrote {}", path.display());
                Ok(Some(path))
            }
        }
    }
}
