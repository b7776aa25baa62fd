// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration: a TOML or JSON key tree, resolved into concrete jobs.

use std::path::{Path, PathBuf};

use nmkcorr::bath::{LeadSpec, SoftBand};
use nmkcorr::correlator::DEFAULT_FLOOR;
use nmkcorr::generator::SystemModel;
use nmkcorr::models::{self, Expected, ModelKind, SweepDefaults, TimeDomainDefaults};
use nmkcorr::tleom::GridScheme;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Output encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// The system to simulate: a named preset or explicit parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSection {
    Preset { name: String },
    SingleDot { epsilon: f64 },
    AndersonDot { epsilon_up: f64, epsilon_down: f64, u: f64 },
    DoubleDot { eps_l: f64, eps_r: f64, u: f64, omega: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub markovian: bool,
    #[serde(default = "yes")]
    pub subtract_mean: bool,
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default = "default_observable")]
    pub observable: String,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            omega_min: None,
            omega_max: None,
            points: None,
            markovian: false,
            subtract_mean: true,
            floor: DEFAULT_FLOOR,
            observable: default_observable(),
        }
    }
}

/// How the stationary extended state is prepared.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreparationKind {
    #[default]
    Relax,
    Analytic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeDomainSection {
    pub t_max: Option<f64>,
    /// Relaxation time for `preparation = "relax"`.
    pub t_prep: Option<f64>,
    pub dt: Option<f64>,
    /// Grid half-span; sized automatically when absent.
    pub omega_max: Option<f64>,
    pub nodes: Option<usize>,
    #[serde(default)]
    pub scheme: GridScheme,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub preparation: PreparationKind,
    /// Replace the leads' spectral densities by a soft band (needed for a
    /// finite frequency grid); the band's shape comes from the preset or
    /// the two fields below.
    #[serde(default = "yes")]
    pub soft_band: bool,
    pub band_half_width: Option<f64>,
    pub band_edge_width: Option<f64>,
    /// Write every `stride`-th sample.
    pub stride: Option<usize>,
    /// Half-width of the band |ω| ≤ compare_band used by `--compare-spectrum`.
    #[serde(default = "default_compare_band")]
    pub compare_band: f64,
    #[serde(default = "default_compare_spacing")]
    pub compare_spacing: f64,
    /// Fraction of the window tapered before the Fourier sum.
    #[serde(default = "default_taper")]
    pub taper: f64,
}

impl Default for TimeDomainSection {
    fn default() -> Self {
        Self {
            t_max: None,
            t_prep: None,
            dt: None,
            omega_max: None,
            nodes: None,
            scheme: GridScheme::default(),
            eta: default_eta(),
            preparation: PreparationKind::default(),
            soft_band: true,
            band_half_width: None,
            band_edge_width: None,
            stride: None,
            compare_band: default_compare_band(),
            compare_spacing: default_compare_spacing(),
            taper: default_taper(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Everything a run needs; sections mirror the commands.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub leads: Vec<LeadSpec>,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub timedomain: TimeDomainSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn yes() -> bool {
    true
}
fn default_floor() -> f64 {
    DEFAULT_FLOOR
}
fn default_observable() -> String {
    models::CHARGE.to_string()
}
fn default_eta() -> f64 {
    1e-6
}
fn default_compare_band() -> f64 {
    10.0
}
fn default_compare_spacing() -> f64 {
    0.25
}
fn default_taper() -> f64 {
    0.1
}

impl RunConfig {
    /// Parses strict JSON (when the text starts with `{`) or TOML.
    pub fn parse(text: &str) -> CliResult<Self> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON config: {e}")))
        } else {
            toml::from_str(text).map_err(|e| CliError::Config(format!("invalid TOML config: {e}")))
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// One concrete system to run, with its defaults and a re-runnable echo.
#[derive(Clone, Debug)]
pub struct Job {
    pub name: String,
    pub preset: Option<String>,
    pub kind: ModelKind,
    pub leads: Vec<LeadSpec>,
    pub model: SystemModel,
    pub sweep: SweepDefaults,
    pub time_domain: TimeDomainDefaults,
    pub expected: Vec<Expected>,
    pub notes: Vec<String>,
    /// The effective configuration for this job alone.
    pub echo: RunConfig,
}

impl Job {
    /// Sweep grid parameters after applying config overrides.
    pub fn sweep_range(&self) -> (f64, f64, usize) {
        let s = &self.echo.spectrum;
        (
            s.omega_min.unwrap_or(self.sweep.omega_min),
            s.omega_max.unwrap_or(self.sweep.omega_max),
            s.points.unwrap_or(self.sweep.points),
        )
    }

    /// The model used by the time-domain route.
    pub fn time_domain_model(&self) -> CliResult<SystemModel> {
        let td = &self.echo.timedomain;
        if !td.soft_band {
            return Ok(self.model.clone());
        }
        let band = SoftBand {
            center: 0.0,
            half_width: td.band_half_width.unwrap_or(self.time_domain.band_half_width),
            edge_width: td.band_edge_width.unwrap_or(self.time_domain.band_edge_width),
        };
        Ok(self.model.map_leads(|l| l.clone().with_band(band))?)
    }
}

const DEFAULT_SWEEP: SweepDefaults = SweepDefaults { omega_min: -10.0, omega_max: 10.0, points: 2001 };
const DEFAULT_TD: TimeDomainDefaults =
    TimeDomainDefaults { t_max: 50.0, t_prep: 25.0, band_half_width: 12.0, band_edge_width: 1.0 };

/// Resolves `config` (with an optional `--preset` override) into jobs.
/// Families produce one job per member.
pub fn resolve(config: &RunConfig, preset: Option<&str>) -> CliResult<Vec<Job>> {
    let section = match (preset, &config.model) {
        (Some(name), _) => ModelSection::Preset { name: name.to_string() },
        (None, Some(m)) => m.clone(),
        (None, None) => return Err(CliError::Config("no model: give --preset NAME or a [model] section".into())),
    };
    validate_sections(config)?;
    let jobs = match section {
        ModelSection::Preset { name } => models::lookup(&name)?
            .into_iter()
            .map(|p| {
                let leads = if config.leads.is_empty() { p.leads.clone() } else { config.leads.clone() };
                let model = if config.leads.is_empty() { p.model.clone() } else { p.kind.build(&leads)? };
                Ok(Job {
                    name: p.name.clone(),
                    preset: Some(p.name.clone()),
                    kind: p.kind.clone(),
                    leads,
                    model,
                    sweep: p.sweep,
                    time_domain: p.time_domain,
                    expected: p.expected.clone(),
                    notes: p.notes.clone(),
                    echo: RunConfig::default(),
                })
            })
            .collect::<CliResult<Vec<_>>>()?,
        explicit => {
            if config.leads.is_empty() {
                return Err(CliError::Config("explicit models need a [[leads]] list".into()));
            }
            let kind = match explicit {
                ModelSection::SingleDot { epsilon } => ModelKind::SingleDot { epsilon },
                ModelSection::AndersonDot { epsilon_up, epsilon_down, u } => {
                    ModelKind::AndersonDot { epsilon_up, epsilon_down, u }
                }
                ModelSection::DoubleDot { eps_l, eps_r, u, omega } => ModelKind::DoubleDot { eps_l, eps_r, u, omega },
                ModelSection::Preset { .. } => unreachable!("handled above"),
            };
            let model = kind.build(&config.leads)?;
            vec![Job {
                name: "custom".into(),
                preset: None,
                kind,
                leads: config.leads.clone(),
                model,
                sweep: DEFAULT_SWEEP,
                time_domain: DEFAULT_TD,
                expected: Vec::new(),
                notes: Vec::new(),
                echo: RunConfig::default(),
            }]
        }
    };
    jobs.into_iter().map(|job| finish_job(job, config)).collect()
}

fn validate_sections(config: &RunConfig) -> CliResult<()> {
    let s = &config.spectrum;
    let bad = |m: String| Err(CliError::Config(m));
    if let Some(p) = s.points {
        if p < 2 {
            return bad(format!("spectrum.points must be >= 2, got {p}"));
        }
    }
    if let (Some(lo), Some(hi)) = (s.omega_min, s.omega_max) {
        if !(hi > lo) {
            return bad(format!("spectrum.omega_max ({hi}) must exceed omega_min ({lo})"));
        }
    }
    if !(s.floor > 0.0 && s.floor.is_finite()) {
        return bad(format!("spectrum.floor must be > 0, got {}", s.floor));
    }
    let t = &config.timedomain;
    for (name, v) in [("t_max", t.t_max), ("t_prep", t.t_prep), ("dt", t.dt), ("omega_max", t.omega_max)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("timedomain.{name} must be > 0, got {v}"));
            }
        }
    }
    if matches!(t.nodes, Some(n) if n < 2) || matches!(t.stride, Some(0)) {
        return bad("timedomain.nodes must be >= 2 and stride >= 1".into());
    }
    if !(t.eta > 0.0 && t.compare_band > 0.0 && t.compare_spacing > 0.0 && (0.0..1.0).contains(&t.taper)) {
        return bad("timedomain.eta, compare_band, compare_spacing must be > 0 and taper in [0, 1)".into());
    }
    for l in &config.leads {
        l.validate()?;
    }
    Ok(())
}

/// Fills the job's echo with every value that determines its output.
fn finish_job(mut job: Job, config: &RunConfig) -> CliResult<Job> {
    let mut echo = config.clone();
    echo.model = Some(match &job.preset {
        Some(name) => ModelSection::Preset { name: name.clone() },
        None => match job.kind {
            ModelKind::SingleDot { epsilon } => ModelSection::SingleDot { epsilon },
            ModelKind::AndersonDot { epsilon_up, epsilon_down, u } => {
                ModelSection::AndersonDot { epsilon_up, epsilon_down, u }
            }
            ModelKind::DoubleDot { eps_l, eps_r, u, omega } => ModelSection::DoubleDot { eps_l, eps_r, u, omega },
        },
    });
    echo.leads = job.leads.clone();
    let s = &mut echo.spectrum;
    s.omega_min = Some(s.omega_min.unwrap_or(job.sweep.omega_min));
    s.omega_max = Some(s.omega_max.unwrap_or(job.sweep.omega_max));
    s.points = Some(s.points.unwrap_or(job.sweep.points));
    if s.omega_max <= s.omega_min {
        return Err(CliError::Config(format!("empty sweep [{:?}, {:?}]", s.omega_min, s.omega_max)));
    }
    let t = &mut echo.timedomain;
    t.t_max = Some(t.t_max.unwrap_or(job.time_domain.t_max));
    t.t_prep = Some(t.t_prep.unwrap_or(job.time_domain.t_prep));
    if t.soft_band {
        t.band_half_width = Some(t.band_half_width.unwrap_or(job.time_domain.band_half_width));
        t.band_edge_width = Some(t.band_edge_width.unwrap_or(job.time_domain.band_edge_width));
    }
    // Output location is not part of what determines the numbers.
    echo.output = OutputSection::default();
    job.model.observable(&echo.spectrum.observable)?;
    job.echo = echo;
    Ok(job)
}
