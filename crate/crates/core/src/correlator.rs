// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Vertex-corrected stationary correlators in the frequency domain and the
//! resulting noise spectra.
//!
//! With `Π̃(ω)` from [`crate::generator`], the Laplace transform of the
//! stationary correlator is
//!
//! ```text
//! L[⟨A(t)B(0)⟩](ω) = Tr[A Π̃(ω) (B ρ̄ + V_B(ω))]
//! ```
//!
//! where `V_B` is the memory (vertex) correction carried by the bath
//! auxiliary operators at t = 0.  When `[B, H_s] = 0` it collapses to
//!
//! ```text
//! V_B(ω) = −(i/ω) Σ_{ch,σ} [Q^{−σ}, B (C̃_Q^σ(L_s,0) − C̃_Q^σ(L_s,ω)) ρ̄]
//! ```
//!
//! For general `B` the `1/ω` becomes `1/(ω − ω_ik)` inside the eigenframe
//! sum and the two C̃ arguments pick up the outer/inner Bohr frequencies;
//! both forms are implemented and agree where they overlap.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{c_tilde, memory_time, Sign};
use crate::error::{Error, Result};
use crate::generator::{
    markovian_resolvent_with, propagator_resolvent, sigma_tilde, stationary_state, CTildeTable, SystemModel,
};
use crate::liouville::{Operator, SuperOperator, C64, I, ZERO};

/// Default exclusion radius around ω = 0.
pub const DEFAULT_FLOOR: f64 = 1e-3;

// Below this distance from a removable singularity the vertex kernel is
// replaced by its derivative limit.
const RESONANCE_EPS: f64 = 1e-6;
const DERIVATIVE_STEP: f64 = 1e-5;

/// Which vertex expression to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum VertexForm {
    /// Commuting form when `[B, H_s] = 0`, general form otherwise.
    #[default]
    Auto,
    /// The `1/ω` form; only exact when B commutes with H_s.
    Commuting,
    /// The eigenframe form valid for any B.
    General,
}

/// Stationary state plus ω-independent data shared across a sweep.
#[derive(Clone, Debug)]
pub struct Correlator<'m> {
    model: &'m SystemModel,
    rho: Operator,
    rho_e: DMatrix<C64>,
    table0: CTildeTable,
    sigma0: SuperOperator,
    floor: f64,
    form: VertexForm,
}

impl<'m> Correlator<'m> {
    pub fn new(model: &'m SystemModel) -> Result<Self> {
        let rho = stationary_state(model)?;
        Ok(Self::with_state(model, rho))
    }

    /// Uses a caller-supplied stationary state.
    pub fn with_state(model: &'m SystemModel, rho: Operator) -> Self {
        let rho_e = model.frame().to_eigen(&rho);
        Self {
            model,
            rho,
            rho_e,
            table0: CTildeTable::new(model, 0.0),
            sigma0: sigma_tilde(model, 0.0),
            floor: DEFAULT_FLOOR,
            form: VertexForm::Auto,
        }
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn with_vertex_form(mut self, form: VertexForm) -> Self {
        self.form = form;
        self
    }

    pub fn model(&self) -> &SystemModel {
        self.model
    }

    pub fn stationary(&self) -> &Operator {
        &self.rho
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// `Tr[X ρ̄]`.
    pub fn mean(&self, x: &Operator) -> C64 {
        x.expectation(&self.rho)
    }

    fn check(&self, ops: &[&Operator], omega: f64) -> Result<()> {
        if !(omega.abs() >= self.floor) {
            return Err(Error::Range { omega, floor: self.floor });
        }
        for o in ops {
            if o.dim() != self.model.dim() {
                return Err(Error::Dimension(format!("operator d={} on model d={}", o.dim(), self.model.dim())));
            }
        }
        Ok(())
    }

    fn commutes_with_h(&self, x: &Operator) -> bool {
        let h = self.model.hamiltonian();
        x.commutator(h).norm() <= 1e-12 * (x.norm() * h.norm()).max(1e-300)
    }

    fn use_general(&self, x: &Operator) -> bool {
        match self.form {
            VertexForm::Auto => !self.commutes_with_h(x),
            VertexForm::Commuting => false,
            VertexForm::General => true,
        }
    }

    /// Vertex correction `V_B(ω)` for the forward correlator.
    pub fn vertex_forward(&self, b: &Operator, omega: f64) -> Result<Operator> {
        self.check(&[b], omega)?;
        let table = CTildeTable::new(self.model, omega);
        let v = if self.use_general(b) {
            self.vertex_general(&self.model.frame().to_eigen(b), &table, Side::Left)
        } else {
            self.vertex_commuting(&self.model.frame().to_eigen(b), &table, Side::Left)
        };
        Ok(self.model.frame().from_eigen(&v))
    }

    /// Vertex correction for the reverse correlator (A multiplies ρ̄ from the right).
    pub fn vertex_reverse(&self, a: &Operator, omega: f64) -> Result<Operator> {
        self.check(&[a], omega)?;
        let table = CTildeTable::new(self.model, omega);
        let v = if self.use_general(a) {
            self.vertex_general(&self.model.frame().to_eigen(a), &table, Side::Right)
        } else {
            self.vertex_commuting(&self.model.frame().to_eigen(a), &table, Side::Right)
        };
        Ok(self.model.frame().from_eigen(&v))
    }

    fn vertex_commuting(&self, b: &DMatrix<C64>, table: &CTildeTable, side: Side) -> DMatrix<C64> {
        let model = self.model;
        let d = model.dim();
        let mut out = DMatrix::zeros(d, d);
        for c in 0..model.channels().len() {
            for s in Sign::BOTH {
                let diff =
                    self.table0.apply_eigen(model, c, s, &self.rho_e) - table.apply_eigen(model, c, s, &self.rho_e);
                let w = match side {
                    Side::Left => b * diff,
                    Side::Right => diff * b,
                };
                let q = model.q_eigen(c, s.flip());
                out += q * &w - &w * q;
            }
        }
        out * (-I / table.omega)
    }

    fn vertex_general(&self, b: &DMatrix<C64>, table: &CTildeTable, side: Side) -> DMatrix<C64> {
        let model = self.model;
        let d = model.dim();
        let bohr = &model.frame().bohr;
        let omega = table.omega;
        let mut out = DMatrix::zeros(d, d);
        for c in 0..model.channels().len() {
            let lead = model.channels()[c].lead();
            for s in Sign::BOTH {
                let q = model.q_eigen(c, s);
                let p = q * &self.rho_e;
                let r = &self.rho_e * q;
                let (k1_0, k2_0) = &self.table0.k[c][s.index()];
                let (k1_w, k2_w) = &table.k[c][s.index()];
                // ∂/∂ω of the kernels, for the removable singularities.
                let dk1 = |x: f64| {
                    (c_tilde(lead, x + DERIVATIVE_STEP, s) - c_tilde(lead, x - DERIVATIVE_STEP, s))
                        / (2.0 * DERIVATIVE_STEP)
                };
                let dk2 = |x: f64| {
                    ((c_tilde(lead, x + DERIVATIVE_STEP, s.flip()) - c_tilde(lead, x - DERIVATIVE_STEP, s.flip()))
                        / (2.0 * DERIVATIVE_STEP))
                        .conj()
                };
                let mut w = DMatrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        let mut acc = ZERO;
                        for k in 0..d {
                            // Inner index pair (m, n) carries the t = 0 kernel,
                            // `gap` is the pole separation ω − ω_(outer).
                            let (factor, m, n, gap) = match side {
                                Side::Left => (b[(i, k)], k, j, omega - bohr[(i, k)]),
                                Side::Right => (b[(k, j)], i, k, omega - bohr[(k, j)]),
                            };
                            if factor == ZERO {
                                continue;
                            }
                            let (g1, g2) = if gap.abs() < RESONANCE_EPS {
                                (-dk1(-bohr[(m, n)]), dk2(bohr[(m, n)]))
                            } else {
                                ((k1_0[(m, n)] - k1_w[(i, j)]) / gap, (k2_0[(m, n)] - k2_w[(i, j)]) / gap)
                            };
                            acc += factor * (g1 * p[(m, n)] - g2 * r[(m, n)]);
                        }
                        w[(i, j)] = acc;
                    }
                }
                let qm = model.q_eigen(c, s.flip());
                out += qm * &w - &w * qm;
            }
        }
        out * (-I)
    }

    /// `L[⟨A(t)B(0)⟩](ω)`.
    pub fn laplace_forward(&self, a: &Operator, b: &Operator, omega: f64) -> Result<C64> {
        self.check(&[a, b], omega)?;
        let pi = propagator_resolvent(self.model, omega)?;
        let v = self.vertex_forward(b, omega)?;
        let x = &(b * &self.rho) + &v;
        Ok(a.expectation(&pi.apply(&x)?))
    }

    /// The vertex contribution `Tr[A Π̃(ω) V_B(ω)]` alone.
    pub fn vertex_term_forward(&self, a: &Operator, b: &Operator, omega: f64) -> Result<C64> {
        self.check(&[a, b], omega)?;
        let pi = propagator_resolvent(self.model, omega)?;
        Ok(a.expectation(&pi.apply(&self.vertex_forward(b, omega)?)?))
    }

    /// `L[⟨A(0)B(t)⟩](ω)`.
    pub fn laplace_reverse(&self, a: &Operator, b: &Operator, omega: f64) -> Result<C64> {
        self.check(&[a, b], omega)?;
        let pi = propagator_resolvent(self.model, omega)?;
        let v = self.vertex_reverse(a, omega)?;
        let x = &(&self.rho * a) + &v;
        Ok(b.expectation(&pi.apply(&x)?))
    }

    /// `Tr[A Π̃_M(ω) B ρ̄]`: no memory in the propagator, no vertex.
    pub fn laplace_markovian(&self, a: &Operator, b: &Operator, omega: f64) -> Result<C64> {
        self.check(&[a, b], omega)?;
        let pi = markovian_resolvent_with(self.model, omega, &self.sigma0)?;
        Ok(a.expectation(&pi.apply(&(b * &self.rho))?))
    }

    fn centered(&self, a: &Operator, subtract_mean: bool) -> Result<Operator> {
        if a.dim() != self.model.dim() {
            return Err(Error::Dimension(format!("operator d={} on model d={}", a.dim(), self.model.dim())));
        }
        if !a.is_hermitian(1e-12 * a.norm().max(1.0)) {
            return Err(Error::NotHermitian { defect: a.hermiticity_defect() });
        }
        Ok(if subtract_mean { a - &Operator::identity(a.dim()).scale(self.mean(a)) } else { a.clone() })
    }

    /// `S_AA(ω) = 2 Re L[⟨A(t)A(0)⟩]` and `S_c = ω² S_AA` over `omegas`.
    pub fn spectrum(&self, a: &Operator, omegas: &[f64], opts: &SpectrumOptions) -> Result<SpectrumSeries> {
        let a = self.centered(a, opts.subtract_mean)?;
        let (kept, s_n) = self.sweep(omegas, |w| self.laplace_forward(&a, &a, w));
        let mut series = SpectrumSeries::from_columns(kept, s_n);
        self.fill_meta(&mut series, opts, "non-markovian");
        Ok(series)
    }

    /// Memoryless reference spectrum.
    pub fn markovian_spectrum(&self, a: &Operator, omegas: &[f64], opts: &SpectrumOptions) -> Result<SpectrumSeries> {
        let a = self.centered(a, opts.subtract_mean)?;
        let (kept, s_n) = self.sweep(omegas, |w| self.laplace_markovian(&a, &a, w));
        let mut series = SpectrumSeries::from_columns(kept, s_n);
        self.fill_meta(&mut series, opts, "markovian");
        Ok(series)
    }

    /// Non-Markovian spectrum with the Markovian columns attached.
    pub fn spectrum_with_markovian(
        &self,
        a: &Operator,
        omegas: &[f64],
        opts: &SpectrumOptions,
    ) -> Result<SpectrumSeries> {
        let mut series = self.spectrum(a, omegas, opts)?;
        let m = self.markovian_spectrum(a, omegas, opts)?;
        series.markovian = Some(MarkovianColumns { s_n: m.s_n, s_c: m.s_c });
        series.meta.insert("columns".into(), "non-markovian+markovian".into());
        Ok(series)
    }

    // Points inside the floor are dropped; failed points become gaps.
    fn sweep(&self, omegas: &[f64], f: impl Fn(f64) -> Result<C64> + Sync) -> (Vec<f64>, Vec<Option<f64>>) {
        let kept: Vec<f64> = omegas.iter().copied().filter(|w| w.abs() >= self.floor).collect();
        let values: Vec<Option<f64>> = kept
            .par_iter()
            .map(|&w| match f(w) {
                Ok(z) if z.re.is_finite() => Some(2.0 * z.re),
                Ok(_) => {
                    log::warn!("non-finite spectrum value at omega = {w}");
                    None
                }
                Err(e) => {
                    log::warn!("spectrum point omega = {w} failed: {e}");
                    None
                }
            })
            .collect();
        (kept, values)
    }

    fn fill_meta(&self, series: &mut SpectrumSeries, opts: &SpectrumOptions, kind: &str) {
        let gaps = series.gap_count();
        let m = &mut series.meta;
        m.insert("kind".into(), kind.into());
        m.insert("floor".into(), format!("{}", self.floor));
        m.insert("subtract_mean".into(), format!("{}", opts.subtract_mean));
        let tau = self.model.leads().iter().map(|l| memory_time(l)).fold(0.0, f64::max);
        m.insert("memory_time".into(), format!("{tau}"));
        m.insert("gaps".into(), format!("{gaps}"));
    }
}

#[derive(Clone, Copy, Debug)]
enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub subtract_mean: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { subtract_mean: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovianColumns {
    pub s_n: Vec<Option<f64>>,
    pub s_c: Vec<Option<f64>>,
}

/// Sampled spectra; `None` marks a failed point (a gap, never interpolated).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSeries {
    pub omegas: Vec<f64>,
    pub s_n: Vec<Option<f64>>,
    pub s_c: Vec<Option<f64>>,
    pub markovian: Option<MarkovianColumns>,
    pub meta: BTreeMap<String, String>,
}

impl SpectrumSeries {
    /// Builds the series; `s_c = ω² s_n` row by row.
    pub fn from_columns(omegas: Vec<f64>, s_n: Vec<Option<f64>>) -> Self {
        assert_eq!(omegas.len(), s_n.len(), "column lengths differ");
        let s_c = omegas.iter().zip(&s_n).map(|(w, s)| s.map(|v| w * w * v)).collect();
        Self { omegas, s_n, s_c, markovian: None, meta: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn gap_count(&self) -> usize {
        self.s_n.iter().filter(|s| s.is_none()).count()
    }

    /// Fraction of failed points.
    pub fn gap_fraction(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.gap_count() as f64 / self.len() as f64
        }
    }
}

/// `n` evenly spaced points on `[lo, hi]`; an odd symmetric grid hits 0 exactly.
pub fn omega_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Config(format!("invalid omega grid [{lo}, {hi}] with {n} points")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|k| {
            // Symmetric grids produce exactly mirrored values.
            let j = (n - 1 - k) as f64;
            let x = if 2 * k < n { lo + k as f64 * step } else { hi - j * step };
            if x.abs() < 1e-14 * step {
                0.0
            } else {
                x
            }
        })
        .collect())
}

/// A detected step in `S_c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub position: f64,
    /// Signed plateau difference, right minus left.
    pub height: f64,
}

/// Tuning for [`step_analysis`], in frequency units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOptions {
    /// Half-width of the moving average applied to dS_c/dω.
    pub smoothing: f64,
    /// Distance from the step to the start of each plateau fit.
    pub plateau_gap: f64,
    /// Length of each plateau fit.
    pub plateau_len: f64,
    /// Steps smaller than this (absolute, in units of S_c) are reported as
    /// absent; dispersive wiggles of a few 10⁻³ are not steps.
    pub min_height: f64,
}

impl StepOptions {
    /// Scales keyed to the thermal width `kT`, with a detection threshold of
    /// 0.02 for spectra in units where the total coupling Γ is 1.
    pub fn for_temperature(kt: f64) -> Self {
        Self { smoothing: kt, plateau_gap: 5.0 * kt, plateau_len: 5.0 * kt, min_height: 0.02 }
    }
}

/// Locates one step per window as the extremum of the smoothed derivative of
/// `S_c`, and measures its height as the offset between straight-line fits to
/// the plateaus on either side.
pub fn step_analysis(series: &SpectrumSeries, windows: &[(f64, f64)], opts: &StepOptions) -> Vec<Option<Step>> {
    windows.iter().map(|&(lo, hi)| detect_step(&series.omegas, &series.s_c, lo, hi, opts)).collect()
}

fn detect_step(omegas: &[f64], s: &[Option<f64>], lo: f64, hi: f64, opts: &StepOptions) -> Option<Step> {
    let pts: Vec<(f64, f64)> = omegas.iter().zip(s).filter_map(|(&w, v)| v.map(|v| (w, v))).collect();
    if pts.len() < 5 {
        return None;
    }
    // Central-difference derivative at interior points.
    let deriv: Vec<(f64, f64)> = pts.windows(3).map(|t| (t[1].0, (t[2].1 - t[0].1) / (t[2].0 - t[0].0))).collect();
    let smoothed: Vec<(f64, f64)> = deriv
        .iter()
        .map(|&(w, _)| {
            let (sum, n) = deriv
                .iter()
                .filter(|(x, _)| (x - w).abs() <= opts.smoothing)
                .fold((0.0, 0usize), |(s, n), (_, d)| (s + d, n + 1));
            (w, sum / n as f64)
        })
        .collect();
    let inside: Vec<usize> = (0..smoothed.len()).filter(|&k| smoothed[k].0 >= lo && smoothed[k].0 <= hi).collect();
    let &best = inside.iter().max_by(|&&a, &&b| smoothed[a].1.abs().partial_cmp(&smoothed[b].1.abs()).unwrap())?;
    // An extremum on the window edge is a slope, not a step.
    if best == inside[0] || best == *inside.last().unwrap() {
        return None;
    }
    let pos = smoothed[best].0;
    let fit = |a: f64, b: f64| -> Option<f64> {
        let seg: Vec<&(f64, f64)> = pts.iter().filter(|(w, _)| *w >= a && *w <= b).collect();
        if seg.len() < 2 {
            return None;
        }
        let n = seg.len() as f64;
        let mx = seg.iter().map(|p| p.0).sum::<f64>() / n;
        let my = seg.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = seg.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = seg.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        Some(my + slope * (pos - mx))
    };
    let left = fit(pos - opts.plateau_gap - opts.plateau_len, pos - opts.plateau_gap)?;
    let right = fit(pos + opts.plateau_gap, pos + opts.plateau_gap + opts.plateau_len)?;
    let height = right - left;
    if height.abs() < opts.min_height {
        return None;
    }
    Some(Step { position: pos, height })
}
