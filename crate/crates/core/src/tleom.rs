// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Time-local equations of motion with frequency-dispersed auxiliary
//! operators, and the two-time correlators obtained by propagating the
//! extended state.
//!
//! ```text
//! ρ̇      = −i L_s ρ − i Σ_{ch,σ} ∫dω/2π [Q^{−σ}, φ^σ(ω)]
//! φ̇^σ(ω) = −i (L_s − σω) φ^σ(ω) − i (C^σ(ω) Q^σ ρ − C^{−σ}(ω) ρ Q^σ)
//! ```
//!
//! The ω integral is replaced by a quadrature sum over a [`FrequencyGrid`]
//! and the system is integrated with fixed-step RK4 in the H_s eigenframe.
//!
//! A discretized bath revives after `2π/Δω`, where Δω is the local node
//! spacing; trajectories must be shorter than that.  For this reason the
//! uniform trapezoid rule is the default: Gauss–Legendre clusters nodes at
//! the edges and has the *coarsest* spacing in the centre, where the Bohr
//! frequencies sit.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bath::{c_omega, Sign};
use crate::error::{Error, Result};
use crate::generator::{stationary_state, SystemModel};
use crate::liouville::{Operator, C64, I, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GridScheme {
    #[default]
    Trapezoid,
    GaussLegendre,
}

/// Quadrature nodes and weights for `∫dω/2π` on `[−Ω_max, Ω_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    pub nodes: Vec<f64>,
    /// Weights already include the 1/2π.
    pub weights: Vec<f64>,
    pub omega_max: f64,
    pub scheme: GridScheme,
}

impl FrequencyGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest gap between neighbouring nodes.
    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Time after which the discretized bath revives.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.max_spacing()
    }
}

/// Nodes and weights for `n` points on `[−Ω_max, Ω_max]`.
pub fn build_grid(omega_max: f64, n: usize, scheme: GridScheme) -> Result<FrequencyGrid> {
    if !(omega_max > 0.0 && omega_max.is_finite()) || n < 2 {
        return Err(Error::Config(format!("grid needs omega_max > 0 and n >= 2 (got {omega_max}, {n})")));
    }
    let (nodes, weights) = match scheme {
        GridScheme::Trapezoid => {
            let h = 2.0 * omega_max / (n - 1) as f64;
            let nodes = (0..n).map(|k| -omega_max + k as f64 * h).collect();
            let weights = (0..n).map(|k| if k == 0 || k == n - 1 { 0.5 * h } else { h } / (2.0 * PI)).collect();
            (nodes, weights)
        }
        GridScheme::GaussLegendre => {
            let (x, w) = gauss_legendre(n);
            (x.iter().map(|t| t * omega_max).collect(), w.iter().map(|v| v * omega_max / (2.0 * PI)).collect())
        }
    };
    Ok(FrequencyGrid { nodes, weights, omega_max, scheme })
}

/// Grid covering [`required_span`] (rounded up, plus one unit of margin)
/// whose recurrence time exceeds `total_time` by 25%.
pub fn auto_grid(model: &SystemModel, total_time: f64, scheme: GridScheme) -> Result<FrequencyGrid> {
    if !(total_time > 0.0 && total_time.is_finite()) {
        return Err(Error::Config(format!("total time must be positive, got {total_time}")));
    }
    let omega_max = required_span(model).ceil() + 1.0;
    let spacing = 2.0 * PI / (1.25 * total_time);
    let uniform = (2.0 * omega_max / spacing).ceil() as usize + 1;
    let n = match scheme {
        GridScheme::Trapezoid => uniform,
        // Legendre nodes are sparsest at the centre, by a factor π/2.
        GridScheme::GaussLegendre => (uniform as f64 * PI / 2.0).ceil() as usize,
    };
    build_grid(omega_max, n, scheme)
}

/// Legendre nodes/weights on [−1, 1] by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 1 { (z, 1.0) } else { (p1, p0) };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Span required to cover Bohr frequencies, chemical potentials and the
/// thermal/band edges of every lead.
pub fn required_span(model: &SystemModel) -> f64 {
    let mut span = model.max_bohr();
    for lead in model.leads() {
        let mut need = lead.mu.abs() + 10.0 / lead.beta;
        if let Some(b) = &lead.band {
            need = need.max(b.center.abs() + b.half_width + 10.0 * b.edge_width);
        }
        span = span.max(need + model.max_bohr());
    }
    span
}

/// ρ plus φ^σ_ch(ω_k) for every channel, sign and node, in the H_s
/// eigenframe. Layout: `ρ`, then `[channel][sign][node]` blocks of d².
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedState {
    dim: usize,
    channels: usize,
    nodes: usize,
    data: Vec<C64>,
}

impl ExtendedState {
    fn zeros(dim: usize, channels: usize, nodes: usize) -> Self {
        Self { dim, channels, nodes, data: vec![ZERO; dim * dim * (1 + 2 * channels * nodes)] }
    }

    fn block(&self, c: usize, s: Sign, k: usize) -> usize {
        let d2 = self.dim * self.dim;
        d2 * (1 + (c * 2 + s.index()) * self.nodes + k)
    }

    /// Trace of the ρ component (basis independent).
    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// Euclidean norm of all components.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Norm of the ρ component.
    pub fn rho_norm(&self) -> f64 {
        self.data[..self.dim * self.dim].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &ExtendedState) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    fn axpy(&mut self, a: f64, x: &ExtendedState) {
        for (y, x) in self.data.iter_mut().zip(&x.data) {
            *y += x * a;
        }
    }
}

fn to_mat(dim: usize, slice: &[C64]) -> DMatrix<C64> {
    DMatrix::from_column_slice(dim, dim, slice)
}

/// The extended generator for one model on one grid.
#[derive(Clone, Debug)]
pub struct Tleom<'m> {
    model: &'m SystemModel,
    grid: FrequencyGrid,
    // C^σ(ω_k) per [channel][sign][node].
    c_nodes: Vec<[Vec<f64>; 2]>,
}

/// Result of a trajectory: final state and bookkeeping.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub state: ExtendedState,
    pub steps: usize,
    /// Largest |Tr ρ(t) − Tr ρ(0)| seen.
    pub trace_drift: f64,
}

/// How the stationary extended state is prepared before applying B.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Preparation {
    /// Start from (ρ̄, φ = 0) and integrate for `t`; lands on the exact
    /// stationary point of the *discretized* system.
    Relax { t: f64 },
    /// Closed-form auxiliary operators at the nodes, regularized by η.
    Analytic { eta: f64 },
}

impl Default for Preparation {
    fn default() -> Self {
        Preparation::Relax { t: 25.0 }
    }
}

/// Sampled two-time correlator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeCorrelation {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
    /// Trace drift of the propagated (B-multiplied) state.
    pub trace_drift: f64,
    /// Residual ‖dρ/dt‖ of the prepared stationary state. The auxiliary modes
    /// are undamped node by node, so only the reduced block is meaningful.
    pub preparation_residual: f64,
}

impl<'m> Tleom<'m> {
    pub fn new(model: &'m SystemModel, grid: FrequencyGrid) -> Result<Self> {
        let need = required_span(model);
        if grid.omega_max < need {
            return Err(Error::Config(format!(
                "frequency grid span {} is below the required {need:.4}",
                grid.omega_max
            )));
        }
        let c_nodes = model
            .channels()
            .iter()
            .map(|ch| {
                let col = |s: Sign| grid.nodes.iter().map(|&w| c_omega(ch.lead(), w, s)).collect();
                [col(Sign::Plus), col(Sign::Minus)]
            })
            .collect();
        Ok(Self { model, grid, c_nodes })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn model(&self) -> &SystemModel {
        self.model
    }

    /// Largest step allowed: `0.1 / max(|ω_k|, |ω_ij|)`.
    pub fn max_dt(&self) -> f64 {
        0.1 / self.grid.omega_max.max(self.model.max_bohr()).max(1e-300)
    }

    /// `0.05 / max scale`.
    pub fn default_dt(&self) -> f64 {
        0.5 * self.max_dt()
    }

    /// (ρ, φ ≡ 0) with ρ given in the computational basis.
    pub fn initial_state(&self, rho: &Operator) -> ExtendedState {
        let d = self.model.dim();
        let mut st = ExtendedState::zeros(d, self.model.channels().len(), self.grid.len());
        st.data[..d * d].copy_from_slice(self.model.frame().to_eigen(rho).as_slice());
        st
    }

    pub fn rho(&self, st: &ExtendedState) -> Operator {
        let d = st.dim;
        self.model.frame().from_eigen(&to_mat(d, &st.data[..d * d]))
    }

    pub fn phi(&self, st: &ExtendedState, channel: usize, sign: Sign, node: usize) -> Operator {
        let d = st.dim;
        let o = st.block(channel, sign, node);
        self.model.frame().from_eigen(&to_mat(d, &st.data[o..o + d * d]))
    }

    /// Time derivative of the extended state.
    pub fn rhs(&self, st: &ExtendedState) -> ExtendedState {
        let mut out = ExtendedState::zeros(st.dim, st.channels, st.nodes);
        self.rhs_into(st, &mut out);
        out
    }

    fn rhs_into(&self, st: &ExtendedState, out: &mut ExtendedState) {
        let d = st.dim;
        let d2 = d * d;
        let bohr = &self.model.frame().bohr;
        let rho = to_mat(d, &st.data[..d2]);
        let mut drho = DMatrix::from_fn(d, d, |i, j| -I * bohr[(i, j)] * rho[(i, j)]);

        for c in 0..st.channels {
            for s in Sign::BOTH {
                let q = self.model.q_eigen(c, s);
                let q_rho = q * &rho;
                let rho_q = &rho * q;
                let cs = &self.c_nodes[c][s.index()];
                let cm = &self.c_nodes[c][s.flip().index()];
                let sv = s.value();
                let mut acc = DMatrix::<C64>::zeros(d, d);
                for k in 0..st.nodes {
                    let o = st.block(c, s, k);
                    let phi = &st.data[o..o + d2];
                    let dphi = &mut out.data[o..o + d2];
                    let wk = self.grid.nodes[k];
                    let weight = self.grid.weights[k];
                    for j in 0..d {
                        for i in 0..d {
                            let idx = j * d + i;
                            let src = q_rho[(i, j)] * cs[k] - rho_q[(i, j)] * cm[k];
                            dphi[idx] = -I * ((bohr[(i, j)] - sv * wk) * phi[idx] + src);
                            acc[(i, j)] += phi[idx] * weight;
                        }
                    }
                }
                let qm = self.model.q_eigen(c, s.flip());
                drho -= (qm * &acc - &acc * qm) * I;
            }
        }
        out.data[..d2].copy_from_slice(drho.as_slice());
    }

    fn check_dt(&self, dt: f64) -> Result<()> {
        let max = self.max_dt();
        if !(dt > 0.0) || dt > max * (1.0 + 1e-12) {
            return Err(Error::Config(format!("time step {dt} exceeds the stability bound {max:.4e}")));
        }
        Ok(())
    }

    /// Classic RK4 with `round(t_final/dt)` steps of size `dt`; `observe`
    /// sees the state at t = 0 and after every step.
    pub fn evolve(
        &self,
        state0: &ExtendedState,
        t_final: f64,
        dt: f64,
        mut observe: impl FnMut(f64, &ExtendedState),
    ) -> Result<Trajectory> {
        self.check_dt(dt)?;
        let steps = (t_final / dt).round() as usize;
        let tr0 = state0.trace();
        let mut y = state0.clone();
        let mut k1 = y.clone();
        let mut k2 = y.clone();
        let mut k3 = y.clone();
        let mut k4 = y.clone();
        let mut tmp = y.clone();
        let mut drift: f64 = 0.0;
        observe(0.0, &y);
        for n in 0..steps {
            self.rhs_into(&y, &mut k1);
            tmp.data.copy_from_slice(&y.data);
            tmp.axpy(0.5 * dt, &k1);
            self.rhs_into(&tmp, &mut k2);
            tmp.data.copy_from_slice(&y.data);
            tmp.axpy(0.5 * dt, &k2);
            self.rhs_into(&tmp, &mut k3);
            tmp.data.copy_from_slice(&y.data);
            tmp.axpy(dt, &k3);
            self.rhs_into(&tmp, &mut k4);
            for idx in 0..y.data.len() {
                y.data[idx] += (k1.data[idx] + (k2.data[idx] + k3.data[idx]) * 2.0 + k4.data[idx]) * (dt / 6.0);
            }
            drift = drift.max((y.trace() - tr0).norm());
            if !y.data[0].re.is_finite() {
                return Err(Error::NonFinite(format!("trajectory diverged at step {n}")));
            }
            observe((n + 1) as f64 * dt, &y);
        }
        Ok(Trajectory { state: y, steps, trace_drift: drift })
    }

    /// Closed-form stationary auxiliary operator at one frequency:
    /// `(C_Q^σ(ω) ρ̄)_ij / (σω − ω_ij + iη)` in the eigenframe.
    pub fn stationary_aux(&self, rho: &Operator, omega: f64, channel: usize, sign: Sign, eta: f64) -> Result<Operator> {
        stationary_aux(self.model, rho, omega, channel, sign, eta)
    }

    /// Extended state from (ρ̄, analytic φ̄ at every node).
    pub fn analytic_stationary(&self, rho: &Operator, eta: f64) -> Result<ExtendedState> {
        let d = self.model.dim();
        let mut st = self.initial_state(rho);
        for c in 0..st.channels {
            for s in Sign::BOTH {
                for k in 0..st.nodes {
                    let phi = self.stationary_aux(rho, self.grid.nodes[k], c, s, eta)?;
                    let o = st.block(c, s, k);
                    st.data[o..o + d * d].copy_from_slice(self.model.frame().to_eigen(&phi).as_slice());
                }
            }
        }
        Ok(st)
    }

    /// Stationary extended state according to `prep`.
    pub fn prepare(&self, prep: Preparation, dt: f64) -> Result<ExtendedState> {
        let rho = stationary_state(self.model)?;
        match prep {
            Preparation::Relax { t } => Ok(self.evolve(&self.initial_state(&rho), t, dt, |_, _| {})?.state),
            Preparation::Analytic { eta } => self.analytic_stationary(&rho, eta),
        }
    }

    /// Multiplies every component by `b` from the left.
    pub fn apply_left(&self, b: &Operator, st: &ExtendedState) -> ExtendedState {
        let d = st.dim;
        let be = self.model.frame().to_eigen(b);
        let mut out = st.clone();
        for (src, dst) in st.data.chunks(d * d).zip(out.data.chunks_mut(d * d)) {
            let m = &be * to_mat(d, src);
            dst.copy_from_slice(m.as_slice());
        }
        out
    }

    /// `⟨A(t)B(0)⟩` sampled every `stride` steps on `[0, t_max]`.
    pub fn two_time_correlator(
        &self,
        a: &Operator,
        b: &Operator,
        t_max: f64,
        dt: f64,
        stride: usize,
        prep: Preparation,
    ) -> Result<TimeCorrelation> {
        let stationary = self.prepare(prep, dt)?;
        let preparation_residual = self.rhs(&stationary).rho_norm();
        self.correlate_from(&stationary, a, b, t_max, dt, stride, preparation_residual)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn correlate_from(
        &self,
        stationary: &ExtendedState,
        a: &Operator,
        b: &Operator,
        t_max: f64,
        dt: f64,
        stride: usize,
        preparation_residual: f64,
    ) -> Result<TimeCorrelation> {
        let stride = stride.max(1);
        let d = self.model.dim();
        let ae = self.model.frame().to_eigen(a);
        let start = self.apply_left(b, stationary);
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut counter = 0usize;
        let traj = self.evolve(&start, t_max, dt, |t, st| {
            if counter.is_multiple_of(stride) {
                let rho = to_mat(d, &st.data[..d * d]);
                times.push(t);
                values.push((&ae * rho).trace());
            }
            counter += 1;
        })?;
        Ok(TimeCorrelation { times, values, trace_drift: traj.trace_drift, preparation_residual })
    }
}

/// `φ̄^σ(ω) = C_Q^σ(ω) ρ̄ / (σω − L_s + iη)`.
pub fn stationary_aux(
    model: &SystemModel,
    rho: &Operator,
    omega: f64,
    channel: usize,
    sign: Sign,
    eta: f64,
) -> Result<Operator> {
    if channel >= model.channels().len() {
        return Err(Error::Config(format!("channel index {channel} out of range")));
    }
    if !(eta > 0.0) {
        return Err(Error::Config("eta must be > 0".into()));
    }
    let lead = model.channels()[channel].lead();
    let q = model.q_eigen(channel, sign);
    let re = model.frame().to_eigen(rho);
    let src = q * &re * C64::from(c_omega(lead, omega, sign)) - &re * q * C64::from(c_omega(lead, omega, sign.flip()));
    let bohr = &model.frame().bohr;
    let d = model.dim();
    let phi = DMatrix::from_fn(d, d, |i, j| src[(i, j)] / C64::new(sign.value() * omega - bohr[(i, j)], eta));
    Ok(model.frame().from_eigen(&phi))
}

/// `2 Re ∫₀^T e^{iωt} G(t) w(t) dt` by the trapezoid rule, with a cosine
/// taper over the last `taper` fraction of the window.
pub fn spectrum_from_correlation(corr: &TimeCorrelation, omegas: &[f64], taper: f64) -> Vec<f64> {
    let t = &corr.times;
    let n = t.len();
    if n < 2 {
        return vec![f64::NAN; omegas.len()];
    }
    let t_max = t[n - 1];
    let t_taper = t_max * (1.0 - taper.clamp(0.0, 1.0));
    let window = |x: f64| {
        if x <= t_taper || taper <= 0.0 {
            1.0
        } else {
            0.5 * (1.0 + (PI * (x - t_taper) / (t_max - t_taper)).cos())
        }
    };
    let weighted: Vec<C64> = (0..n)
        .map(|k| {
            let h = if k == 0 {
                0.5 * (t[1] - t[0])
            } else if k == n - 1 {
                0.5 * (t[n - 1] - t[n - 2])
            } else {
                0.5 * (t[k + 1] - t[k - 1])
            };
            corr.values[k] * (h * window(t[k]))
        })
        .collect();
    omegas
        .iter()
        .map(|&w| {
            let mut acc = ZERO;
            for k in 0..n {
                acc += weighted[k] * C64::from_polar(1.0, w * t[k]);
            }
            2.0 * acc.re
        })
        .collect()
}
