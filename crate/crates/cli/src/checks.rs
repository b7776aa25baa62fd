// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Self-check suite: invariants of every numerical layer measured against
//! fixed thresholds.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use nmkcorr::bath::{c_omega, c_tilde, lambda_omega, LeadSpec, Sign};
use nmkcorr::correlator::Correlator;
use nmkcorr::generator::{apply_c_tilde_q, markovian_generator, stationary_state, SystemModel};
use nmkcorr::liouville::{eigendecompose_hermitian, Operator, I};
use nmkcorr::quadrature::{principal_value_infinite, QuadOptions};
use nmkcorr::special::digamma;
use nmkcorr::tleom::{build_grid, GridScheme, Tleom};
use nmkcorr::{models, Error};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{resolve, Job, RunConfig};
use crate::error::{CliError, CliResult};
use crate::timedomain;

/// One measured invariant.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    /// Pass when `measured <= threshold`.
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), measured, threshold, pass: measured <= threshold, detail: detail.into() }
    }

    fn failed(name: &str, threshold: f64, err: impl std::fmt::Display) -> Self {
        Self { name: name.into(), measured: f64::NAN, threshold, pass: false, detail: format!("error: {err}") }
    }
}

const SEED: u64 = 0x006e_6d6b_636f_7272;

/// ψ at points with closed forms, as max relative error.
pub fn digamma_values() -> CheckResult {
    let g = 0.577_215_664_901_532_9_f64;
    let ln2 = 2f64.ln();
    let h9: f64 = (1..=9).map(|k| 1.0 / k as f64).sum();
    let cases = [
        (1.0, -g),
        (0.5, -g - 2.0 * ln2),
        (0.25, -g - PI / 2.0 - 3.0 * ln2),
        (10.0, -g + h9),
        (-0.5, -g - 2.0 * ln2 + 2.0),
    ];
    let worst = cases.iter().map(|&(x, want)| ((digamma(x) - want) / want).abs()).fold(0.0, f64::max);
    CheckResult::new("digamma-values", worst, 1e-13, "closed forms at 1, 1/2, 1/4, 10, -1/2")
}

/// Λ^σ(x) in closed form against a principal-value quadrature of C^σ.
pub fn lambda_vs_principal_value(lead: &LeadSpec, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let full = lead.clone().with_cutoff(lead.cutoff, false);
    let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-12, max_intervals: 20_000 };
    let mut worst = (0.0f64, f64::NAN);
    for k in 0..n {
        let x = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        for s in Sign::BOTH {
            let pv = principal_value_infinite(|t| c_omega(&full, t, s), x, 4.0 * lead.cutoff, &[lead.mu], opts);
            let quad = match pv {
                Ok(q) => s.value() * q.value / PI,
                Err(_) => return (f64::INFINITY, x),
            };
            let rel = ((lambda_omega(lead, x, s) - quad) / quad).abs();
            if !(rel <= worst.0) {
                worst = (rel, x);
            }
        }
    }
    worst
}

pub fn digamma_dispersion() -> CheckResult {
    let leads = [LeadSpec::new("L", 0.5, 6.0, 10.0), LeadSpec::new("R", 0.5, -6.0, 10.0)];
    let (worst, at) =
        leads.iter().map(|l| lambda_vs_principal_value(l, -20.0, 20.0, 81)).fold((0.0, f64::NAN), |a, b| {
            if !(b.0 <= a.0) {
                b
            } else {
                a
            }
        });
    CheckResult::new("digamma-dispersion-pv", worst, 1e-6, format!("81 points on [-20, 20], worst at {at}"))
}

/// `C̃_Q^σ X` assembled from Kronecker products of eigenprojectors.
fn c_tilde_q_dense(model: &SystemModel, channel: usize, sign: Sign, omega: f64) -> DMatrix<C64> {
    let d = model.dim();
    let (e, u) = eigendecompose_hermitian(model.hamiltonian()).expect("hermitian");
    let proj: Vec<DMatrix<C64>> = (0..d)
        .map(|k| {
            let col = u.matrix().column(k).into_owned();
            &col * col.adjoint()
        })
        .collect();
    let ch = &model.channels()[channel];
    let q = ch.q(sign).matrix();
    let mut out = DMatrix::<C64>::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let w = e[i] - e[j];
            out += proj[j].transpose().kronecker(&(&proj[i] * q)) * c_tilde(ch.lead(), omega - w, sign);
            out -= (q * &proj[j]).transpose().kronecker(&proj[i]) * c_tilde(ch.lead(), w - omega, sign.flip()).conj();
        }
    }
    out
}

pub fn superoperator_oracle() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let l = LeadSpec::new("L", 0.6, 1.5, 3.0);
    let r = LeadSpec::new("R", 0.4, -0.7, 3.0);
    let model = models::double_dot(0.3, -0.2, 1.7, 0.45, l, r).expect("valid model");
    let mut worst = 0.0f64;
    for _ in 0..8 {
        let omega = rng.random_range(-6.0..6.0);
        let x = Operator::from_fn(4, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        for c in 0..model.channels().len() {
            for s in Sign::BOTH {
                let fast = apply_c_tilde_q(&model, c, s, omega, &x).expect("valid channel");
                let dense = c_tilde_q_dense(&model, c, s, omega) * nmkcorr::liouville::vectorize(&x).data();
                let diff = (nmkcorr::liouville::vectorize(&fast).data() - &dense).norm() / dense.norm().max(1e-300);
                worst = worst.max(diff);
            }
        }
    }
    CheckResult::new("superoperator-oracle", worst, 1e-10, "8 random (omega, X) on a coherent double dot")
}

/// Empirical RK4 order on the single-dot time-domain model: the error ratio
/// between successive step halvings, against a 16× finer reference.
pub fn rk4_order_measure() -> Result<(f64, Vec<f64>), Error> {
    let model = models::lookup_one("fig3")?.time_domain_model()?;
    let span = nmkcorr::tleom::required_span(&model).ceil();
    let tl = Tleom::new(&model, build_grid(span, 121, GridScheme::Trapezoid)?)?;
    let rho = Operator::from_real_rows(&[&[0.7, 0.2], &[0.2, 0.3]])?;
    let st = tl.initial_state(&rho);
    let t = 1.0;
    let h0 = t / (t / tl.max_dt()).ceil();
    let run = |h: f64| tl.evolve(&st, t, h, |_, _| {}).map(|tr| tr.state);
    let reference = run(h0 / 16.0)?;
    let errs =
        [1.0, 2.0, 4.0].iter().map(|k| run(h0 / k).map(|s| s.distance(&reference))).collect::<Result<Vec<_>, _>>()?;
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let worst = orders.iter().map(|o| (o - 4.0).abs()).fold(0.0, f64::max);
    Ok((worst, orders))
}

pub fn rk4_order() -> CheckResult {
    match rk4_order_measure() {
        Ok((worst, orders)) => CheckResult::new("rk4-order", worst, 0.3, format!("|order - 4|; orders {orders:?}")),
        Err(e) => CheckResult::failed("rk4-order", 0.3, e),
    }
}

/// ‖M ρ̄‖, |Tr ρ̄ − 1| and the hermiticity defect of ρ̄, worst over `jobs`.
pub fn stationarity(jobs: &[Job]) -> CheckResult {
    let mut worst = 0.0f64;
    let mut at = String::new();
    for job in jobs {
        match stationary_state(&job.model) {
            Ok(rho) => {
                let residual =
                    markovian_generator(&job.model).apply_op(&rho).map(|r| r.norm()).unwrap_or(f64::INFINITY);
                let m = residual.max((rho.trace().re - 1.0).abs()).max(rho.hermiticity_defect());
                if !(m <= worst) {
                    worst = m;
                    at = job.name.clone();
                }
            }
            Err(e) => return CheckResult::failed("stationarity", 1e-10, format!("{}: {e}", job.name)),
        }
    }
    CheckResult::new("stationarity", worst, 1e-10, format!("{} models, worst {at}", jobs.len()))
}

/// ⟨A(t)·1⟩ = ⟨A⟩ makes the half-sided transform exactly i⟨A⟩/ω.
pub fn identity_probe() -> CheckResult {
    let run = || -> Result<f64, Error> {
        let p = models::lookup_one("fig5-u6")?;
        let c = Correlator::new(&p.model)?;
        let id = Operator::identity(4);
        let mut worst = 0.0f64;
        for name in ["n_l", "N"] {
            let a = p.model.observable(name)?;
            for omega in [-4.0, -0.5, 0.1, 2.0, 7.5] {
                let want = I * c.mean(a) / omega;
                worst = worst.max((c.laplace_forward(a, &id, omega)? - want).norm() / want.norm());
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(w) => CheckResult::new("identity-probe", w, 1e-10, "L[<A(t)>](w) = i<A>/w, general and commuting vertex"),
        Err(e) => CheckResult::failed("identity-probe", 1e-10, e),
    }
}

/// Trace drift along a double-dot trajectory.
pub fn trace_conservation() -> CheckResult {
    let run = || -> Result<f64, Error> {
        let model = models::lookup_one("fig5-u2")?.time_domain_model()?;
        let tl = Tleom::new(&model, nmkcorr::tleom::auto_grid(&model, 10.0, GridScheme::Trapezoid)?)?;
        let rho = Operator::diagonal(&[0.1, 0.2, 0.3, 0.4]);
        Ok(tl.evolve(&tl.initial_state(&rho), 5.0, tl.default_dt(), |_, _| {})?.trace_drift)
    };
    match run() {
        Ok(d) => CheckResult::new("trace-conservation", d, 1e-8, "t = 5 on the fig5-u2 time-domain model"),
        Err(e) => CheckResult::failed("trace-conservation", 1e-8, e),
    }
}

/// Time-domain against frequency-domain spectrum for the single dot.
pub fn route_agreement() -> CheckResult {
    let run = || -> CliResult<timedomain::CompareReport> {
        let job = resolve(&RunConfig::default(), Some("fig3"))?.remove(0);
        let td = timedomain::run(&job)?;
        timedomain::compare(&job, &td)
    };
    match run() {
        Ok(r) => CheckResult::new(
            "route-agreement",
            r.max_rel_deviation,
            timedomain::ROUTE_THRESHOLD,
            format!("fig3, |w| <= {}, worst at w = {}", r.band, r.worst_omega),
        ),
        Err(e) => CheckResult::failed("route-agreement", timedomain::ROUTE_THRESHOLD, e),
    }
}

/// Runs every check; stationarity covers all presets plus `extra` jobs.
pub fn run_all(extra: &[Job]) -> CliResult<Vec<CheckResult>> {
    let mut jobs = Vec::new();
    for name in models::preset_names() {
        jobs.extend(resolve(&RunConfig::default(), Some(name))?);
    }
    jobs.extend_from_slice(extra);
    let checks: Vec<Box<dyn Fn() -> CheckResult + Sync>> = vec![
        Box::new(digamma_values),
        Box::new(digamma_dispersion),
        Box::new(superoperator_oracle),
        Box::new(move || stationarity(&jobs)),
        Box::new(identity_probe),
        Box::new(rk4_order),
        Box::new(trace_conservation),
        Box::new(route_agreement),
    ];
    Ok(checks.iter().map(|c| c()).collect())
}

/// Fixed-width text table of the results.
pub fn render(results: &[CheckResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&format!(
            "{:<4} {:<24} measured {:<12.3e} threshold {:<10.1e} {}\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.measured,
            r.threshold,
            r.detail
        ));
    }
    out
}

pub fn summarize(results: &[CheckResult]) -> CliResult<()> {
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failed.join(", ")))
    }
}
