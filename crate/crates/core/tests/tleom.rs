// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Time-local equations of motion: grids, integrator, preparation and the
//! agreement of the time-domain route with the frequency-domain one.

use approx::assert_abs_diff_eq;
use nmkcorr::bath::{LeadSpec, Sign, SoftBand};
use nmkcorr::correlator::{Correlator, SpectrumOptions};
use nmkcorr::generator::{stationary_state, SystemModel};
use nmkcorr::liouville::Operator;
use nmkcorr::tleom::*;
use nmkcorr::{models, Error};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// A small single dot whose span keeps the grid cheap.
fn small_dot() -> SystemModel {
    let leads = [LeadSpec::new("L", 0.6, 1.0, 2.0), LeadSpec::new("R", 0.4, -1.0, 2.0)];
    models::single_dot(0.5, &leads).unwrap()
}

fn band_model(preset: &str) -> SystemModel {
    models::lookup_one(preset).unwrap().time_domain_model().unwrap()
}

#[test]
fn trapezoid_weights_include_the_two_pi() {
    let g = build_grid(3.0, 3, GridScheme::Trapezoid).unwrap();
    assert_eq!(g.nodes, vec![-3.0, 0.0, 3.0]);
    let w: Vec<f64> = g.weights.iter().map(|w| w * 2.0 * PI).collect();
    assert_eq!(w, vec![1.5, 3.0, 1.5]);
    assert_abs_diff_eq!(g.recurrence_time(), 2.0 * PI / 3.0, epsilon = 1e-15);
}

#[test]
fn legendre_grid_integrates_polynomials_exactly() {
    let g = build_grid(2.0, 12, GridScheme::GaussLegendre).unwrap();
    let integral: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * 2.0 * PI * x.powi(10)).sum();
    assert_abs_diff_eq!(integral, 2.0 * 2f64.powi(11) / 11.0, epsilon = 1e-10);
}

#[test]
fn auto_grid_outlasts_the_requested_window() {
    let model = band_model("fig3");
    let g = auto_grid(&model, 75.0, GridScheme::Trapezoid).unwrap();
    assert!(g.omega_max >= required_span(&model));
    assert!(g.recurrence_time() >= 1.25 * 75.0 - 1e-9);
    let g = auto_grid(&model, 75.0, GridScheme::GaussLegendre).unwrap();
    assert!(g.recurrence_time() >= 75.0);
}

#[test]
fn narrow_grid_is_a_configuration_error() {
    let model = small_dot();
    let grid = build_grid(0.5 * required_span(&model), 50, GridScheme::Trapezoid).unwrap();
    assert!(matches!(Tleom::new(&model, grid), Err(Error::Config(_))));
}

#[test]
fn oversized_step_is_rejected() {
    let model = small_dot();
    let tl = Tleom::new(&model, auto_grid(&model, 20.0, GridScheme::Trapezoid).unwrap()).unwrap();
    let st = tl.initial_state(&Operator::diagonal(&[1.0, 0.0]));
    assert!(tl.evolve(&st, 1.0, 2.0 * tl.max_dt(), |_, _| {}).is_err());
}

#[test]
fn uncoupled_evolution_is_unitary_phase() {
    let leads = [LeadSpec { gamma: 0.0, ..LeadSpec::new("L", 0.0, 1.0, 2.0) }];
    let model = models::double_dot(0.2, -0.3, 0.0, 0.7, leads[0].clone(), leads[0].clone()).unwrap();
    let tl = Tleom::new(&model, build_grid(10.0, 41, GridScheme::Trapezoid).unwrap()).unwrap();
    let frame = model.frame();
    let x = nalgebra::DMatrix::from_fn(4, 4, |i, j| C64::new(0.1 * (1 + i + j) as f64, 0.02 * i as f64));
    let rho0 = frame.from_eigen(&x);
    let t = 3.0;
    let traj = tl.evolve(&tl.initial_state(&rho0), t, tl.max_dt(), |_, _| {}).unwrap();
    let got = frame.to_eigen(&tl.rho(&traj.state));
    for i in 0..4 {
        for j in 0..4 {
            let want = x[(i, j)] * C64::from_polar(1.0, -frame.bohr[(i, j)] * t);
            assert!((got[(i, j)] - want).norm() < 1e-9);
        }
    }
}

#[test]
fn trace_is_conserved_along_trajectories() {
    let model = band_model("fig5-u2");
    let tl = Tleom::new(&model, auto_grid(&model, 10.0, GridScheme::Trapezoid).unwrap()).unwrap();
    let rho = Operator::diagonal(&[0.1, 0.2, 0.3, 0.4]);
    let traj = tl.evolve(&tl.initial_state(&rho), 5.0, tl.default_dt(), |_, _| {}).unwrap();
    assert!(traj.trace_drift <= 1e-8, "drift {}", traj.trace_drift);
    assert!(tl.rho(&traj.state).hermiticity_defect() < 1e-10);
}

#[test]
fn rk4_converges_at_fourth_order() {
    let model = small_dot();
    let tl = Tleom::new(&model, build_grid(required_span(&model).ceil(), 120, GridScheme::Trapezoid).unwrap()).unwrap();
    let st = tl.initial_state(&Operator::from_real_rows(&[&[0.7, 0.2], &[0.2, 0.3]]).unwrap());
    let t = 2.0;
    let h0 = t / (t / tl.max_dt()).ceil();
    let run = |h: f64| tl.evolve(&st, t, h, |_, _| {}).unwrap().state;
    let reference = run(h0 / 16.0);
    let errs: Vec<f64> = [1.0, 2.0, 4.0].iter().map(|k| run(h0 / k).distance(&reference)).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 4.0).abs() <= 0.3, "empirical order {order} from {errs:?}");
    }
}

#[test]
fn relaxation_reaches_the_stationary_state() {
    let model = small_dot();
    let tl = Tleom::new(&model, auto_grid(&model, 60.0, GridScheme::Trapezoid).unwrap()).unwrap();
    let prepared = tl.prepare(Preparation::Relax { t: 30.0 }, tl.default_dt()).unwrap();
    let rho = tl.rho(&prepared);
    let target = stationary_state(&model).unwrap();
    assert!(rho.max_abs_diff(&target) < 2e-3, "{rho:?} vs {target:?}");
    // Starting elsewhere ends at the same place.
    let traj =
        tl.evolve(&tl.initial_state(&Operator::diagonal(&[1.0, 0.0])), 30.0, tl.default_dt(), |_, _| {}).unwrap();
    assert!(tl.rho(&traj.state).max_abs_diff(&rho) < 2e-3);
    assert!(tl.rhs(&prepared).rho_norm() < 1e-3);
}

#[test]
fn analytic_auxiliaries_solve_their_stationary_equation() {
    // (σω − ω_ij + iη) φ̄ = (C_Q ρ̄): check one element against the definition.
    let model = small_dot();
    let rho = stationary_state(&model).unwrap();
    let (omega, eta) = (0.8, 0.05);
    let phi = stationary_aux(&model, &rho, omega, 0, Sign::Plus, eta).unwrap();
    let frame = model.frame();
    let pe = frame.to_eigen(&phi);
    let lead = model.channels()[0].lead();
    let q = model.channels()[0].q(Sign::Plus);
    let c_plus = nmkcorr::bath::c_omega(lead, omega, Sign::Plus);
    let c_minus = nmkcorr::bath::c_omega(lead, omega, Sign::Minus);
    let src = frame.to_eigen(&(&(q * &rho).scale(c_plus.into()) - &(&rho * q).scale(c_minus.into())));
    for i in 0..2 {
        for j in 0..2 {
            let lhs = pe[(i, j)] * C64::new(omega - frame.bohr[(i, j)], eta);
            assert!((lhs - src[(i, j)]).norm() < 1e-13);
        }
    }
}

#[test]
fn uncoupled_correlator_oscillates_at_bohr_frequency() {
    let lead = LeadSpec { gamma: 0.0, ..LeadSpec::new("L", 0.0, 0.0, 2.0) };
    let model = models::double_dot(0.0, 0.0, 0.0, 0.5, lead.clone(), lead).unwrap();
    let tl = Tleom::new(&model, build_grid(6.0, 21, GridScheme::Trapezoid).unwrap()).unwrap();
    // n_l from |l⟩⟨l| follows cos²(Ωt): 1 at t = 0, 0 at t = π.
    let nl = model.observable("n_l").unwrap();
    let b = tl.apply_left(nl, &tl.initial_state(&Operator::ket_bra(4, 1, 1)));
    let steps = (PI / tl.max_dt()).ceil();
    let mut values = Vec::new();
    let traj = tl.evolve(&b, PI, PI / steps, |_, st| values.push(nl.expectation(&tl.rho(st)))).unwrap();
    assert_eq!(traj.steps as f64, steps);
    assert!((values[0].re - 1.0).abs() < 1e-12);
    assert!(values.last().unwrap().norm() < 1e-9, "{:?}", values.last());
}

#[test]
fn correlations_factorize_at_long_times() {
    let model = band_model("fig3");
    let n = model.observable("N").unwrap();
    let mean = Correlator::new(&model).unwrap().mean(n);
    let tl = Tleom::new(&model, auto_grid(&model, 25.0 + 40.0, GridScheme::Trapezoid).unwrap()).unwrap();
    let corr = tl.two_time_correlator(n, n, 40.0, tl.default_dt(), 100, Preparation::Relax { t: 25.0 }).unwrap();
    // N² = N for one level: ⟨N(0)N(0)⟩ = ⟨N⟩.
    assert!((corr.values[0] - mean).norm() < 1e-3, "{:?}", corr.values[0]);
    let last = *corr.values.last().unwrap();
    assert!((last - mean * mean).norm() < 1e-3, "{last} vs {}", mean * mean);
}

/// Time-domain spectrum of `a` against the frequency-domain one.
fn route_difference(model: &SystemModel, a: &Operator, t_max: f64, omegas: &[f64]) -> f64 {
    let c = Correlator::new(model).unwrap();
    let freq = c.spectrum(a, omegas, &SpectrumOptions::default()).unwrap();
    let centred = a - &Operator::identity(model.dim()).scale(c.mean(a));
    let prep = Preparation::Relax { t: 25.0 };
    let grid = auto_grid(model, 25.0 + t_max, GridScheme::Trapezoid).unwrap();
    let tl = Tleom::new(model, grid).unwrap();
    let corr = tl.two_time_correlator(&centred, &centred, t_max, tl.max_dt(), 1, prep).unwrap();
    assert!(corr.trace_drift <= 1e-8);
    let time = spectrum_from_correlation(&corr, omegas, 0.1);
    omegas
        .iter()
        .enumerate()
        .map(|(k, _)| {
            let f = freq.s_n[k].unwrap();
            (time[k] - f).abs() / f.abs().max(1e-2)
        })
        .fold(0.0, f64::max)
}

#[test]
fn time_route_matches_frequency_route_for_non_conserved_probe() {
    // n_l does not commute with the double-dot Hamiltonian, so this
    // exercises the general vertex correction.
    let model = band_model("fig5-u2");
    let a = model.observable("n_l").unwrap().clone();
    let omegas: Vec<f64> = (0..20).map(|k| -9.5 + k as f64).collect();
    let worst = route_difference(&model, &a, 40.0, &omegas);
    assert!(worst < 0.03, "worst relative difference {worst}");
}

#[test]
fn band_model_keeps_the_system() {
    let model = band_model("fig3");
    let plain = models::lookup_one("fig3").unwrap().model;
    assert_eq!(model.hamiltonian(), plain.hamiltonian());
    for lead in model.leads() {
        assert_eq!(lead.band, Some(SoftBand { center: 0.0, half_width: 12.0, edge_width: 1.0 }));
    }
}
