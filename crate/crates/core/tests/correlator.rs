// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Frequency-domain correlators: exact identities, symmetries and frozen spectra.

use approx::assert_relative_eq;
use nmkcorr::bath::LeadSpec;
use nmkcorr::correlator::*;
use nmkcorr::liouville::{Operator, I};
use nmkcorr::{models, Error};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn coherent_model() -> nmkcorr::generator::SystemModel {
    let l = LeadSpec::new("L", 0.6, 2.5, 3.0);
    let r = LeadSpec::new("R", 0.4, -2.0, 3.0);
    models::double_dot(0.3, -0.2, 1.7, 0.8, l, r).unwrap()
}

#[test]
fn identity_probe_gives_the_mean_over_frequency() {
    // ⟨A(t)·1⟩ = ⟨A⟩ for all t, so the half-sided transform is i⟨A⟩/ω.
    let model = coherent_model();
    let c = Correlator::new(&model).unwrap();
    let id = Operator::identity(4);
    for name in ["n_l", "n_r", "N"] {
        let a = model.observable(name).unwrap();
        for omega in [-3.3, -0.4, 0.05, 1.0, 6.5] {
            let got = c.laplace_forward(a, &id, omega).unwrap();
            let want = I * c.mean(a) / omega;
            assert!((got - want).norm() < 1e-10 * want.norm(), "{name} {omega}: {got} vs {want}");
        }
    }
}

#[test]
fn general_and_commuting_vertices_agree_for_conserved_probe() {
    let model = coherent_model();
    let n = model.observable("N").unwrap();
    let general = Correlator::new(&model).unwrap().with_vertex_form(VertexForm::General);
    let commuting = Correlator::new(&model).unwrap().with_vertex_form(VertexForm::Commuting);
    for omega in [-4.0, -1.1, 0.3, 2.0, 5.5] {
        let a = general.vertex_forward(n, omega).unwrap();
        let b = commuting.vertex_forward(n, omega).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-9 * b.norm().max(1e-12));
        let a = general.vertex_reverse(n, omega).unwrap();
        let b = commuting.vertex_reverse(n, omega).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-9 * b.norm().max(1e-12));
    }
}

#[test]
fn vertex_contribution_stays_finite_at_low_frequency() {
    let p = models::lookup_one("fig3").unwrap();
    let c = Correlator::new(&p.model).unwrap();
    let n = p.model.observable("N").unwrap();
    let a = n - &Operator::identity(2).scale(c.mean(n));
    let near = c.vertex_term_forward(&a, &a, 1e-3).unwrap().norm();
    let far = c.vertex_term_forward(&a, &a, 1e-2).unwrap().norm();
    assert!(near / far < 4.0, "vertex term grows like 1/ω: {near} vs {far}");
}

#[test]
fn frequencies_inside_the_floor_are_rejected() {
    let model = coherent_model();
    let c = Correlator::new(&model).unwrap();
    let n = model.observable("N").unwrap();
    match c.laplace_forward(n, n, 1e-4) {
        Err(Error::Range { .. }) => {}
        other => panic!("expected a range error, got {other:?}"),
    }
    let grid = omega_grid(-1.0, 1.0, 21).unwrap();
    let s = c.spectrum(n, &grid, &SpectrumOptions::default()).unwrap();
    assert_eq!(s.len(), 20);
    assert!(!s.omegas.contains(&0.0));
    assert_eq!(s.gap_count(), 0);
}

#[test]
fn omega_grid_is_mirror_symmetric() {
    let g = omega_grid(-10.0, 10.0, 2001).unwrap();
    assert_eq!(g.len(), 2001);
    assert_eq!(g[1000], 0.0);
    for k in 0..g.len() {
        assert_eq!(g[k], -g[g.len() - 1 - k]);
    }
}

#[test]
fn single_dot_spectrum_frozen_values() {
    let omegas = [-4.5, -0.5, 0.5, 4.5];
    let cases = [
        ("fig3", [2.582288576315e-2, 4.035094232680e-1, 3.996520160560e-1, 2.213362374921e-2]),
        ("fig3-asym", [2.267891005576e-2, 3.521392191626e-1, 3.478605986246e-1, 1.836009201352e-2]),
        ("fig4-u2", [3.821127673841e-2, 8.217059241907e-1, 8.099339805719e-1, 5.688866183527e-2]),
        ("fig5-u15", [1.075712612239e-2, 4.105894197280e-1, 4.035160954552e-1, 2.699436253491e-2]),
    ];
    for (name, want) in cases {
        let p = models::lookup_one(name).unwrap();
        let c = Correlator::new(&p.model).unwrap();
        let s = c.spectrum(p.model.observable("N").unwrap(), &omegas, &SpectrumOptions::default()).unwrap();
        for k in 0..4 {
            assert_relative_eq!(s.s_n[k].unwrap(), want[k], max_relative = 1e-9);
            assert_relative_eq!(s.s_c[k].unwrap(), omegas[k] * omegas[k] * want[k], max_relative = 1e-9);
        }
    }
}

#[test]
fn markovian_columns_are_attached_and_close_at_low_frequency() {
    let p = models::lookup_one("fig3").unwrap();
    let c = Correlator::new(&p.model).unwrap();
    let omegas = omega_grid(-2.5, 2.5, 51).unwrap();
    let s = c.spectrum_with_markovian(p.model.observable("N").unwrap(), &omegas, &SpectrumOptions::default()).unwrap();
    let m = s.markovian.as_ref().unwrap();
    for k in 0..s.len() {
        let (a, b) = (s.s_n[k].unwrap(), m.s_n[k].unwrap());
        assert!(((a - b) / a).abs() < 0.05, "omega {}: {a} vs {b}", s.omegas[k]);
    }
    assert_eq!(s.meta["columns"], "non-markovian+markovian");
}

#[test]
fn spectra_reject_non_hermitian_probes() {
    let model = coherent_model();
    let c = Correlator::new(&model).unwrap();
    let x = Operator::ket_bra(4, 0, 1);
    assert!(matches!(c.spectrum(&x, &[1.0], &SpectrumOptions::default()), Err(Error::NotHermitian { .. })));
}

#[test]
fn step_analysis_recovers_a_thermal_step() {
    let (kt, pos, height) = (0.1, 5.0, 0.2);
    let omegas = omega_grid(0.0, 10.0, 2001).unwrap();
    let s_c: Vec<f64> = omegas.iter().map(|&w| 0.3 + 0.01 * w + height / (1.0 + (-(w - pos) / kt).exp())).collect();
    let s_n = omegas.iter().zip(&s_c).map(|(&w, &c)| (w != 0.0).then(|| c / (w * w))).collect();
    let series = SpectrumSeries::from_columns(omegas, s_n);
    let steps = step_analysis(&series, &[(4.2, 5.8), (7.0, 8.0)], &StepOptions::for_temperature(kt));
    let step = steps[0].expect("step found");
    assert!((step.position - pos).abs() < 0.05, "position {}", step.position);
    assert!((step.height - height).abs() < 0.01, "height {}", step.height);
    assert!(steps[1].is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reverse_correlator_is_conjugate_mirror(omega in 0.05..8.0f64, sign in prop::bool::ANY) {
        let omega = if sign { omega } else { -omega };
        let model = coherent_model();
        let c = Correlator::new(&model).unwrap();
        let a = model.observable("n_l").unwrap();
        let b = model.observable("n_r").unwrap();
        let rev = c.laplace_reverse(a, b, omega).unwrap();
        let fwd = c.laplace_forward(b, a, -omega).unwrap().conj();
        prop_assert!((rev - fwd).norm() < 1e-10 * fwd.norm().max(1e-12));
    }

    #[test]
    fn spectrum_of_charge_is_real_and_finite(omega in 0.05..20.0f64) {
        let p = models::lookup_one("fig4-u6").unwrap();
        let c = Correlator::new(&p.model).unwrap();
        let n = p.model.observable("N").unwrap();
        let centred = n - &Operator::identity(4).scale(c.mean(n));
        let z: C64 = c.laplace_forward(&centred, &centred, omega).unwrap();
        let s = c.spectrum(n, &[omega], &SpectrumOptions::default()).unwrap();
        prop_assert!(z.re.is_finite() && z.im.is_finite());
        prop_assert!((s.s_n[0].unwrap() - 2.0 * z.re).abs() < 1e-14);
    }
}
