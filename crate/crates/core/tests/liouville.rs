// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Vectorization, superoperators and linear solves against dense oracles.

use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use nmkcorr::liouville::*;
use nmkcorr::Error;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn op(dim: usize, vals: &[C64]) -> Operator {
    Operator::from_fn(dim, |i, j| vals[i * dim + j])
}

fn arb_op(dim: usize) -> impl Strategy<Value = Operator> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), dim * dim)
        .prop_map(move |v| op(dim, &v.into_iter().map(|(a, b)| c(a, b)).collect::<Vec<_>>()))
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

#[test]
fn vectorization_stacks_columns() {
    let x = Operator::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
    let v = vectorize(&x);
    let got: Vec<f64> = v.data().iter().map(|z| z.re).collect();
    assert_eq!(got, vec![1.0, 3.0, 2.0, 4.0]);
    assert_eq!(devectorize(&v), x);
}

#[test]
fn left_and_right_multiplication_match_kronecker_oracle() {
    let x = op(2, &[c(1.0, 0.5), c(-2.0, 0.0), c(0.0, 3.0), c(4.0, -1.0)]);
    let id = DMatrix::<C64>::identity(2, 2);
    let left = kron(&id, x.matrix());
    let right = kron(&x.matrix().transpose(), &id);
    assert_abs_diff_eq!((left_mult(&x).matrix() - left).norm(), 0.0, epsilon = 1e-14);
    assert_abs_diff_eq!((right_mult(&x).matrix() - right).norm(), 0.0, epsilon = 1e-14);
}

#[test]
fn commutator_map_frozen_on_pauli_y() {
    // [σ_y, ·] applied to σ_x gives −2iσ_z.
    let sy = op(2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
    let sx = Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
    let got = commutator_map(&sy).apply_op(&sx).unwrap();
    let want = Operator::diagonal(&[1.0, -1.0]).scale(c(0.0, -2.0));
    assert!(got.max_abs_diff(&want) < 1e-15);
}

#[test]
fn trace_row_picks_diagonal_entries() {
    let row = trace_row(3);
    let nonzero: Vec<usize> = (0..9).filter(|&k| row[k] != ZERO).collect();
    assert_eq!(nonzero, vec![0, 4, 8]);
}

#[test]
fn solve_recovers_known_solution() {
    let a = SuperOperator::from_matrix(DMatrix::from_fn(4, 4, |i, j| {
        if i == j {
            c(3.0 + i as f64, 0.0)
        } else {
            c(0.1 * (i + 2 * j) as f64, -0.05)
        }
    }))
    .unwrap();
    let x = LiouvilleVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0), c(-2.0, 0.5), c(0.25, 0.0)]).unwrap();
    let b = a.apply(&x).unwrap();
    let got = solve_linear(&a, &b).unwrap();
    assert_abs_diff_eq!((got.data() - x.data()).norm(), 0.0, epsilon = 1e-13);
}

#[test]
fn singular_system_reports_condition() {
    let a = SuperOperator::from_matrix(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ONE, ONE, ZERO])))
        .unwrap();
    match Factorized::new(&a) {
        Err(Error::Singular { .. }) => {}
        other => panic!("expected singular, got {other:?}"),
    }
}

#[test]
fn null_state_of_two_level_rate_problem() {
    // Rates 0→1 = 2, 1→0 = 1: populations (1/3, 2/3).
    let mut m = DMatrix::<C64>::zeros(4, 4);
    m[(0, 0)] = c(-2.0, 0.0);
    m[(0, 3)] = c(1.0, 0.0);
    m[(3, 0)] = c(2.0, 0.0);
    m[(3, 3)] = c(-1.0, 0.0);
    m[(1, 1)] = c(-1.5, 0.0);
    m[(2, 2)] = c(-1.5, 0.0);
    let rho = null_state(&SuperOperator::from_matrix(m).unwrap()).unwrap();
    let p = rho.populations();
    assert_abs_diff_eq!(p[0], 1.0 / 3.0, epsilon = 1e-14);
    assert_abs_diff_eq!(p[1], 2.0 / 3.0, epsilon = 1e-14);
}

#[test]
fn degenerate_kernel_is_rejected() {
    match null_state(&SuperOperator::zeros(2)) {
        Err(Error::Kernel { found, .. }) => assert_eq!(found, 4),
        other => panic!("expected kernel error, got {other:?}"),
    }
}

#[test]
fn hermitian_eigendecomposition_is_sorted_and_reconstructs() {
    let h = Operator::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
    let (e, u) = eigendecompose_hermitian(&h).unwrap();
    assert_abs_diff_eq!(e[0], 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(e[1], 3.0, epsilon = 1e-14);
    let back = &(&u * &Operator::diagonal(&e)) * &u.adjoint();
    assert!(back.max_abs_diff(&h) < 1e-14);
}

proptest! {
    #[test]
    fn vec_of_product_is_kronecker_action(x in arb_op(3), y in arb_op(3), z in arb_op(3)) {
        let lhs = vectorize(&(&(&x * &y) * &z));
        let sup = SuperOperator::from_matrix(kron(&z.matrix().transpose(), x.matrix())).unwrap();
        let rhs = sup.apply(&vectorize(&y)).unwrap();
        prop_assert!((lhs.data() - rhs.data()).norm() < 1e-11);
    }

    #[test]
    fn commutator_superoperator_is_traceless(x in arb_op(3), y in arb_op(3)) {
        let img = commutator_map(&x).apply_op(&y).unwrap();
        prop_assert!(img.trace().norm() < 1e-12);
        prop_assert!(commutator_map(&x).trace_image().norm() < 1e-12);
    }

    #[test]
    fn from_map_reproduces_the_map(x in arb_op(2), y in arb_op(2)) {
        let sup = SuperOperator::from_map(2, |m| &(&x * m) - &(m * &y));
        let direct = &left_mult(&x) - &right_mult(&y);
        prop_assert!(sup.max_abs_diff(&direct) < 1e-13);
    }

    #[test]
    fn round_trip_vectorization(x in arb_op(4)) {
        prop_assert_eq!(devectorize(&vectorize(&x)), x);
    }
}
