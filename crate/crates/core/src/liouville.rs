// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Operator and superoperator algebra on a small Hilbert space.
//!
//! Vectorization is **column stacking** throughout the crate:
//!
//! ```text
//! vec(X Y Z) = (Zᵀ ⊗ X) vec(Y)
//! ```
//!
//! so `left_mult(X) = I ⊗ X` and `right_mult(Z) = Zᵀ ⊗ I`.  `nalgebra`
//! stores matrices column-major, which makes `vectorize` a plain copy.
//!
//! Everything here is dense: the systems of interest have d ≤ 4, so
//! superoperators are at most 16×16.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Default relative residual accepted by [`solve_linear`].
pub const DEFAULT_RTOL: f64 = 1e-10;

/// Condition estimates above this are treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// A complex square matrix acting on the system Hilbert space.
#[derive(Clone, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator{}", self.mat)
    }
}

impl Operator {
    /// Wraps a matrix, checking that it is square, non-empty and finite.
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "operator must be square and non-empty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("operator entry".into()));
        }
        Ok(Self { mat })
    }

    /// Builds a real operator from row slices.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("rows must form a square matrix".into()));
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(dim > 0, "operator dimension must be positive");
        Self { mat: DMatrix::from_fn(dim, dim, f) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| ZERO)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    /// The dyad |i⟩⟨j|.
    pub fn ket_bra(dim: usize, i: usize, j: usize) -> Self {
        Self::from_fn(dim, |r, c| if r == i && c == j { ONE } else { ZERO })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { C64::new(values[i], 0.0) } else { ZERO })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Largest entry modulus of `X − X†`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `(X + X†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self { mat: (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0) }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { mat: &self.mat * s }
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        Self { mat: &self.mat * &other.mat - &other.mat * &self.mat }
    }

    pub fn anticommutator(&self, other: &Operator) -> Self {
        Self { mat: &self.mat * &other.mat + &other.mat * &self.mat }
    }

    /// Expectation value `Tr[self · rho]`.
    pub fn expectation(&self, rho: &Operator) -> C64 {
        // Tr[AB] = Σ_ij A_ij B_ji without forming the product.
        let d = self.dim();
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += self.mat[(i, j)] * rho.mat[(j, i)];
            }
        }
        acc
    }

    /// Largest entry modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        (&self.mat - &other.mat).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Density-matrix populations (real part of the diagonal).
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }
}

macro_rules! op_binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr<&Operator> for &Operator {
            type Output = Operator;
            fn $f(self, rhs: &Operator) -> Operator {
                assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
                Operator { mat: &self.mat $op &rhs.mat }
            }
        }
        impl $tr<Operator> for Operator {
            type Output = Operator;
            fn $f(self, rhs: Operator) -> Operator {
                &self $op &rhs
            }
        }
    };
}
op_binop!(Add, add, +);
op_binop!(Sub, sub, -);
op_binop!(Mul, mul, *);

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { mat: -&self.mat }
    }
}

/// A vectorized operator (column stacking).
#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleVector {
    dim: usize,
    data: DVector<C64>,
}

impl LiouvilleVector {
    /// Wraps raw data; the length must be a perfect square.
    pub fn from_vec(data: Vec<C64>) -> Result<Self> {
        let n = data.len();
        let dim = (n as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != n {
            return Err(Error::Dimension(format!("length {n} is not a positive perfect square")));
        }
        Ok(Self { dim, data: DVector::from_vec(data) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &DVector<C64> {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }
}

pub fn vectorize(x: &Operator) -> LiouvilleVector {
    LiouvilleVector { dim: x.dim(), data: DVector::from_column_slice(x.mat.as_slice()) }
}

pub fn devectorize(v: &LiouvilleVector) -> Operator {
    Operator { mat: DMatrix::from_column_slice(v.dim, v.dim, v.data.as_slice()) }
}

/// A linear map on operators, stored as a d²×d² matrix.
#[derive(Clone, PartialEq)]
pub struct SuperOperator {
    dim: usize,
    mat: DMatrix<C64>,
}

impl fmt::Debug for SuperOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SuperOperator(d={}){}", self.dim, self.mat)
    }
}

impl SuperOperator {
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        let n = mat.nrows();
        let dim = (n as f64).sqrt().round() as usize;
        if mat.ncols() != n || dim == 0 || dim * dim != n {
            return Err(Error::Dimension(format!("superoperator must be d²×d², got {}x{}", mat.nrows(), mat.ncols())));
        }
        Ok(Self { dim, mat })
    }

    /// Assembles the matrix of a linear map column by column.
    pub fn from_map(dim: usize, mut f: impl FnMut(&Operator) -> Operator) -> Self {
        let n = dim * dim;
        let mut mat = DMatrix::zeros(n, n);
        for col in 0..n {
            let (i, j) = (col % dim, col / dim);
            let image = f(&Operator::ket_bra(dim, i, j));
            mat.column_mut(col).copy_from_slice(image.mat.as_slice());
        }
        Self { dim, mat }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, mat: DMatrix::zeros(dim * dim, dim * dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, mat: DMatrix::identity(dim * dim, dim * dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, mat: &self.mat * s }
    }

    pub fn apply(&self, v: &LiouvilleVector) -> Result<LiouvilleVector> {
        if v.dim != self.dim {
            return Err(Error::Dimension(format!("superoperator on d={} applied to vector of d={}", self.dim, v.dim)));
        }
        Ok(LiouvilleVector { dim: self.dim, data: &self.mat * &v.data })
    }

    pub fn apply_op(&self, x: &Operator) -> Result<Operator> {
        self.apply(&vectorize(x)).map(|v| devectorize(&v))
    }

    /// Largest entry modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &SuperOperator) -> f64 {
        (&self.mat - &other.mat).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `trace_row · self`: zero exactly when the map is trace-annihilating.
    pub fn trace_image(&self) -> DVector<C64> {
        let row = trace_row(self.dim);
        (row * &self.mat).transpose()
    }
}

macro_rules! superop_binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr<&SuperOperator> for &SuperOperator {
            type Output = SuperOperator;
            fn $f(self, rhs: &SuperOperator) -> SuperOperator {
                assert_eq!(self.dim, rhs.dim, "superoperator dimension mismatch");
                SuperOperator { dim: self.dim, mat: &self.mat $op &rhs.mat }
            }
        }
        impl $tr<SuperOperator> for SuperOperator {
            type Output = SuperOperator;
            fn $f(self, rhs: SuperOperator) -> SuperOperator {
                &self $op &rhs
            }
        }
    };
}
superop_binop!(Add, add, +);
superop_binop!(Sub, sub, -);
superop_binop!(Mul, mul, *);

impl Neg for &SuperOperator {
    type Output = SuperOperator;
    fn neg(self) -> SuperOperator {
        SuperOperator { dim: self.dim, mat: -&self.mat }
    }
}

/// `vec(X Y) = left_mult(X) vec(Y)`.
pub fn left_mult(x: &Operator) -> SuperOperator {
    let d = x.dim();
    let id = DMatrix::<C64>::identity(d, d);
    SuperOperator { dim: d, mat: id.kronecker(&x.mat) }
}

/// `vec(Y X) = right_mult(X) vec(Y)`.
pub fn right_mult(x: &Operator) -> SuperOperator {
    let d = x.dim();
    let id = DMatrix::<C64>::identity(d, d);
    SuperOperator { dim: d, mat: x.mat.transpose().kronecker(&id) }
}

/// `vec([X, Y]) = commutator_map(X) vec(Y)`.
pub fn commutator_map(x: &Operator) -> SuperOperator {
    &left_mult(x) - &right_mult(x)
}

/// Row vector `t` with `t · vec(X) = Tr X`.
pub fn trace_row(dim: usize) -> nalgebra::RowDVector<C64> {
    let mut row = nalgebra::RowDVector::zeros(dim * dim);
    for i in 0..dim {
        row[i * dim + i] = ONE;
    }
    row
}

fn norm1(m: &DMatrix<C64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// An LU factorization with a 1-norm condition estimate.
///
/// Systems here are at most 16×16, so the estimate is computed from the
/// explicit inverse rather than by a Hager-style iteration.
#[derive(Clone, Debug)]
pub struct Factorized {
    dim: usize,
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    condition: f64,
}

impl Factorized {
    pub fn new(a: &SuperOperator) -> Result<Self> {
        Self::from_matrix(a.dim, &a.mat)
    }

    pub(crate) fn from_matrix(dim: usize, a: &DMatrix<C64>) -> Result<Self> {
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("superoperator entry".into()));
        }
        let lu = a.clone().lu();
        let condition = match lu.try_inverse() {
            Some(inv) => norm1(a) * norm1(&inv),
            None => f64::INFINITY,
        };
        if !condition.is_finite() || condition > CONDITION_LIMIT {
            return Err(Error::Singular { condition });
        }
        Ok(Self { dim, lu, condition })
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &LiouvilleVector) -> Result<LiouvilleVector> {
        if b.dim != self.dim {
            return Err(Error::Dimension("right-hand side dimension".into()));
        }
        let data = self.lu.solve(&b.data).ok_or(Error::Singular { condition: self.condition })?;
        Ok(LiouvilleVector { dim: self.dim, data })
    }

    pub(crate) fn solve_raw(&self, b: &DVector<C64>) -> Option<DVector<C64>> {
        self.lu.solve(b)
    }
}

/// Solves `A x = b` with the default residual tolerance.
pub fn solve_linear(a: &SuperOperator, b: &LiouvilleVector) -> Result<LiouvilleVector> {
    solve_linear_with(a, b, DEFAULT_RTOL)
}

/// Solves `A x = b`, rejecting results with `‖Ax − b‖ > rtol‖b‖`.
pub fn solve_linear_with(a: &SuperOperator, b: &LiouvilleVector, rtol: f64) -> Result<LiouvilleVector> {
    let fact = Factorized::new(a)?;
    let x = fact.solve(b)?;
    let residual = (&a.mat * &x.data - &b.data).norm();
    if residual > rtol * b.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::Singular { condition: fact.condition });
    }
    Ok(x)
}

/// Unit-trace kernel element of a generator.
///
/// Solves the bordered system `[A; trace_row] x = [0; 1]` in the least-squares
/// sense via the normal equations of the stacked matrix, which is square and
/// non-singular exactly when the kernel is one-dimensional and not traceless.
pub fn null_state(a: &SuperOperator) -> Result<Operator> {
    let n = a.mat.nrows();
    let d = a.dim;
    let row = trace_row(d);

    // Rank check first so that degenerate kernels get a specific error.
    let svd = a.mat.clone().svd(false, false);
    let mut sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    sigma.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let scale = sigma.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let tol = 1e-10 * scale;
    let kernel_dim = sigma.iter().filter(|&&s| s <= tol).count();
    if kernel_dim != 1 {
        return Err(Error::Kernel { found: kernel_dim, sigma: sigma.iter().take(3).copied().collect() });
    }

    // Replace one equation of A x = 0 by the trace condition. The row to drop
    // is chosen deterministically as the one whose removal leaves the best
    // conditioned system; with n ≤ 16 trying all rows is cheap.
    let mut best: Option<(f64, DVector<C64>)> = None;
    for drop in 0..n {
        let mut m = a.mat.clone();
        m.row_mut(drop).copy_from(&row);
        let mut rhs = DVector::zeros(n);
        rhs[drop] = ONE;
        let Ok(f) = Factorized::from_matrix(d, &m) else { continue };
        if let Some(x) = f.solve_raw(&rhs) {
            if best.as_ref().is_none_or(|(c, _)| f.condition < *c) {
                best = Some((f.condition, x));
            }
        }
    }
    let Some((_, x)) = best else {
        return Err(Error::Normalization { trace: 0.0 });
    };
    let rho = devectorize(&LiouvilleVector { dim: d, data: x });
    let trace = rho.trace();
    if trace.norm() < 1e-12 {
        return Err(Error::Normalization { trace: trace.norm() });
    }
    let rho = rho.scale(ONE / trace);
    let defect = rho.hermiticity_defect();
    if defect > 1e-8 {
        log::warn!("stationary state deviates from hermiticity by {defect:.3e}; hermitizing");
    }
    Ok(rho.hermitian_part())
}

/// Spectral decomposition of a hermitian operator, energies ascending.
pub fn eigendecompose_hermitian(h: &Operator) -> Result<(Vec<f64>, Operator)> {
    let scale = h.norm().max(1.0);
    let defect = h.hermiticity_defect();
    if defect > 1e-10 * scale {
        return Err(Error::NotHermitian { defect });
    }
    let d = h.dim();
    let eig = nalgebra::SymmetricEigen::try_new(h.hermitian_part().mat, 1e-15, 10_000)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap().then(a.cmp(&b)));
    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let u = DMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    let basis = Operator { mat: u };

    let recon = &basis * &(&Operator::diagonal(&energies) * &basis.adjoint());
    let err = recon.max_abs_diff(h);
    if err > 1e-10 * scale {
        return Err(Error::Eigen(format!("reconstruction error {err:.3e}")));
    }
    Ok((energies, basis))
}
