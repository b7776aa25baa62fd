// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Digamma function for real and complex arguments.
//!
//! Both evaluators shift the argument upward with `ψ(z) = ψ(z+1) − 1/z`
//! until `Re z ≥ 8`, then sum the Stirling-type asymptotic series
//!
//! ```text
//! ψ(z) ~ ln z − 1/(2z) − Σ_k B_2k / (2k z^2k)
//! ```
//!
//! truncated after `z^-20`; at `|z| ≥ 8` the first omitted term is below
//! 1e-17.  Arguments with negative real part use reflection.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SHIFT: f64 = 8.0;

// B_2k / (2k) for k = 1..10.
const ASYMPTOTIC: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
    43867.0 / 14364.0,
    -174611.0 / 6600.0,
];

// Bits of an f64 added to the leading asymptotic coefficient. Zero in normal
// operation; the self-check suite sets it to prove that the digamma check can
// fail.
static PERTURBATION: AtomicU64 = AtomicU64::new(0);

/// Test hook: perturbs the leading asymptotic coefficient by `delta`.
///
/// Global and process-wide. Only the self-check negative control uses it.
#[doc(hidden)]
pub fn set_digamma_perturbation(delta: f64) {
    PERTURBATION.store(delta.to_bits(), Ordering::SeqCst);
}

#[inline]
fn leading_coefficient() -> f64 {
    ASYMPTOTIC[0] + f64::from_bits(PERTURBATION.load(Ordering::Relaxed))
}

/// ψ(x) for real `x`; poles at non-positive integers return NaN.
pub fn digamma(x: f64) -> f64 {
    if !x.is_finite() {
        return if x == f64::INFINITY { f64::INFINITY } else { f64::NAN };
    }
    if x <= 0.0 {
        if x == x.floor() {
            return f64::NAN;
        }
        // ψ(x) = ψ(1 − x) − π cot(πx)
        return digamma(1.0 - x) - PI / (PI * x).tan();
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let mut series = 0.0;
    for &c in ASYMPTOTIC[1..].iter().rev() {
        series = (series + c) * inv2;
    }
    series = (series + leading_coefficient()) * inv2;
    acc + x.ln() - 0.5 / x - series
}

/// ψ(z) for complex `z`; poles at non-positive integers return NaN.
pub fn digamma_complex(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        return Complex64::new(digamma(z.re), 0.0);
    }
    if z.re < 0.0 {
        // ψ(z) = ψ(1 − z) − π cot(πz)
        let pz = z * PI;
        return digamma_complex(Complex64::new(1.0, 0.0) - z) - PI * pz.cos() / pz.sin();
    }
    let mut z = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while z.re < SHIFT {
        acc -= z.inv();
        z += 1.0;
    }
    let inv2 = (z * z).inv();
    let mut series = Complex64::new(0.0, 0.0);
    for &c in ASYMPTOTIC[1..].iter().rev() {
        series = (series + c) * inv2;
    }
    series = (series + leading_coefficient()) * inv2;
    acc + z.ln() - 0.5 * z.inv() - series
}

/// `Re ψ(1/2 + i y)`, the combination that enters Fermi-bath dispersion.
///
/// For large `|y|` the shift loop is skipped: the asymptotic series in `z`
/// converges once `|z| ≥ 8` regardless of the real part.
pub fn re_digamma_half_line(y: f64) -> f64 {
    let z = Complex64::new(0.5, y);
    if y.abs() >= SHIFT {
        let inv2 = (z * z).inv();
        let mut series = Complex64::new(0.0, 0.0);
        for &c in ASYMPTOTIC[1..].iter().rev() {
            series = (series + c) * inv2;
        }
        series = (series + leading_coefficient()) * inv2;
        return (z.ln() - 0.5 * z.inv() - series).re;
    }
    digamma_complex(z).re
}
