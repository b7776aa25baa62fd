// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Adaptive Gauss–Kronrod (7/15) quadrature and Cauchy principal values.
//!
//! Used for the band-limited dispersion integrals and, in tests, as an
//! independent oracle for closed-form bath functions.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights on the odd Kronrod nodes (XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Tolerances and limits for the adaptive integrator.
#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-11, max_intervals: 4000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = h * XGK[k];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// `∫_a^b f` by global adaptive bisection.
///
/// The interval with the largest error estimate is split until the summed
/// estimate meets `max(abs_tol, rel_tol·|I|)`.  Interval selection is
/// deterministic, so repeated calls are bit-identical.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    let (v, e) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    loop {
        let value: f64 = intervals.iter().map(|t| t.2).sum();
        let error: f64 = intervals.iter().map(|t| t.3).sum();
        if !value.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(QuadResult { value, error });
        }
        if intervals.len() >= opts.max_intervals {
            return Err(Error::Quadrature(format!(
                "{} intervals on [{a}, {b}], error estimate {error:.3e}",
                intervals.len()
            )));
        }
        let (k, _) =
            intervals.iter().enumerate().fold((0, -1.0), |acc, (i, t)| if t.3 > acc.1 { (i, t.3) } else { acc });
        let (lo, hi, _, _) = intervals.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// `∫_a^∞ f` via the substitution `t = a + (1 − s)/s`.
pub fn integrate_to_infinity(f: impl Fn(f64) -> f64, a: f64, opts: QuadOptions) -> Result<QuadResult> {
    integrate(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let t = a + (1.0 - s) / s;
            f(t) / (s * s)
        },
        0.0,
        1.0,
        opts,
    )
}

/// Cauchy principal value `PV ∫_a^b h(t)/(t − x) dt` for `a < x < b`.
///
/// The symmetric part around the pole is folded into the regular integrand
/// `[h(x+u) − h(x−u)]/u` on `(0, r]`; the remainder is an ordinary integral.
/// Extra breakpoints (e.g. Fermi edges) can be supplied to help the
/// adaptive splitting.
pub fn principal_value(
    h: impl Fn(f64) -> f64,
    x: f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    if !(a < x && x < b) {
        return Err(Error::Quadrature(format!("pole {x} not inside ({a}, {b})")));
    }
    let r = (x - a).min(b - x);
    let mut total = QuadResult { value: 0.0, error: 0.0 };
    let mut add = |q: QuadResult| {
        total.value += q.value;
        total.error += q.error;
    };

    let folded = |u: f64| (h(x + u) - h(x - u)) / u;
    let mut cuts: Vec<f64> = breakpoints.iter().map(|&p| (p - x).abs()).filter(|&u| u > 0.0 && u < r).collect();
    cuts.push(0.0);
    cuts.push(r);
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    for w in cuts.windows(2) {
        add(integrate(folded, w[0], w[1], opts)?);
    }

    let (lo, hi) = if x - a > b - x { (a, x - r) } else { (x + r, b) };
    if hi > lo {
        let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&p| p > lo && p < hi).collect();
        cuts.push(lo);
        cuts.push(hi);
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        cuts.dedup();
        for w in cuts.windows(2) {
            add(integrate(|t| h(t) / (t - x), w[0], w[1], opts)?);
        }
    }
    Ok(total)
}

/// `PV ∫_{−∞}^{∞} h(t)/(t − x) dt`; `h` must decay at least like `1/t^ε`.
///
/// `scale` sets where the folded integrand is split into a finite part and a
/// mapped tail.
pub fn principal_value_infinite(
    h: impl Fn(f64) -> f64,
    x: f64,
    scale: f64,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    let folded = |u: f64| (h(x + u) - h(x - u)) / u;
    let mut cuts: Vec<f64> = breakpoints.iter().map(|&p| (p - x).abs()).filter(|&u| u > 0.0 && u < scale).collect();
    cuts.push(0.0);
    cuts.push(scale);
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in cuts.windows(2) {
        let q = integrate(folded, w[0], w[1], opts)?;
        value += q.value;
        error += q.error;
    }
    let q = integrate_to_infinity(folded, scale, opts)?;
    Ok(QuadResult { value: value + q.value, error: error + q.error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|t| t.powi(6) - 2.0 * t, -1.0, 2.0, QuadOptions::default()).unwrap();
        assert!((q.value - (129.0 / 7.0 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_tail() {
        let q = integrate_to_infinity(|t| (-t * t).exp(), 0.0, QuadOptions::default()).unwrap();
        assert!((q.value - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn pv_of_constant() {
        // PV∫_{-1}^{2} dt/(t − 0) = ln 2.
        let q = principal_value(|_| 1.0, 0.0, -1.0, 2.0, &[], QuadOptions::default()).unwrap();
        assert!((q.value - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn pv_lorentzian_hilbert_transform() {
        // PV∫ dt/(1+t²)/(t − x) = −π x/(1 + x²).
        for &x in &[-3.0, -0.2, 0.7, 5.0] {
            let q = principal_value_infinite(|t| 1.0 / (1.0 + t * t), x, 10.0, &[], QuadOptions::default()).unwrap();
            let exact = -std::f64::consts::PI * x / (1.0 + x * x);
            assert!((q.value - exact).abs() < 1e-10, "x={x}: {} vs {exact}", q.value);
        }
    }

    #[test]
    fn pole_outside_is_rejected() {
        assert!(principal_value(|_| 1.0, 3.0, -1.0, 2.0, &[], QuadOptions::default()).is_err());
    }
}
