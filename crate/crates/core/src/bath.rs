// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Fermionic reservoir correlation functions in the frequency domain.
//!
//! Conventions (σ = ± throughout):
//!
//! * `C^σ(ω) = Γ(ω) f^σ(ω)` with `f⁺` the Fermi function and `f⁻ = 1 − f⁺`.
//! * Time-domain correlators `C^σ(t) = ∫dω/2π e^{σiωt} C^σ(ω)`.
//! * Half-Fourier transforms `C̃^σ(ω) = ∫₀^∞ dt e^{iωt} C^σ(t)`, which gives
//!
//!   ```text
//!   C̃^σ(ω) = ½ [ C^σ(−σω) + i Λ^σ(−σω) ]
//!   Λ^σ(x)  = σ (1/π) PV ∫ dω′ C^σ(ω′) / (ω′ − x)
//!   ```
//!
//!   i.e. the dispersion is evaluated at the same shifted argument as the
//!   absorptive part.  This is fixed by the direct half-Fourier integral and
//!   checked against a Matsubara-series evaluation in the tests.
//!
//! For the Lorentzian `Γ(ω) = Γ w²/((ω−μ)² + w²)` the principal value has
//! the closed form (`y = x − μ`)
//!
//! ```text
//! Λ^σ(x) = Γ(x)/π · { Re ψ(½ + iβy/2π) − ψ(½ + βw/2π) − σ π y/(2w) }
//! ```
//!
//! The dispersion always uses the Lorentzian, even when `wideband` flattens
//! the absorptive part: a flat band has no finite Hilbert transform.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{principal_value, QuadOptions};
use crate::special::{digamma, re_digamma_half_line};

/// Particle (`Plus`, Q⁺ = a†, C⁺ ∝ f⁺) or hole (`Minus`) process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }
}

/// Smooth band window `g(ω) = σ((E − (ω−c))/s) · σ((E + (ω−c))/s)`.
///
/// A finite-support reservoir whose correlation functions can be sampled on
/// an ordinary frequency grid.  The dispersion is computed by numerical
/// principal value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftBand {
    #[serde(default)]
    pub center: f64,
    pub half_width: f64,
    pub edge_width: f64,
}

impl SoftBand {
    /// Logistic tails are below 1e-15 beyond this many edge widths.
    const TAIL: f64 = 36.0;

    pub fn window(&self, omega: f64) -> f64 {
        let y = omega - self.center;
        logistic((self.half_width - y) / self.edge_width) * logistic((self.half_width + y) / self.edge_width)
    }

    /// Interval outside which the window is negligible.
    pub fn support(&self) -> (f64, f64) {
        let r = self.half_width + Self::TAIL * self.edge_width;
        (self.center - r, self.center + r)
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One reservoir channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeadSpec {
    pub label: String,
    /// Coupling strength Γ_αμ (peak of the spectral density).
    pub gamma: f64,
    /// Chemical potential μ_α.
    pub mu: f64,
    /// Inverse temperature β.
    pub beta: f64,
    /// Lorentzian half-width w.
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    /// Flat Γ(ω) = Γ in the absorptive part.
    #[serde(default = "default_wideband")]
    pub wideband: bool,
    /// Optional finite band; overrides `wideband`/`cutoff` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<SoftBand>,
}

fn default_cutoff() -> f64 {
    LeadSpec::DEFAULT_CUTOFF
}

fn default_wideband() -> bool {
    true
}

impl LeadSpec {
    pub const DEFAULT_CUTOFF: f64 = 100.0;

    /// A wide-band Lorentzian lead with the default cutoff `w = 100`.
    pub fn new(label: impl Into<String>, gamma: f64, mu: f64, beta: f64) -> Self {
        Self { label: label.into(), gamma, mu, beta, cutoff: Self::DEFAULT_CUTOFF, wideband: true, band: None }
    }

    pub fn with_cutoff(mut self, cutoff: f64, wideband: bool) -> Self {
        self.cutoff = cutoff;
        self.wideband = wideband;
        self
    }

    pub fn with_band(mut self, band: SoftBand) -> Self {
        self.band = Some(band);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("lead '{}': {what}", self.label)));
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be finite and >= 0");
        }
        if !self.mu.is_finite() {
            return bad("mu must be finite");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be finite and > 0");
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return bad("cutoff must be finite and > 0");
        }
        if let Some(b) = &self.band {
            if !(b.half_width > 0.0 && b.edge_width > 0.0 && b.center.is_finite()) {
                return bad("band half_width and edge_width must be > 0");
            }
        }
        Ok(())
    }
}

/// Fermi occupation `f⁺` or its complement `f⁻`, overflow-free.
pub fn fermi(lead: &LeadSpec, omega: f64, sign: Sign) -> f64 {
    let x = lead.beta * (omega - lead.mu);
    // f⁻(x) = f⁺(−x); evaluate so that the exponential never overflows.
    let x = match sign {
        Sign::Plus => x,
        Sign::Minus => -x,
    };
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Lorentzian spectral density (flat when `wideband`), times the band window.
pub fn spectral_density(lead: &LeadSpec, omega: f64) -> f64 {
    if let Some(band) = &lead.band {
        return lead.gamma * band.window(omega);
    }
    if lead.wideband {
        lead.gamma
    } else {
        lorentzian(lead, omega)
    }
}

fn lorentzian(lead: &LeadSpec, omega: f64) -> f64 {
    let y = omega - lead.mu;
    let w = lead.cutoff;
    lead.gamma * w * w / (y * y + w * w)
}

/// `C^σ(ω) = Γ(ω) f^σ(ω)`.
pub fn c_omega(lead: &LeadSpec, omega: f64, sign: Sign) -> f64 {
    spectral_density(lead, omega) * fermi(lead, omega, sign)
}

/// Dispersion `Λ^σ(ω)`; closed form for Lorentzian leads, numerical
/// principal value for band-limited ones.
pub fn lambda_omega(lead: &LeadSpec, omega: f64, sign: Sign) -> f64 {
    if lead.gamma == 0.0 {
        return 0.0;
    }
    match &lead.band {
        None => lambda_lorentzian(lead, omega, sign),
        Some(band) => lambda_band(lead, band, omega, sign).unwrap_or_else(|e| {
            log::error!("band dispersion failed at omega = {omega}: {e}");
            f64::NAN
        }),
    }
}

fn lambda_lorentzian(lead: &LeadSpec, omega: f64, sign: Sign) -> f64 {
    let y = omega - lead.mu;
    let b = lead.beta / (2.0 * PI);
    let w = lead.cutoff;
    let brace = re_digamma_half_line(b * y) - digamma(0.5 + b * w) - sign.value() * PI * y / (2.0 * w);
    lorentzian(lead, omega) / PI * brace
}

fn lambda_band(lead: &LeadSpec, band: &SoftBand, x: f64, sign: Sign) -> Result<f64> {
    let (a, b) = band.support();
    let c = |t: f64| c_omega(lead, t, sign);
    let edges = [band.center - band.half_width, band.center + band.half_width, lead.mu];
    let opts = QuadOptions { abs_tol: 1e-13 * lead.gamma, rel_tol: 1e-11, max_intervals: 4000 };
    let pv = if x > a && x < b {
        principal_value(c, x, a, b, &edges, opts)?.value
    } else {
        // Pole outside the support: an ordinary integral.
        let mut cuts: Vec<f64> = edges.iter().copied().filter(|&p| p > a && p < b).collect();
        cuts.extend([a, b]);
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            acc += crate::quadrature::integrate(|t| c(t) / (t - x), w[0], w[1], opts)?.value;
        }
        acc
    };
    Ok(sign.value() * pv / PI)
}

/// `C̃^σ(ω) = ½[C^σ(−σω) + iΛ^σ(−σω)]`.
pub fn c_tilde(lead: &LeadSpec, omega: f64, sign: Sign) -> Complex64 {
    if lead.gamma == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let x = -sign.value() * omega;
    Complex64::new(0.5 * c_omega(lead, x, sign), 0.5 * lambda_omega(lead, x, sign))
}

/// `1/min(w, π/β)`: the slowest decay time of the bath correlations.
pub fn memory_time(lead: &LeadSpec) -> f64 {
    let w = match &lead.band {
        Some(b) => b.edge_width.recip().min(lead.cutoff),
        None => lead.cutoff,
    };
    1.0 / w.min(PI / lead.beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3_left() -> LeadSpec {
        LeadSpec::new("L", 0.5, 6.0, 10.0)
    }

    #[test]
    fn fermi_symmetry_point_and_limits() {
        let l = fig3_left();
        assert_eq!(fermi(&l, 6.0, Sign::Plus), 0.5);
        assert_eq!(fermi(&l, 1e6, Sign::Plus), 0.0);
        assert_eq!(fermi(&l, 1e6, Sign::Minus), 1.0);
        let expect = 1.0 / (1.0 + std::f64::consts::E);
        assert!((fermi(&l, 6.1, Sign::Plus) - expect).abs() < 1e-15);
        assert!((fermi(&l, 6.1, Sign::Plus) - 0.26894).abs() < 1e-5);
    }

    #[test]
    fn spectral_density_shape() {
        let l = fig3_left().with_cutoff(100.0, false);
        assert_eq!(spectral_density(&l, 6.0), 0.5);
        assert!((spectral_density(&l, 106.0) - 0.25).abs() < 1e-15);
        assert!((spectral_density(&l, -94.0) - 0.25).abs() < 1e-15);
        assert_eq!(spectral_density(&fig3_left(), 77.0), 0.5);
    }

    #[test]
    fn c_omega_limits() {
        let l = fig3_left();
        assert_eq!(c_omega(&l, 6.0, Sign::Plus), 0.25);
        assert!((c_omega(&l, -10.0, Sign::Plus) - 0.5).abs() < 1e-15);
        assert!(c_omega(&l, -10.0, Sign::Minus) < 1e-60);
    }

    #[test]
    fn lambda_at_chemical_potential() {
        let l = fig3_left();
        let psi_half = -crate::special::EULER_GAMMA - 2.0 * std::f64::consts::LN_2;
        let expect = 0.5 / PI * (psi_half - digamma(0.5 + 10.0 * 100.0 / (2.0 * PI)));
        for s in Sign::BOTH {
            assert!((lambda_omega(&l, 6.0, s) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn lambda_sign_difference() {
        // Λ⁺ − Λ⁻ = −Γ(ω)(ω − μ)/w
        let l = fig3_left();
        for &x in &[-20.0, -3.0, 0.0, 5.5, 19.0] {
            let d = lambda_omega(&l, x, Sign::Plus) - lambda_omega(&l, x, Sign::Minus);
            let g = lorentzian(&l, x);
            assert!((d + g * (x - 6.0) / 100.0).abs() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn c_tilde_real_part() {
        let l = fig3_left();
        for &x in &[-7.0, 0.3, 4.0] {
            assert_eq!(c_tilde(&l, x, Sign::Plus).re, 0.5 * c_omega(&l, -x, Sign::Plus));
            assert_eq!(c_tilde(&l, x, Sign::Minus).re, 0.5 * c_omega(&l, x, Sign::Minus));
        }
        let zero = LeadSpec { gamma: 0.0, ..fig3_left() };
        assert_eq!(c_tilde(&zero, 1.0, Sign::Plus), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn memory_time_limits() {
        assert!((memory_time(&fig3_left()) - 10.0 / PI).abs() < 1e-15);
        assert!((memory_time(&fig3_left()) - 3.18).abs() < 1e-2);
        let hot = LeadSpec { beta: 1e-6, ..fig3_left() };
        assert!((memory_time(&hot) - 0.01).abs() < 1e-15);
        let sharp = fig3_left().with_cutoff(1e9, true);
        assert!((memory_time(&sharp) - 10.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(fig3_left().validate().is_ok());
        assert!(LeadSpec { beta: 0.0, ..fig3_left() }.validate().is_err());
        assert!(LeadSpec { gamma: -1.0, ..fig3_left() }.validate().is_err());
        assert!(LeadSpec { cutoff: 0.0, ..fig3_left() }.validate().is_err());
    }
}
