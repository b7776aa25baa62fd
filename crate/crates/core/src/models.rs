// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Quantum-dot models and named parameter presets.
//!
//! Units: ħ = e = 1 and energies in units of the total tunnelling rate Γ.
//! Operator matrices are taken verbatim in the listed bases; no additional
//! Jordan–Wigner strings are inserted.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::bath::{LeadSpec, SoftBand};
use crate::error::{Error, Result};
use crate::generator::{CouplingChannel, SystemModel};
use crate::liouville::Operator;

/// Name of the charge observable registered by every builder.
pub const CHARGE: &str = "N";

fn number(a: &Operator) -> Operator {
    &a.adjoint() * a
}

/// Spinless level, basis {|0⟩, |1⟩}, `a = |0⟩⟨1|`, `H = ε a†a`.
/// One channel per lead with `Q⁺ = a†`.
pub fn single_dot(epsilon: f64, leads: &[LeadSpec]) -> Result<SystemModel> {
    if leads.is_empty() {
        return Err(Error::Config("single dot needs at least one lead".into()));
    }
    let a = Operator::ket_bra(2, 0, 1);
    let n = number(&a);
    let h = n.scale(epsilon.into());
    let channels = leads.iter().map(|l| CouplingChannel::new(a.adjoint(), l.clone())).collect();
    SystemModel::new(h, channels, BTreeMap::from([(CHARGE.to_string(), n)]))
}

/// The Anderson-dot annihilators `(a_↑, a_↓)` in the basis
/// {|0⟩, |↑⟩, |↓⟩, |2⟩}.
pub fn anderson_operators() -> (Operator, Operator) {
    let up = &Operator::ket_bra(4, 0, 1) - &Operator::ket_bra(4, 2, 3);
    let down = &Operator::ket_bra(4, 0, 2) + &Operator::ket_bra(4, 1, 3);
    (up, down)
}

/// Spinful level with on-site repulsion,
/// `H = ε_↑ n_↑ + ε_↓ n_↓ + U n_↑ n_↓`.
///
/// Each lead couples to both spins with the same Γ; the channels are ordered
/// (lead, spin) with spin ↑ first.
pub fn anderson_dot(epsilon_up: f64, epsilon_down: f64, u: f64, leads: &[LeadSpec]) -> Result<SystemModel> {
    if leads.is_empty() {
        return Err(Error::Config("anderson dot needs at least one lead".into()));
    }
    let (up, down) = anderson_operators();
    let (n_up, n_down) = (number(&up), number(&down));
    let h = &(&n_up.scale(epsilon_up.into()) + &n_down.scale(epsilon_down.into())) + &(&n_up * &n_down).scale(u.into());
    let channels = leads
        .iter()
        .flat_map(|l| [CouplingChannel::new(up.adjoint(), l.clone()), CouplingChannel::new(down.adjoint(), l.clone())])
        .collect();
    let observables = BTreeMap::from([
        (CHARGE.to_string(), &n_up + &n_down),
        ("n_up".to_string(), n_up),
        ("n_down".to_string(), n_down),
    ]);
    SystemModel::new(h, channels, observables)
}

/// The double-dot annihilators `(a_l, a_r)` in the basis {|0⟩, |L⟩, |R⟩, |2⟩}.
pub fn double_dot_operators() -> (Operator, Operator) {
    let l = &Operator::ket_bra(4, 0, 1) + &Operator::ket_bra(4, 2, 3);
    let r = &Operator::ket_bra(4, 0, 2) - &Operator::ket_bra(4, 1, 3);
    (l, r)
}

/// Serial double dot,
/// `H = ε_l n_l + ε_r n_r + U n_l n_r + Ω (a_l† a_r + a_r† a_l)`,
/// with the left lead coupled to `a_l` and the right lead to `a_r`.
pub fn double_dot(eps_l: f64, eps_r: f64, u: f64, omega: f64, left: LeadSpec, right: LeadSpec) -> Result<SystemModel> {
    let (al, ar) = double_dot_operators();
    let (nl, nr) = (number(&al), number(&ar));
    let hop = &al.adjoint() * &ar;
    let h = &(&(&nl.scale(eps_l.into()) + &nr.scale(eps_r.into())) + &(&nl * &nr).scale(u.into()))
        + &(&hop + &hop.adjoint()).scale(omega.into());
    let channels = vec![CouplingChannel::new(al.adjoint(), left), CouplingChannel::new(ar.adjoint(), right)];
    let observables =
        BTreeMap::from([(CHARGE.to_string(), &nl + &nr), ("n_l".to_string(), nl), ("n_r".to_string(), nr)]);
    SystemModel::new(h, channels, observables)
}

/// Default frequency sweep of a preset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepDefaults {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

/// Default time-domain settings of a preset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeDomainDefaults {
    pub t_max: f64,
    pub t_prep: f64,
    /// Half-width of the soft band used for the time-domain bath.
    pub band_half_width: f64,
    pub band_edge_width: f64,
}

/// A target value with where it comes from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expected {
    pub name: String,
    pub value: f64,
    pub provenance: String,
}

/// How the preset's model was built, for config echo.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelKind {
    SingleDot { epsilon: f64 },
    AndersonDot { epsilon_up: f64, epsilon_down: f64, u: f64 },
    DoubleDot { eps_l: f64, eps_r: f64, u: f64, omega: f64 },
}

impl ModelKind {
    /// Builds the model from these parameters and `leads` (L then R).
    pub fn build(&self, leads: &[LeadSpec]) -> Result<SystemModel> {
        match *self {
            ModelKind::SingleDot { epsilon } => single_dot(epsilon, leads),
            ModelKind::AndersonDot { epsilon_up, epsilon_down, u } => anderson_dot(epsilon_up, epsilon_down, u, leads),
            ModelKind::DoubleDot { eps_l, eps_r, u, omega } => {
                let [l, r] = leads else {
                    return Err(Error::Config(format!("double dot needs exactly two leads, got {}", leads.len())));
                };
                double_dot(eps_l, eps_r, u, omega, l.clone(), r.clone())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelPreset {
    pub name: String,
    pub description: String,
    pub kind: ModelKind,
    pub leads: Vec<LeadSpec>,
    pub model: SystemModel,
    pub sweep: SweepDefaults,
    pub time_domain: TimeDomainDefaults,
    pub expected: Vec<Expected>,
    /// Extra notes carried into output metadata.
    pub notes: Vec<String>,
}

impl ModelPreset {
    /// The same system with every lead given the preset's soft band, as
    /// used for the time-domain route.
    pub fn time_domain_model(&self) -> Result<SystemModel> {
        let band = SoftBand {
            center: 0.0,
            half_width: self.time_domain.band_half_width,
            edge_width: self.time_domain.band_edge_width,
        };
        self.model.map_leads(|l| l.clone().with_band(band))
    }
}

const BETA: f64 = 10.0;

fn leads(gamma_l: f64, gamma_r: f64, mu: f64) -> Vec<LeadSpec> {
    vec![LeadSpec::new("L", gamma_l, mu, BETA), LeadSpec::new("R", gamma_r, -mu, BETA)]
}

fn exp(name: &str, value: f64, provenance: &str) -> Expected {
    Expected { name: name.into(), value, provenance: provenance.into() }
}

const TD_DEFAULT: TimeDomainDefaults =
    TimeDomainDefaults { t_max: 50.0, t_prep: 25.0, band_half_width: 12.0, band_edge_width: 1.0 };

fn preset(
    name: &str,
    description: &str,
    kind: ModelKind,
    leads: Vec<LeadSpec>,
    sweep: SweepDefaults,
    expected: Vec<Expected>,
    notes: Vec<String>,
) -> Result<ModelPreset> {
    let model = kind.build(&leads)?;
    Ok(ModelPreset {
        name: name.into(),
        description: description.into(),
        kind,
        leads,
        model,
        sweep,
        time_domain: TD_DEFAULT,
        expected,
        notes,
    })
}

fn fig3(name: &str, gamma_l: f64, gamma_r: f64) -> Result<ModelPreset> {
    let g = gamma_l + gamma_r;
    let desc = format!(
        "single spinless level, eps = 1, kT = 0.1, mu_L = -mu_R = 6, Gamma_L = {gamma_l:.4}, Gamma_R = {gamma_r:.4}"
    );
    preset(
        name,
        &desc,
        ModelKind::SingleDot { epsilon: 1.0 },
        leads(gamma_l, gamma_r, 6.0),
        SweepDefaults { omega_min: -10.0, omega_max: 10.0, points: 2001 },
        vec![
            exp("rho_00", gamma_r / g, "stationary population Gamma_R/Gamma"),
            exp("rho_11", gamma_l / g, "stationary population Gamma_L/Gamma"),
            exp("step_L", 5.0, "|eps - mu_L|"),
            exp("step_R", 7.0, "|eps - mu_R|"),
            exp("ratio_positive", (gamma_l / gamma_r).powi(2), "h_L:h_R = Gamma_L^2:Gamma_R^2"),
            exp("ratio_negative", 1.0, "h'_L/h'_R = 1"),
        ],
        vec![],
    )
}

fn fig4(u: f64) -> Result<ModelPreset> {
    let eps = 1.0;
    let mu = 6.0;
    let regime = if u == 0.0 {
        "non-interacting"
    } else if eps + u < mu {
        "weak U (mu_L > eps + U)"
    } else {
        "strong U (eps + U > mu_L)"
    };
    preset(
        &format!("fig4-u{u}"),
        &format!(
            "Anderson dot, eps = 1, U = {u}, kT = 0.1, mu_L = -mu_R = 6, Gamma_L = Gamma_R = 0.5 per spin; {regime}"
        ),
        ModelKind::AndersonDot { epsilon_up: eps, epsilon_down: eps, u },
        leads(0.5, 0.5, mu),
        SweepDefaults { omega_min: -25.0, omega_max: 25.0, points: 5001 },
        vec![
            exp("step_L0", (eps - mu).abs(), "|eps - mu_L|"),
            exp("step_R0", (eps + mu).abs(), "|eps - mu_R|"),
            exp("step_LU", (eps + u - mu).abs(), "|eps + U - mu_L|"),
            exp("step_RU", (eps + u + mu).abs(), "|eps + U - mu_R|"),
        ],
        vec![format!("U = {u} is a representative of the {regime} regime, not a value read from a plot")],
    )
}

fn fig5(u: f64, omega: f64, name: String) -> Result<ModelPreset> {
    preset(
        &name,
        &format!("serial double dot, eps_l = eps_r = 0, U = {u}, Omega = {omega}, kT = 0.1, mu_L = -mu_R = 5, Gamma_L = Gamma_R = 0.5"),
        ModelKind::DoubleDot { eps_l: 0.0, eps_r: 0.0, u, omega },
        leads(0.5, 0.5, 5.0),
        SweepDefaults { omega_min: -10.0, omega_max: 10.0, points: 2001 },
        vec![exp("rabi", 2.0 * omega, "eigenenergy splitting 2*Omega")],
        vec![],
    )
}

/// Interdot couplings used by the Ω sweep.
pub const OMEGA_SWEEP: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];

/// Every preset family name.
pub fn preset_names() -> Vec<&'static str> {
    vec![
        "fig3",
        "fig3-asym",
        "fig4-u0",
        "fig4-u2",
        "fig4-u6",
        "fig4-u15",
        "fig5-u0",
        "fig5-u2",
        "fig5-u6",
        "fig5-u15",
        "fig5-omega-sweep",
    ]
}

/// Looks up a preset. Families (the Ω sweep) return several members; each
/// member can also be looked up by its own name.
pub fn lookup(name: &str) -> Result<Vec<ModelPreset>> {
    let one = |p: Result<ModelPreset>| p.map(|p| vec![p]);
    match name {
        "fig3" => one(fig3("fig3", 0.5, 0.5)),
        "fig3-asym" => one(fig3("fig3-asym", 2.0 / 3.0, 1.0 / 3.0)),
        "fig4-u0" => one(fig4(0.0)),
        "fig4-u2" => one(fig4(2.0)),
        "fig4-u6" => one(fig4(6.0)),
        "fig4-u15" => one(fig4(15.0)),
        "fig5-u0" => one(fig5(0.0, 2.0, "fig5-u0".into())),
        "fig5-u2" => one(fig5(2.0, 2.0, "fig5-u2".into())),
        "fig5-u6" => one(fig5(6.0, 2.0, "fig5-u6".into())),
        "fig5-u15" => one(fig5(15.0, 2.0, "fig5-u15".into())),
        "fig5-omega-sweep" => OMEGA_SWEEP.iter().map(|&w| fig5(15.0, w, format!("fig5-omega{w}"))).collect(),
        other => match other.strip_prefix("fig5-omega").and_then(|w| w.parse::<f64>().ok()) {
            // Members of the Ω sweep resolve individually, so that output
            // metadata naming a member can be re-run.
            Some(w) if OMEGA_SWEEP.contains(&w) => one(fig5(15.0, w, other.to_string())),
            _ => Err(Error::Config(format!("unknown preset '{other}' (known: {})", preset_names().join(", ")))),
        },
    }
}

/// Looks up a preset that must have exactly one member.
pub fn lookup_one(name: &str) -> Result<ModelPreset> {
    let mut v = lookup(name)?;
    if v.len() != 1 {
        return Err(Error::Config(format!("preset '{name}' is a family of {} models", v.len())));
    }
    Ok(v.remove(0))
}
