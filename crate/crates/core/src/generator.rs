// Copyright 2026 nmkcorr Contributors
// SPDX-License-Identifier: Apache-2.0

//! Second-order self-energy, resolvent and stationary state.
//!
//! The reduced dynamics in the Markovian limit is `ρ̇ = M ρ` with
//! `M = −i L_s − Σ̃(0)`, where
//!
//! ```text
//! Σ̃(ω) X = Σ_{channels} Σ_σ [Q^{−σ}, C̃_Q^σ(L_s, ω) X]
//! C̃_Q^σ(L_s, ω) X = C̃^σ(ω − L_s) Q^σ X − X C̃^{−σ}*(L_s − ω) Q^σ
//! ```
//!
//! With the e^{iωt} Laplace convention this fixes the resolvent as
//! `Π̃(ω) = [i(L_s − ω) + Σ̃(ω)]⁻¹ = −(M(ω) + iω)⁻¹`; the sign in front of
//! Σ̃ is the one consistent with the stationary equation `M ρ̄ = 0`.
//!
//! Functions of L_s are evaluated in the eigenbasis of H_s, where they act
//! elementwise with the Bohr frequencies `ω_ij = E_i − E_j`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::bath::{c_tilde, LeadSpec, Sign};
use crate::error::{Error, Result};
use crate::liouville::{
    commutator_map, eigendecompose_hermitian, null_state, Factorized, LiouvilleVector, Operator, SuperOperator, C64, I,
};

/// One system–reservoir coupling term `Q⁺ F⁻ + Q⁻ F⁺`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingChannel {
    q_plus: Operator,
    q_minus: Operator,
    lead: LeadSpec,
}

impl CouplingChannel {
    /// `Q⁻ = (Q⁺)†`.
    pub fn new(q_plus: Operator, lead: LeadSpec) -> Self {
        let q_minus = q_plus.adjoint();
        Self { q_plus, q_minus, lead }
    }

    /// Explicit pair, checked to be adjoint to each other.
    pub fn with_operators(q_plus: Operator, q_minus: Operator, lead: LeadSpec) -> Result<Self> {
        if q_plus.dim() != q_minus.dim() {
            return Err(Error::Dimension("Q+ and Q- dims differ".into()));
        }
        let defect = q_minus.max_abs_diff(&q_plus.adjoint());
        if defect > 1e-12 {
            return Err(Error::Config(format!("Q- is not the adjoint of Q+ (defect {defect:.3e})")));
        }
        Ok(Self { q_plus, q_minus, lead })
    }

    /// Hermitian coupling `Q⁺ = Q⁻ = Q`.
    pub fn hermitian(q: Operator, lead: LeadSpec) -> Result<Self> {
        Self::with_operators(q.clone(), q, lead)
    }

    pub fn q(&self, sign: Sign) -> &Operator {
        match sign {
            Sign::Plus => &self.q_plus,
            Sign::Minus => &self.q_minus,
        }
    }

    pub fn lead(&self) -> &LeadSpec {
        &self.lead
    }
}

/// Eigenbasis of H_s.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenFrame {
    pub energies: Vec<f64>,
    pub basis: Operator,
    /// `bohr[(i, j)] = E_i − E_j`.
    pub bohr: DMatrix<f64>,
}

impl EigenFrame {
    pub fn new(h: &Operator) -> Result<Self> {
        let (energies, basis) = eigendecompose_hermitian(h)?;
        let d = energies.len();
        let bohr = DMatrix::from_fn(d, d, |i, j| energies[i] - energies[j]);
        Ok(Self { energies, basis, bohr })
    }

    pub fn to_eigen(&self, x: &Operator) -> DMatrix<C64> {
        self.basis.matrix().adjoint() * x.matrix() * self.basis.matrix()
    }

    pub fn from_eigen(&self, x: &DMatrix<C64>) -> Operator {
        Operator::from_fn(x.nrows(), {
            let m = self.basis.matrix() * x * self.basis.matrix().adjoint();
            move |i, j| m[(i, j)]
        })
    }
}

/// System Hamiltonian, coupling channels and named observables.
#[derive(Clone, Debug)]
pub struct SystemModel {
    h_s: Operator,
    channels: Vec<CouplingChannel>,
    observables: BTreeMap<String, Operator>,
    frame: EigenFrame,
    // Coupling operators in the eigenframe, indexed [channel][sign].
    q_eigen: Vec<[DMatrix<C64>; 2]>,
}

impl SystemModel {
    pub fn new(h_s: Operator, channels: Vec<CouplingChannel>, observables: BTreeMap<String, Operator>) -> Result<Self> {
        let d = h_s.dim();
        let defect = h_s.hermiticity_defect();
        if defect > 1e-12 * h_s.norm().max(1.0) {
            return Err(Error::NotHermitian { defect });
        }
        for (k, c) in channels.iter().enumerate() {
            if c.q_plus.dim() != d {
                return Err(Error::Dimension(format!("channel {k} acts on d={}, H_s on d={d}", c.q_plus.dim())));
            }
            c.lead.validate()?;
        }
        for (name, o) in &observables {
            if o.dim() != d {
                return Err(Error::Dimension(format!("observable '{name}' has d={}", o.dim())));
            }
        }
        let frame = EigenFrame::new(&h_s)?;
        let q_eigen = channels.iter().map(|c| [frame.to_eigen(&c.q_plus), frame.to_eigen(&c.q_minus)]).collect();
        Ok(Self { h_s, channels, observables, frame, q_eigen })
    }

    pub fn dim(&self) -> usize {
        self.h_s.dim()
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.h_s
    }

    pub fn channels(&self) -> &[CouplingChannel] {
        &self.channels
    }

    pub fn observables(&self) -> &BTreeMap<String, Operator> {
        &self.observables
    }

    pub fn observable(&self, name: &str) -> Result<&Operator> {
        self.observables.get(name).ok_or_else(|| Error::Config(format!("unknown observable '{name}'")))
    }

    pub fn frame(&self) -> &EigenFrame {
        &self.frame
    }

    /// The same system with every lead passed through `f`.
    pub fn map_leads(&self, mut f: impl FnMut(&LeadSpec) -> LeadSpec) -> Result<Self> {
        let channels = self
            .channels
            .iter()
            .map(|c| CouplingChannel { q_plus: c.q_plus.clone(), q_minus: c.q_minus.clone(), lead: f(&c.lead) })
            .collect();
        Self::new(self.h_s.clone(), channels, self.observables.clone())
    }

    /// Distinct leads in channel order (by label).
    pub fn leads(&self) -> Vec<&LeadSpec> {
        let mut out: Vec<&LeadSpec> = Vec::new();
        for c in &self.channels {
            if !out.iter().any(|l| l.label == c.lead.label) {
                out.push(&c.lead);
            }
        }
        out
    }

    /// Largest |Bohr frequency|, energy scale of H_s.
    pub fn max_bohr(&self) -> f64 {
        self.frame.bohr.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
    }

    pub(crate) fn q_eigen(&self, channel: usize, sign: Sign) -> &DMatrix<C64> {
        &self.q_eigen[channel][sign.index()]
    }

    fn check_channel(&self, channel: usize) -> Result<()> {
        if channel >= self.channels.len() {
            return Err(Error::Config(format!("channel index {channel} out of range ({})", self.channels.len())));
        }
        Ok(())
    }
}

/// Eigenframe coefficients of `C̃_Q^σ(L_s, ω)` for every channel and sign:
/// `k1_ij = C̃^σ(ω − ω_ij)`, `k2_ij = conj C̃^{−σ}(ω_ij − ω)`.
#[derive(Clone, Debug)]
pub(crate) struct CTildeTable {
    pub omega: f64,
    pub k: Vec<[(DMatrix<C64>, DMatrix<C64>); 2]>,
}

impl CTildeTable {
    pub fn new(model: &SystemModel, omega: f64) -> Self {
        let bohr = &model.frame.bohr;
        let d = model.dim();
        let k = model
            .channels
            .iter()
            .map(|c| {
                let entry = |s: Sign| {
                    let k1 = DMatrix::from_fn(d, d, |i, j| c_tilde(&c.lead, omega - bohr[(i, j)], s));
                    let k2 = DMatrix::from_fn(d, d, |i, j| c_tilde(&c.lead, bohr[(i, j)] - omega, s.flip()).conj());
                    (k1, k2)
                };
                [entry(Sign::Plus), entry(Sign::Minus)]
            })
            .collect();
        Self { omega, k }
    }

    /// `C̃_Q^σ(L_s, ω) X` with everything in the eigenframe.
    pub fn apply_eigen(&self, model: &SystemModel, channel: usize, sign: Sign, x: &DMatrix<C64>) -> DMatrix<C64> {
        let q = model.q_eigen(channel, sign);
        let (k1, k2) = &self.k[channel][sign.index()];
        (q * x).component_mul(k1) - (x * q).component_mul(k2)
    }

    /// `Σ̃(ω) X` in the eigenframe.
    pub fn sigma_eigen(&self, model: &SystemModel, x: &DMatrix<C64>) -> DMatrix<C64> {
        let d = x.nrows();
        let mut out = DMatrix::zeros(d, d);
        for c in 0..model.channels.len() {
            for s in Sign::BOTH {
                let y = self.apply_eigen(model, c, s, x);
                let q = model.q_eigen(c, s.flip());
                out += q * &y - &y * q;
            }
        }
        out
    }
}

/// `C̃_Q^σ(L_s, ω) X` for one channel, in the computational basis.
pub fn apply_c_tilde_q(model: &SystemModel, channel: usize, sign: Sign, omega: f64, x: &Operator) -> Result<Operator> {
    model.check_channel(channel)?;
    if x.dim() != model.dim() {
        return Err(Error::Dimension(format!("operator d={} on model d={}", x.dim(), model.dim())));
    }
    let table = CTildeTable::new(model, omega);
    let xe = model.frame.to_eigen(x);
    Ok(model.frame.from_eigen(&table.apply_eigen(model, channel, sign, &xe)))
}

fn superop_from_eigen_map(model: &SystemModel, f: impl Fn(&DMatrix<C64>) -> DMatrix<C64>) -> SuperOperator {
    let frame = &model.frame;
    SuperOperator::from_map(model.dim(), |x| frame.from_eigen(&f(&frame.to_eigen(x))))
}

/// `Σ̃(ω)` as a dense superoperator.
pub fn sigma_tilde(model: &SystemModel, omega: f64) -> SuperOperator {
    let table = CTildeTable::new(model, omega);
    superop_from_eigen_map(model, |x| table.sigma_eigen(model, x))
}

/// `L_s = [H_s, ·]`.
pub fn liouvillian(model: &SystemModel) -> SuperOperator {
    commutator_map(&model.h_s)
}

/// `M = −i L_s − Σ̃(0)`.
pub fn markovian_generator(model: &SystemModel) -> SuperOperator {
    &liouvillian(model).scale(-I) - &sigma_tilde(model, 0.0)
}

/// Unit-trace kernel of [`markovian_generator`].
pub fn stationary_state(model: &SystemModel) -> Result<Operator> {
    let rho = null_state(&markovian_generator(model))?;
    let pops = rho.populations();
    if pops.iter().any(|&p| !(-1e-10..=1.0 + 1e-10).contains(&p)) {
        log::warn!("stationary populations outside [0, 1]: {pops:?}");
    }
    Ok(rho)
}

/// A factorized resolvent `[i(L_s − ω) + S]⁻¹` for a given self-energy `S`.
#[derive(Clone, Debug)]
pub struct Resolvent {
    omega: f64,
    matrix: SuperOperator,
    fact: Factorized,
}

impl Resolvent {
    fn build(model: &SystemModel, omega: f64, sigma: &SuperOperator) -> Result<Self> {
        let shift = &liouvillian(model) - &SuperOperator::identity(model.dim()).scale(C64::new(omega, 0.0));
        let matrix = &shift.scale(I) + sigma;
        let fact = Factorized::new(&matrix).map_err(|e| match e {
            Error::Singular { condition } => Error::Pole { omega, condition },
            other => other,
        })?;
        Ok(Self { omega, matrix, fact })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// The matrix being inverted.
    pub fn matrix(&self) -> &SuperOperator {
        &self.matrix
    }

    pub fn condition(&self) -> f64 {
        self.fact.condition()
    }

    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        let v = self.fact.solve(&crate::liouville::vectorize(x))?;
        Ok(crate::liouville::devectorize(&v))
    }

    pub fn apply_vec(&self, v: &LiouvilleVector) -> Result<LiouvilleVector> {
        self.fact.solve(v)
    }
}

/// `Π̃(ω) = [i(L_s − ω) + Σ̃(ω)]⁻¹`.
pub fn propagator_resolvent(model: &SystemModel, omega: f64) -> Result<Resolvent> {
    Resolvent::build(model, omega, &sigma_tilde(model, omega))
}

/// `Π̃_M(ω) = [i(L_s − ω) + Σ̃(0)]⁻¹`, the memoryless reference.
pub fn markovian_resolvent(model: &SystemModel, omega: f64) -> Result<Resolvent> {
    Resolvent::build(model, omega, &sigma_tilde(model, 0.0))
}

pub(crate) fn markovian_resolvent_with(model: &SystemModel, omega: f64, sigma0: &SuperOperator) -> Result<Resolvent> {
    Resolvent::build(model, omega, sigma0)
}
