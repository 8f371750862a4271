//! The measurement-modified factor M(τ) and what follows from it: the
//! cooling frequency domain, the analytic cooling criterion, the optimal
//! measurement interval and the Zeno/anti-Zeno classification.
//!
//! M(τ) = [e^{βω_a} J+(τ) − J−(τ)]/J(τ). The quasisteady population under
//! periodic measurements is ρ^B(1 + M), so M < 0 means the qubit ends up
//! colder than the bath.

pub mod domain;
mod optimize;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{golden_rule_rate, j_integrals, CumulativeJ, KernelDiagnostics};
use crate::quadrature::{integrate_scalar, Oscillation, QuadratureSpec};
use crate::spectrum::{BathParams, SpectralModel};
pub use domain::{
    averaged_filter, cooling_domain, cr_zero_curve, total_filter, w2_estimate, w2_estimate_max,
    CoolingDomain, DomainEdge, DomainMode, DomainSearch, Lobe, ROOT_TOLERANCE, SEARCH_WINDOW,
};
pub use optimize::{golden_section, optimize_tau, TauOptimum, TauSearch};

/// Exact M(τ) together with the integrals it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MFactor {
    pub tau: f64,
    pub value: f64,
    /// `e^{βω_a}J+ − J−`, integrated as one filtered integrand.
    pub numerator: f64,
    pub cumulative: CumulativeJ,
    pub diagnostics: KernelDiagnostics,
}

impl MFactor {
    /// Quasisteady population `ρ^B(1 + M)`.
    pub fn steady_population(&self, bath: &BathParams) -> f64 {
        bath.equilibrium_population() * (1.0 + self.value)
    }
}

/// M(τ) from the sinc² frequency integrals. The Boltzmann factor is applied
/// inside the integrand so the numerator never forms the difference of two
/// large numbers.
pub fn m_factor_exact(
    model: &SpectralModel,
    bath: &BathParams,
    tau: f64,
    spec: &QuadratureSpec,
) -> Result<MFactor> {
    let r = j_integrals(model, bath, tau, spec, true)?;
    let total = r.j.j_total();
    if !(total > 0.0) {
        return Err(Error::Domain(format!(
            "J(tau) vanishes at tau = {tau}; M is undefined for a decoupled bath"
        )));
    }
    Ok(MFactor {
        tau,
        value: r.numerator / total,
        numerator: r.numerator,
        cumulative: r.j,
        diagnostics: r.j.diagnostics,
    })
}

/// Pieces of the second-order approximation of M(τ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MApprox {
    pub tau: f64,
    pub value: f64,
    /// Near-resonant rotating term `−β[2G0′ − βG0](ω_a − sin(ω_aτ)/τ)`.
    pub resonant: f64,
    /// `(τ²/2)e^{βω_a} ∫_0^{2ω_a} sinc²((ω+ω_a)τ/2) G0 dω`.
    pub counter_rotating: f64,
    /// `e^{βω_a} ∫_{2ω_a}^∞ G0/ω² dω`.
    pub high_frequency: f64,
    pub denominator: f64,
    pub diagnostics: KernelDiagnostics,
}

struct ResonantData {
    g: f64,
    g1: f64,
    g2: f64,
    one_sided: bool,
}

fn resonant_data(model: &SpectralModel, bath: &BathParams) -> Result<ResonantData> {
    let g = model.value(bath.omega_a)?;
    let d = model.derivatives(bath.omega_a)?;
    Ok(ResonantData {
        g,
        g1: d.first,
        g2: d.second,
        one_sided: d.one_sided,
    })
}

/// Low-temperature, second-order approximation of M(τ): near-resonant
/// modes through a Taylor expansion of G0 at ω_a, modes above 2ω_a through
/// the cycle-averaged kernel.
pub fn m_factor_approx(
    model: &SpectralModel,
    bath: &BathParams,
    tau: f64,
    spec: &QuadratureSpec,
) -> Result<MApprox> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("tau must be > 0, got {tau}")));
    }
    let wa = bath.omega_a;
    let beta = bath.beta;
    let boltz = bath.boltzmann_exponent()?.exp();
    let r = resonant_data(model, bath)?;
    let resonant = -beta * (2.0 * r.g1 - beta * r.g) * (wa - (wa * tau).sin() / tau);

    let upper = 2.0 * wa;
    let edges: Vec<f64> = model
        .features()
        .into_iter()
        .filter(|&w| w > 0.0 && w < upper)
        .collect();
    let cr = integrate_scalar(
        |w| {
            let x = 0.5 * (w + wa) * tau;
            let s = crate::kernels::special::sinc(x);
            s * s * model.value_unchecked(w)
        },
        0.0,
        upper,
        &edges,
        Some(Oscillation::sinc_squared(-wa, tau)),
        spec,
    );
    let counter_rotating = 0.5 * tau * tau * boltz * cr.scalar();
    let tail = model.tail_integral(upper, spec)?;
    let high_frequency = boltz * tail.value;
    let denominator = r.g * (std::f64::consts::PI * tau - 2.0 / wa) + wa * r.g2 + 2.0 * tail.value;
    let diagnostics = KernelDiagnostics {
        max_error: cr.error[0].max(tail.error),
        truncation_bound: boltz * tail.truncation_bound,
        converged: cr.converged && tail.converged && !r.one_sided,
    };
    Ok(MApprox {
        tau,
        value: (resonant + counter_rotating + high_frequency) / denominator,
        resonant,
        counter_rotating,
        high_frequency,
        denominator,
        diagnostics,
    })
}

/// Large-τ form of the approximation without the oscillating terms and
/// without modes above 2ω_a.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MSmoothed {
    pub tau: f64,
    pub value: f64,
    /// `−βω_a(2G0′ − βG0)/D`.
    pub resonant: f64,
    /// `e^{βω_a} ∫_0^{2ω_a} G0/(ω+ω_a)² dω / D`.
    pub counter_rotating: f64,
    /// `D = G0(ω_a)(πτ − 2/ω_a) + ω_a G0″(ω_a)`.
    pub denominator: f64,
}

/// The smoothed M(τ). Fails with a domain error when the denominator is
/// not positive (τ too short for the form to apply).
pub fn m_factor_smoothed(model: &SpectralModel, bath: &BathParams, tau: f64) -> Result<MSmoothed> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("tau must be > 0, got {tau}")));
    }
    let wa = bath.omega_a;
    let beta = bath.beta;
    let boltz = bath.boltzmann_exponent()?.exp();
    let r = resonant_data(model, bath)?;
    let denominator = r.g * (std::f64::consts::PI * tau - 2.0 / wa) + wa * r.g2;
    if !(denominator > 0.0) {
        return Err(Error::Domain(format!(
            "smoothed M needs a positive denominator, got {denominator} at tau = {tau}"
        )));
    }
    let upper = 2.0 * wa;
    let edges: Vec<f64> = model
        .features()
        .into_iter()
        .filter(|&w| w > 0.0 && w < upper)
        .collect();
    let low = integrate_scalar(
        |w| model.value_unchecked(w) / ((w + wa) * (w + wa)),
        0.0,
        upper,
        &edges,
        None,
        &QuadratureSpec::default().with_rel_tol(1e-12),
    );
    let resonant = -beta * wa * (2.0 * r.g1 - beta * r.g) / denominator;
    let counter_rotating = boltz * low.scalar() / denominator;
    Ok(MSmoothed {
        tau,
        value: resonant + counter_rotating,
        resonant,
        counter_rotating,
        denominator,
    })
}

/// Outcome of the analytic cooling criterion `G0′(ω_a)/G0(ω_a) > β/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingCriterion {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// For power-law spectra, the largest β that still passes: 2s/ω_a.
    pub beta_max: Option<f64>,
    /// The derivative came from a one-sided limit at a cutoff.
    pub one_sided: bool,
}

pub fn cooling_criterion(model: &SpectralModel, bath: &BathParams) -> Result<CoolingCriterion> {
    let wa = bath.omega_a;
    let g = model.value(wa)?;
    if !(g > 0.0) {
        return Err(Error::Domain(format!(
            "cooling criterion undefined: G0 vanishes at omega_a = {wa}"
        )));
    }
    let d = model.derivatives(wa)?;
    let lhs = d.first / g;
    let rhs = 0.5 * bath.beta;
    let beta_max = match model {
        SpectralModel::SuperOhmic { s, .. } => Some(2.0 * s / wa),
        _ => None,
    };
    Ok(CoolingCriterion {
        lhs,
        rhs,
        pass: lhs > rhs,
        beta_max,
        one_sided: d.one_sided,
    })
}

/// Relative band around Γ0 inside which the effective rate counts as
/// neither Zeno nor anti-Zeno.
pub const ZENO_BAND: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZenoClass {
    /// Effective rate below the golden-rule rate.
    #[serde(rename = "QZE")]
    Zeno,
    /// Effective rate above the golden-rule rate.
    #[serde(rename = "QAZE")]
    AntiZeno,
    #[serde(rename = "boundary")]
    Boundary,
}

impl std::fmt::Display for ZenoClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ZenoClass::Zeno => "QZE",
            ZenoClass::AntiZeno => "QAZE",
            ZenoClass::Boundary => "boundary",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZenoReport {
    pub tau: f64,
    /// `J(τ)/τ`.
    pub effective_rate: f64,
    /// Golden-rule rate Γ0.
    pub golden_rule_rate: f64,
    pub ratio: f64,
    pub class: ZenoClass,
    pub diagnostics: KernelDiagnostics,
}

/// Compare the effective decay rate J(τ)/τ with Γ0.
pub fn classify_zeno(
    model: &SpectralModel,
    bath: &BathParams,
    tau: f64,
    spec: &QuadratureSpec,
) -> Result<ZenoReport> {
    let j = j_integrals(model, bath, tau, spec, false)?.j;
    let gamma0 = golden_rule_rate(model, bath)?;
    if !(gamma0 > 0.0) {
        return Err(Error::Domain(
            "Zeno classification needs a non-zero golden-rule rate".into(),
        ));
    }
    let rate = j.effective_rate();
    let ratio = rate / gamma0;
    let class = if ratio > 1.0 + ZENO_BAND {
        ZenoClass::AntiZeno
    } else if ratio < 1.0 - ZENO_BAND {
        ZenoClass::Zeno
    } else {
        ZenoClass::Boundary
    };
    Ok(ZenoReport {
        tau,
        effective_rate: rate,
        golden_rule_rate: gamma0,
        ratio,
        class,
        diagnostics: j.diagnostics,
    })
}

/// Everything the analysis produces for one model and bath.
///
/// JSON keys: `tau_grid`, `m_exact`, `m_approx`, `m_smoothed` (null where
/// the smoothed form does not apply), `tau_min`, `m_min`, `tau`, `omega1`,
/// `omega2` (null without a cooling domain), `criterion_lhs`,
/// `criterion_rhs`, `criterion_pass`, `beta_max`, `zeno_class`,
/// `zeno_ratio`, `converged`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoolingReport {
    pub tau_grid: Vec<f64>,
    pub m_exact: Vec<f64>,
    pub m_approx: Vec<f64>,
    pub m_smoothed: Vec<Option<f64>>,
    pub tau_min: f64,
    pub m_min: f64,
    /// Interval at which the domain and the Zeno class were evaluated.
    pub tau: f64,
    pub omega1: Option<f64>,
    pub omega2: Option<f64>,
    pub criterion_lhs: f64,
    pub criterion_rhs: f64,
    pub criterion_pass: bool,
    pub beta_max: Option<f64>,
    pub zeno_class: ZenoClass,
    pub zeno_ratio: f64,
    /// All quadratures converged and all domain roots were certified.
    pub converged: bool,
}

impl CoolingReport {
    /// Assemble a report: M on `tau_grid` (three forms), the refined
    /// minimum of the exact form over the grid span, and the domain and
    /// Zeno class at `tau`.
    pub fn build(
        model: &SpectralModel,
        bath: &BathParams,
        tau_grid: &[f64],
        tau: f64,
        search: &DomainSearch,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        use rayon::prelude::*;
        if tau_grid.len() < 2 {
            return Err(Error::InvalidParameter(
                "report needs at least two grid points".into(),
            ));
        }
        let rows: Vec<(MFactor, MApprox, Option<f64>)> = tau_grid
            .par_iter()
            .map(|&t| {
                Ok((
                    m_factor_exact(model, bath, t, spec)?,
                    m_factor_approx(model, bath, t, spec)?,
                    m_factor_smoothed(model, bath, t).ok().map(|s| s.value),
                ))
            })
            .collect::<Result<_>>()?;
        let mut converged = rows
            .iter()
            .all(|(e, a, _)| e.diagnostics.converged && a.diagnostics.converged);
        let opt = optimize::refine_on_grid(
            model,
            bath,
            tau_grid,
            &rows.iter().map(|r| r.0.value).collect::<Vec<_>>(),
            spec,
        )?;
        converged &= opt.converged;
        let domain = cooling_domain(bath, tau, search)?;
        if let Some(l) = domain.main {
            converged &= l.lower.certified && l.upper.certified;
        }
        let criterion = cooling_criterion(model, bath)?;
        let zeno = classify_zeno(model, bath, tau, spec)?;
        converged &= zeno.diagnostics.converged;
        Ok(Self {
            tau_grid: tau_grid.to_vec(),
            m_exact: rows.iter().map(|r| r.0.value).collect(),
            m_approx: rows.iter().map(|r| r.1.value).collect(),
            m_smoothed: rows.iter().map(|r| r.2).collect(),
            tau_min: opt.tau_min,
            m_min: opt.m_min,
            tau,
            omega1: domain.omega1(),
            omega2: domain.omega2(),
            criterion_lhs: criterion.lhs,
            criterion_rhs: criterion.rhs,
            criterion_pass: criterion.pass,
            beta_max: criterion.beta_max,
            zeno_class: zeno.class,
            zeno_ratio: zeno.ratio,
            converged,
        })
    }
}
