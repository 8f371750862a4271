//! Time-convolutionless (second order) coefficients of the qubit master
//! equation: rates Γ±(t), Lamb shifts Δ±(t), their time integrals J±(τ),
//! the spectral filter functions, and the golden-rule rate.
//!
//! Superscript `r` marks rotating-wave contributions (kernel centred at
//! ω = ω_a), `cr` counter-rotating ones (kernel centred at ω = −ω_a).
//! Every frequency integral runs over `[0, support_end]` and is evaluated
//! with the oscillation-aware quadrature in [`crate::quadrature`].

pub mod special;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_scalar, Integral, Oscillation, QuadratureSpec};
use crate::spectrum::{bose, thermal_weights, BathParams, SpectralModel};
use special::{ln_expm1, one_minus_cos_over, sinc, sinc_squared};

pub use crate::quadrature::ScalarIntegral;

/// Accuracy bookkeeping attached to every kernel result.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KernelDiagnostics {
    /// Largest quadrature error estimate over the components.
    pub max_error: f64,
    /// Bound on the contribution dropped by truncating an unbounded
    /// spectrum (0 for spectra with a sharp cutoff).
    pub truncation_bound: f64,
    pub converged: bool,
}

impl KernelDiagnostics {
    fn from_integrals<const N: usize>(parts: &[&Integral<N>], truncation_bound: f64) -> Self {
        let mut max_error: f64 = 0.0;
        let mut converged = true;
        for p in parts {
            for e in p.error {
                max_error = max_error.max(e);
            }
            converged &= p.converged;
        }
        Self {
            max_error,
            truncation_bound,
            converged,
        }
    }

    fn exact() -> Self {
        Self {
            max_error: 0.0,
            truncation_bound: 0.0,
            converged: true,
        }
    }
}

/// The eight time-dependent coefficients at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RateSet {
    pub t: f64,
    pub gamma_plus_r: f64,
    pub gamma_plus_cr: f64,
    pub gamma_minus_r: f64,
    pub gamma_minus_cr: f64,
    pub delta_plus_r: f64,
    pub delta_plus_cr: f64,
    pub delta_minus_r: f64,
    pub delta_minus_cr: f64,
    #[serde(skip)]
    pub diagnostics: KernelDiagnostics,
}

impl RateSet {
    pub const FIELD_NAMES: [&'static str; 8] = [
        "gamma_plus_r",
        "gamma_plus_cr",
        "gamma_minus_r",
        "gamma_minus_cr",
        "delta_plus_r",
        "delta_plus_cr",
        "delta_minus_r",
        "delta_minus_cr",
    ];

    pub fn zero(t: f64) -> Self {
        Self {
            t,
            diagnostics: KernelDiagnostics::exact(),
            ..Default::default()
        }
    }

    /// Total |g⟩→|e⟩ rate Γ+.
    pub fn gamma_plus(&self) -> f64 {
        self.gamma_plus_r + self.gamma_plus_cr
    }

    /// Total |e⟩→|g⟩ rate Γ−.
    pub fn gamma_minus(&self) -> f64 {
        self.gamma_minus_r + self.gamma_minus_cr
    }

    pub fn delta_plus(&self) -> f64 {
        self.delta_plus_r + self.delta_plus_cr
    }

    pub fn delta_minus(&self) -> f64 {
        self.delta_minus_r + self.delta_minus_cr
    }

    /// Coefficients in [`FIELD_NAMES`](Self::FIELD_NAMES) order.
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.gamma_plus_r,
            self.gamma_plus_cr,
            self.gamma_minus_r,
            self.gamma_minus_cr,
            self.delta_plus_r,
            self.delta_plus_cr,
            self.delta_minus_r,
            self.delta_minus_cr,
        ]
    }

    pub fn from_array(t: f64, v: [f64; 8]) -> Self {
        Self {
            t,
            gamma_plus_r: v[0],
            gamma_plus_cr: v[1],
            gamma_minus_r: v[2],
            gamma_minus_cr: v[3],
            delta_plus_r: v[4],
            delta_plus_cr: v[5],
            delta_minus_r: v[6],
            delta_minus_cr: v[7],
            diagnostics: KernelDiagnostics::exact(),
        }
    }
}

/// Time integrals `J(τ) = ∫_0^τ Γ(t') dt'` of the four rate components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativeJ {
    pub tau: f64,
    pub j_plus_r: f64,
    pub j_plus_cr: f64,
    pub j_minus_r: f64,
    pub j_minus_cr: f64,
    #[serde(skip)]
    pub diagnostics: KernelDiagnostics,
}

impl CumulativeJ {
    pub fn zero(tau: f64) -> Self {
        Self {
            tau,
            j_plus_r: 0.0,
            j_plus_cr: 0.0,
            j_minus_r: 0.0,
            j_minus_cr: 0.0,
            diagnostics: KernelDiagnostics::exact(),
        }
    }

    pub fn j_plus(&self) -> f64 {
        self.j_plus_r + self.j_plus_cr
    }

    pub fn j_minus(&self) -> f64 {
        self.j_minus_r + self.j_minus_cr
    }

    pub fn j_total(&self) -> f64 {
        self.j_plus() + self.j_minus()
    }

    /// Quasisteady excited population `J+(τ)/J(τ)` under periodic
    /// measurements.
    pub fn steady_population(&self) -> f64 {
        self.j_plus() / self.j_total()
    }

    /// Effective decay rate `J(τ)/τ`.
    pub fn effective_rate(&self) -> f64 {
        self.j_total() / self.tau
    }
}

/// Oscillatory frequency integral of `integrand` over `[a, b]`, with panel
/// edges at the zeros of a kernel oscillating at `kernel` (if any).
pub fn oscillatory_integral<F: Fn(f64) -> f64>(
    integrand: F,
    a: f64,
    b: f64,
    kernel: Option<Oscillation>,
    spec: &QuadratureSpec,
) -> ScalarIntegral {
    integrate_scalar(integrand, a, b, &[], kernel, spec)
}

/// Panel edges shared by every frequency integral for `model`.
fn base_breakpoints(model: &SpectralModel, bath: &BathParams) -> Vec<f64> {
    let mut edges = model.features();
    edges.push(bath.omega_a);
    edges.push(2.0 * bath.omega_a);
    edges
}

/// Truncation bound for integrands of size `≤ weight·G0(ω)·scale/(ω ∓ ω_a)^power`.
fn truncation_bound(model: &SpectralModel, bath: &BathParams, power: i32, scale: f64) -> f64 {
    let Some((w, c)) = model.tail_envelope() else {
        return 0.0;
    };
    let weight = 1.0 + bose(bath.beta * w);
    let shrink = (1.0 - bath.omega_a / w).powi(power);
    // ∫_W^∞ (c/ω) · scale/(shrink·ω^power) dω
    weight * c * scale / (shrink * power as f64 * w.powi(power))
}

/// All eight TCL2 coefficients at time `t`.
pub fn transition_rates(
    model: &SpectralModel,
    bath: &BathParams,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<RateSet> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(RateSet::zero(0.0));
    }
    let beta = bath.beta;
    let wa = bath.omega_a;
    let end = model.support_end();
    let edges = base_breakpoints(model, bath);

    // [n G0 s, (n+1) G0 s, n G0 c, (n+1) G0 c] with s = 2t sinc(xt),
    // c = (1 − cos xt)/x, for x = ω ∓ ω_a
    let family = |shift: f64| {
        move |w: f64| {
            let (p, q) = thermal_weights(model, beta, w);
            let x = w + shift;
            let s = 2.0 * t * sinc(x * t);
            let c = t * one_minus_cos_over(x * t);
            [p * s, q * s, p * c, q * c]
        }
    };
    let rot = integrate(
        family(-wa),
        0.0,
        end,
        &edges,
        Some(Oscillation::sinc(wa, t)),
        spec,
    );
    let counter = integrate(
        family(wa),
        0.0,
        end,
        &edges,
        Some(Oscillation::sinc(-wa, t)),
        spec,
    );
    let bound = truncation_bound(model, bath, 1, 2.0);
    Ok(RateSet {
        t,
        gamma_plus_r: rot.value[0],
        gamma_minus_r: rot.value[1],
        delta_plus_r: rot.value[2],
        delta_minus_r: -rot.value[3],
        gamma_plus_cr: counter.value[1],
        gamma_minus_cr: counter.value[0],
        delta_plus_cr: -counter.value[3],
        delta_minus_cr: counter.value[2],
        diagnostics: KernelDiagnostics::from_integrals(&[&rot, &counter], bound),
    })
}

/// The four J integrals, plus the measurement-factor numerator
/// `e^{βω_a} J+ − J−` assembled inside the integrand.
#[derive(Debug, Clone, Copy)]
pub(crate) struct JWithNumerator {
    pub j: CumulativeJ,
    pub numerator: f64,
}

pub(crate) fn j_integrals(
    model: &SpectralModel,
    bath: &BathParams,
    tau: f64,
    spec: &QuadratureSpec,
    with_numerator: bool,
) -> Result<JWithNumerator> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("tau must be > 0, got {tau}")));
    }
    let boltz = if with_numerator {
        bath.boltzmann_exponent()?.exp()
    } else {
        0.0
    };
    let beta = bath.beta;
    let wa = bath.omega_a;
    let end = model.support_end();
    let edges = base_breakpoints(model, bath);
    let tau2 = tau * tau;
    let rot = integrate(
        |w: f64| {
            let (p, q) = thermal_weights(model, beta, w);
            let k = tau2 * sinc_squared(0.5 * (w - wa) * tau);
            [p * k, q * k, (boltz * p - q) * k]
        },
        0.0,
        end,
        &edges,
        Some(Oscillation::sinc_squared(wa, tau)),
        spec,
    );
    let counter = integrate(
        |w: f64| {
            let (p, q) = thermal_weights(model, beta, w);
            let k = tau2 * sinc_squared(0.5 * (w + wa) * tau);
            [q * k, p * k, (boltz * q - p) * k]
        },
        0.0,
        end,
        &edges,
        Some(Oscillation::sinc_squared(-wa, tau)),
        spec,
    );
    let bound =
        truncation_bound(model, bath, 2, 4.0) * if with_numerator { boltz.max(1.0) } else { 1.0 };
    let j = CumulativeJ {
        tau,
        j_plus_r: rot.value[0],
        j_minus_r: rot.value[1],
        j_plus_cr: counter.value[0],
        j_minus_cr: counter.value[1],
        diagnostics: KernelDiagnostics::from_integrals(&[&rot, &counter], bound),
    };
    Ok(JWithNumerator {
        j,
        numerator: rot.value[2] + counter.value[2],
    })
}

/// `J±^{r,cr}(τ)` from the closed sinc² frequency integrals.
pub fn cumulative_j(
    model: &SpectralModel,
    bath: &BathParams,
    tau: f64,
    spec: &QuadratureSpec,
) -> Result<CumulativeJ> {
    Ok(j_integrals(model, bath, tau, spec, false)?.j)
}

/// Rotating and counter-rotating filter functions `(F^r, F^cr)` at
/// qubit inverse temperature `beta_s`:
///
/// ```text
/// F^r  = t² (e^{β_S ω_a} − e^{βω})/(e^{βω} − 1) · sinc²((ω − ω_a)t/2)
/// F^cr = t² (e^{β_S ω_a + βω} − 1)/(e^{βω} − 1) · sinc²((ω + ω_a)t/2)
/// ```
///
/// so that `∫(F^r + F^cr) G0 dω = e^{β_S ω_a} J+ − J−`. Boltzmann ratios
/// are formed in log space.
pub fn filter_function(beta_s: f64, bath: &BathParams, t: f64, omega: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("filter needs t > 0, got {t}")));
    }
    if !(beta_s >= 0.0) {
        return Err(Error::Domain(format!(
            "filter needs a non-inverted qubit (beta_s >= 0), got {beta_s}"
        )));
    }
    if omega == 0.0 {
        return Err(Error::ThermalPole);
    }
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "filter needs omega > 0, got {omega}"
        )));
    }
    let b = beta_s * bath.omega_a;
    if b > crate::spectrum::MAX_BOLTZMANN_EXPONENT {
        return Err(Error::Overflow(b));
    }
    let x = bath.beta * omega;
    let ln_den = ln_expm1(x);
    // (e^b − e^x)/(e^x − 1) = expm1(b)/expm1(x) − 1
    let ratio_r = if b == 0.0 {
        0.0
    } else {
        (ln_expm1(b) - ln_den).exp()
    };
    let weight_r = ratio_r - 1.0;
    let weight_cr = (ln_expm1(b + x) - ln_den).exp();
    let t2 = t * t;
    let wa = bath.omega_a;
    Ok((
        t2 * weight_r * sinc_squared(0.5 * (omega - wa) * t),
        t2 * weight_cr * sinc_squared(0.5 * (omega + wa) * t),
    ))
}

/// Fermi golden-rule rate `Γ0 = 2π[2n_T(ω_a) + 1]G0(ω_a)`.
pub fn golden_rule_rate(model: &SpectralModel, bath: &BathParams) -> Result<f64> {
    let g = model.value(bath.omega_a)?;
    let thermal = 1.0 + 2.0 * bose(bath.beta * bath.omega_a);
    Ok(2.0 * std::f64::consts::PI * thermal * g)
}
