//! Bath spectral densities G0(ω), thermal occupation and the weighted
//! spectra built from them.
//!
//! All frequencies share one unit; by convention the qubit transition
//! frequency ω_a (carried by [`BathParams`]) is 1.

mod tabulated;

use serde::{Deserialize, Serialize};

pub use tabulated::TabulatedSpectrum;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_scalar, QuadratureSpec};

/// The Lorentzian has unbounded support; integrals are truncated this many
/// widths above the peak.
pub const LORENTZIAN_TRUNCATION_WIDTHS: f64 = 50.0;

/// Largest Boltzmann exponent βω evaluated as a plain exponential.
pub const MAX_BOLTZMANN_EXPONENT: f64 = 700.0;

/// Below this value of βω, n_T·G0 uses its series expansion.
const THERMAL_SERIES_THRESHOLD: f64 = 1e-3;

/// Centered-difference step for tabulated derivatives (in units of ω_a).
const TABULATED_DIFF_STEP: f64 = 1e-4;

/// Bath spectral density model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralModel {
    /// `α ω Λ² / (Λ² + (ω − ω0)²)`
    ModifiedLorentzian {
        alpha: f64,
        lambda: f64,
        omega0: f64,
    },
    /// `α ω_c^{1−s} ω^s Θ(1 − ω/ω_c)`
    SuperOhmic {
        alpha: f64,
        s: f64,
        omega_c: f64,
    },
    Tabulated(TabulatedSpectrum),
}

/// Inverse temperature and qubit frequency (k_B = ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    pub beta: f64,
    pub omega_a: f64,
}

impl BathParams {
    pub fn new(beta: f64, omega_a: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "inverse temperature must be positive and finite, got {beta}"
            )));
        }
        if !(omega_a > 0.0 && omega_a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "transition frequency must be positive, got {omega_a}"
            )));
        }
        Ok(Self { beta, omega_a })
    }

    /// Bath at inverse temperature `beta` with ω_a = 1.
    pub fn with_beta(beta: f64) -> Result<Self> {
        Self::new(beta, 1.0)
    }

    /// βω_a, checked against the overflow cap.
    pub fn boltzmann_exponent(&self) -> Result<f64> {
        let x = self.beta * self.omega_a;
        if x > MAX_BOLTZMANN_EXPONENT {
            Err(Error::Overflow(x))
        } else {
            Ok(x)
        }
    }

    /// Thermal excited-state population `1/(e^{βω_a} + 1)`.
    pub fn equilibrium_population(&self) -> f64 {
        fermi(self.beta * self.omega_a)
    }
}

pub(crate) fn fermi(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// First and second derivative of G0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdfDerivatives {
    pub first: f64,
    pub second: f64,
    /// Set when the point sits on a support edge and one-sided formulas
    /// were used.
    pub one_sided: bool,
}

/// `∫ G0(ω)/ω² dω` above a lower limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailIntegral {
    pub value: f64,
    /// Quadrature error estimate (0 for closed forms).
    pub error: f64,
    /// Upper bound on the part of the integral beyond the truncation
    /// frequency (non-zero only for unbounded support).
    pub truncation_bound: f64,
    pub converged: bool,
}

impl SpectralModel {
    pub fn modified_lorentzian(alpha: f64, lambda: f64, omega0: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("lambda", lambda)?;
        if !(omega0.is_finite() && omega0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Lorentzian peak must be finite and non-negative, got {omega0}"
            )));
        }
        Ok(Self::ModifiedLorentzian {
            alpha,
            lambda,
            omega0,
        })
    }

    pub fn super_ohmic(alpha: f64, s: f64, omega_c: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("omega_c", omega_c)?;
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "super-Ohmic exponent must be >= 0, got {s}"
            )));
        }
        Ok(Self::SuperOhmic { alpha, s, omega_c })
    }

    pub fn tabulated(table: TabulatedSpectrum) -> Self {
        Self::Tabulated(table)
    }

    /// The same model with G0 multiplied by `factor`. A zero factor gives
    /// the decoupled model.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::ModifiedLorentzian {
                alpha,
                lambda,
                omega0,
            } => Self::ModifiedLorentzian {
                alpha: alpha * factor,
                lambda: *lambda,
                omega0: *omega0,
            },
            Self::SuperOhmic { alpha, s, omega_c } => Self::SuperOhmic {
                alpha: alpha * factor,
                s: *s,
                omega_c: *omega_c,
            },
            Self::Tabulated(t) => Self::Tabulated(t.scaled(factor)),
        }
    }

    /// Upper end of the integration domain: the sharp cutoff, or the
    /// truncation frequency ω0 + 50Λ for the Lorentzian.
    pub fn support_end(&self) -> f64 {
        match self {
            Self::ModifiedLorentzian { lambda, omega0, .. } => {
                omega0 + LORENTZIAN_TRUNCATION_WIDTHS * lambda
            }
            Self::SuperOhmic { omega_c, .. } => *omega_c,
            Self::Tabulated(t) => t.cutoff(),
        }
    }

    /// True if G0 is non-zero beyond [`support_end`](Self::support_end).
    pub fn is_truncated(&self) -> bool {
        matches!(self, Self::ModifiedLorentzian { .. })
    }

    /// Frequencies where G0 has a kink, jump, or peak worth a panel edge.
    pub fn features(&self) -> Vec<f64> {
        match self {
            Self::ModifiedLorentzian { lambda, omega0, .. } => {
                vec![*omega0 - lambda, *omega0, *omega0 + lambda]
            }
            Self::SuperOhmic { omega_c, .. } => vec![*omega_c],
            Self::Tabulated(t) => vec![t.lower_edge(), t.cutoff()],
        }
    }

    /// For truncated models: `(W, c)` such that `G0(ω) ≤ c/ω` for ω ≥ W.
    pub fn tail_envelope(&self) -> Option<(f64, f64)> {
        match self {
            Self::ModifiedLorentzian {
                alpha,
                lambda,
                omega0,
            } => {
                let w = self.support_end();
                let shrink = 1.0 - omega0 / w;
                Some((w, alpha * lambda * lambda / (shrink * shrink)))
            }
            _ => None,
        }
    }

    /// G0(ω).
    pub fn value(&self, omega: f64) -> Result<f64> {
        if omega < 0.0 || omega.is_nan() {
            return Err(Error::Domain(format!(
                "spectral density needs omega >= 0, got {omega}"
            )));
        }
        Ok(self.value_unchecked(omega))
    }

    pub(crate) fn value_unchecked(&self, omega: f64) -> f64 {
        match self {
            Self::ModifiedLorentzian {
                alpha,
                lambda,
                omega0,
            } => {
                let d = omega - omega0;
                let l2 = lambda * lambda;
                alpha * omega * l2 / (l2 + d * d)
            }
            Self::SuperOhmic { alpha, s, omega_c } => {
                if omega > *omega_c {
                    0.0
                } else if omega == 0.0 {
                    if *s == 0.0 {
                        alpha * omega_c
                    } else {
                        0.0
                    }
                } else {
                    alpha * omega_c * (omega / omega_c).powf(*s)
                }
            }
            Self::Tabulated(t) => t.value(omega),
        }
    }

    /// `lim_{ω→0} G0(ω)/ω`, used for the thermal product at ω = 0.
    fn slope_at_zero(&self) -> f64 {
        match self {
            Self::ModifiedLorentzian {
                alpha,
                lambda,
                omega0,
            } => {
                let l2 = lambda * lambda;
                alpha * l2 / (l2 + omega0 * omega0)
            }
            Self::SuperOhmic { alpha, s, .. } => {
                if *s > 1.0 {
                    0.0
                } else if *s == 1.0 {
                    *alpha
                } else {
                    f64::INFINITY
                }
            }
            Self::Tabulated(t) => {
                if t.lower_edge() > 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Analytic G0′ and G0″ (finite differences for tabulated spectra).
    pub fn derivatives(&self, omega: f64) -> Result<SdfDerivatives> {
        if !(omega > 0.0) {
            return Err(Error::Domain(format!(
                "derivatives need omega > 0, got {omega}"
            )));
        }
        match self {
            Self::ModifiedLorentzian {
                alpha,
                lambda,
                omega0,
            } => {
                let d = omega - omega0;
                let l2 = lambda * lambda;
                let q = l2 + d * d;
                let lor = l2 / q;
                let lor1 = -2.0 * d * l2 / (q * q);
                let lor2 = l2 * (6.0 * d * d - 2.0 * l2) / (q * q * q);
                Ok(SdfDerivatives {
                    first: alpha * (lor + omega * lor1),
                    second: alpha * (2.0 * lor1 + omega * lor2),
                    one_sided: false,
                })
            }
            Self::SuperOhmic { s, omega_c, .. } => {
                if omega > *omega_c {
                    return Ok(SdfDerivatives {
                        first: 0.0,
                        second: 0.0,
                        one_sided: false,
                    });
                }
                // at omega == omega_c the left-hand limits are reported
                let g = self.value_unchecked(omega);
                Ok(SdfDerivatives {
                    first: s * g / omega,
                    second: s * (s - 1.0) * g / (omega * omega),
                    one_sided: omega == *omega_c,
                })
            }
            Self::Tabulated(t) => Ok(finite_difference(
                |w| t.value(w),
                omega,
                TABULATED_DIFF_STEP,
                t.lower_edge(),
                t.cutoff(),
            )),
        }
    }

    /// `G0′(ω)/G0(ω)`.
    pub fn log_derivative(&self, omega: f64) -> Result<f64> {
        let g = self.value(omega)?;
        if g <= 0.0 {
            return Err(Error::Domain(format!(
                "log-derivative undefined where G0 vanishes (omega = {omega})"
            )));
        }
        Ok(self.derivatives(omega)?.first / g)
    }

    /// `∫_{ω_lo}^{cutoff} G0(ω)/ω² dω`.
    ///
    /// Closed form for the super-Ohmic model. For the Lorentzian the
    /// integral is truncated at ω0 + 50Λ and the dropped remainder is bounded
    /// through `G0 ≤ c/ω`.
    pub fn tail_integral(&self, omega_lo: f64, spec: &QuadratureSpec) -> Result<TailIntegral> {
        if !(omega_lo > 0.0) {
            return Err(Error::Domain(format!(
                "tail integral needs omega_lo > 0, got {omega_lo}"
            )));
        }
        let end = self.support_end();
        if omega_lo >= end {
            return Ok(TailIntegral {
                value: 0.0,
                error: 0.0,
                truncation_bound: self.truncation_remainder(omega_lo),
                converged: true,
            });
        }
        if let Self::SuperOhmic { alpha, s, omega_c } = self {
            let pre = alpha * omega_c.powf(1.0 - s);
            let value = if (*s - 1.0).abs() < 1e-12 {
                pre * (omega_c / omega_lo).ln()
            } else {
                pre * (omega_c.powf(s - 1.0) - omega_lo.powf(s - 1.0)) / (s - 1.0)
            };
            return Ok(TailIntegral {
                value,
                error: 0.0,
                truncation_bound: 0.0,
                converged: true,
            });
        }
        let mut edges = self.features();
        if let Self::Tabulated(t) = self {
            edges.extend_from_slice(t.grid());
        }
        let r = integrate_scalar(
            |w| self.value_unchecked(w) / (w * w),
            omega_lo,
            end,
            &edges,
            None,
            spec,
        );
        Ok(TailIntegral {
            value: r.scalar(),
            error: r.error[0],
            truncation_bound: self.truncation_remainder(end),
            converged: r.converged,
        })
    }

    fn truncation_remainder(&self, from: f64) -> f64 {
        match self.tail_envelope() {
            Some((w, c)) => {
                let lo = from.max(w);
                c / (2.0 * lo * lo)
            }
            None => 0.0,
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn finite_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64, lo: f64, hi: f64) -> SdfDerivatives {
    let f0 = f(x);
    if x - h >= lo && x + h <= hi {
        let (fm, fp) = (f(x - h), f(x + h));
        SdfDerivatives {
            first: (fp - fm) / (2.0 * h),
            second: (fp - 2.0 * f0 + fm) / (h * h),
            one_sided: false,
        }
    } else if x + 2.0 * h <= hi {
        let (f1, f2) = (f(x + h), f(x + 2.0 * h));
        SdfDerivatives {
            first: (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h),
            second: (f0 - 2.0 * f1 + f2) / (h * h),
            one_sided: true,
        }
    } else {
        let (f1, f2) = (f(x - h), f(x - 2.0 * h));
        SdfDerivatives {
            first: (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * h),
            second: (f0 - 2.0 * f1 + f2) / (h * h),
            one_sided: true,
        }
    }
}

/// Bose–Einstein occupation `n_T(ω) = 1/(e^{βω} − 1)`.
///
/// Returns [`Error::ThermalPole`] at ω = 0; does not overflow for any βω.
pub fn thermal_occupation(beta: f64, omega: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature must be positive, got {beta}"
        )));
    }
    if omega == 0.0 {
        return Err(Error::ThermalPole);
    }
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "thermal occupation needs omega > 0, got {omega}"
        )));
    }
    Ok(bose(beta * omega))
}

/// `1/(e^x − 1)` for x > 0.
pub(crate) fn bose(x: f64) -> f64 {
    if x < 1.0 {
        1.0 / x.exp_m1()
    } else {
        let e = (-x).exp();
        e / -(-x).exp_m1()
    }
}

/// `(n_T(ω)·G0(ω), [n_T(ω)+1]·G0(ω))`, assembled jointly so the ω → 0
/// limit stays finite.
pub fn thermal_weights(model: &SpectralModel, beta: f64, omega: f64) -> (f64, f64) {
    let g = model.value_unchecked(omega);
    let x = beta * omega;
    if omega == 0.0 {
        let n_g = model.slope_at_zero() / beta;
        return (n_g, n_g + g);
    }
    let n_g = if x < THERMAL_SERIES_THRESHOLD {
        g / x * (1.0 - 0.5 * x + x * x / 12.0)
    } else {
        g * bose(x)
    };
    (n_g, n_g + g)
}

/// `[2 n_T(ω) + 1]·G0(ω)`, the finite-temperature spectrum.
pub fn thermal_sdf(model: &SpectralModel, beta: f64, omega: f64) -> Result<f64> {
    if omega < 0.0 || omega.is_nan() {
        return Err(Error::Domain(format!(
            "thermal spectrum needs omega >= 0, got {omega}"
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature must be positive, got {beta}"
        )));
    }
    let (n_g, np1_g) = thermal_weights(model, beta, omega);
    Ok(n_g + np1_g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lorentz() -> SpectralModel {
        SpectralModel::modified_lorentzian(0.01, 0.25, 1.5).unwrap()
    }

    #[test]
    fn sdf_values() {
        assert_relative_eq!(lorentz().value(1.0).unwrap(), 0.002, max_relative = 1e-14);
        let so = SpectralModel::super_ohmic(0.01, 3.0, 2.0).unwrap();
        assert_eq!(so.value(3.0).unwrap(), 0.0);
        assert_relative_eq!(so.value(1.0).unwrap(), 0.0025, max_relative = 1e-14);
        assert_eq!(lorentz().value(0.0).unwrap(), 0.0);
        assert_eq!(so.value(0.0).unwrap(), 0.0);
        assert!(matches!(lorentz().value(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(SpectralModel::modified_lorentzian(0.0, 0.25, 1.5).is_err());
        assert!(SpectralModel::modified_lorentzian(0.01, -0.25, 1.5).is_err());
        assert!(SpectralModel::super_ohmic(0.01, -1.0, 2.0).is_err());
        assert!(SpectralModel::super_ohmic(0.01, 1.0, 0.0).is_err());
        assert!(BathParams::new(0.0, 1.0).is_err());
        assert!(BathParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn lorentzian_log_derivative() {
        assert_relative_eq!(
            lorentz().log_derivative(1.0).unwrap(),
            4.2,
            max_relative = 1e-12
        );
    }

    #[test]
    fn super_ohmic_log_derivative_is_s_over_omega() {
        let so = SpectralModel::super_ohmic(0.3, 2.5, 4.0).unwrap();
        for w in [0.3, 1.0, 2.7] {
            assert_relative_eq!(so.log_derivative(w).unwrap(), 2.5 / w, max_relative = 1e-12);
        }
        let d = so.derivatives(4.0).unwrap();
        assert!(d.one_sided);
    }

    #[test]
    fn thermal_occupation_values() {
        assert_relative_eq!(
            thermal_occupation(2.0, 1.0).unwrap(),
            0.156_517_642_9,
            max_relative = 1e-9
        );
        let n = thermal_occupation(50.0, 1.0).unwrap();
        assert_relative_eq!(n, (-50.0f64).exp(), max_relative = 1e-12);
        assert!(thermal_occupation(1.0, 800.0).unwrap() >= 0.0);
        assert!(matches!(
            thermal_occupation(2.0, 0.0),
            Err(Error::ThermalPole)
        ));
        assert_relative_eq!(
            2.0 * thermal_occupation(2.0, 1.0).unwrap() + 1.0,
            1.313_035_285_5,
            max_relative = 1e-9
        );
    }

    #[test]
    fn thermal_sdf_values_and_limits() {
        let m = lorentz();
        assert_relative_eq!(
            thermal_sdf(&m, 2.0, 1.0).unwrap(),
            1.313_035_285_5 * 0.002,
            max_relative = 1e-9
        );
        // ω → 0: 2α/β · Λ²/(Λ²+ω0²)
        let lim = 2.0 * 0.01 / 2.0 * 0.0625 / (0.0625 + 2.25);
        assert_relative_eq!(
            thermal_sdf(&m, 2.0, 1e-9).unwrap(),
            lim,
            max_relative = 1e-6
        );
        assert_relative_eq!(
            thermal_sdf(&m, 2.0, 0.0).unwrap(),
            lim,
            max_relative = 1e-12
        );
        // series branch agrees with the direct product just above the switch
        let (a, _) = thermal_weights(&m, 2.0, 0.4999e-3);
        let (b, _) = thermal_weights(&m, 2.0, 0.5001e-3);
        assert_relative_eq!(a, b, max_relative = 1e-3);
        let direct = m.value(0.4999e-3).unwrap() * bose(2.0 * 0.4999e-3);
        assert_relative_eq!(a, direct, max_relative = 1e-9);
    }

    #[test]
    fn super_ohmic_tail_closed_form() {
        let spec = QuadratureSpec::default();
        let so = SpectralModel::super_ohmic(0.01, 3.0, 2.0).unwrap();
        assert_eq!(so.tail_integral(2.0, &spec).unwrap().value, 0.0);
        let so = SpectralModel::super_ohmic(0.01, 3.0, 3.0).unwrap();
        assert_relative_eq!(
            so.tail_integral(2.0, &spec).unwrap().value,
            0.01 * 5.0 / 18.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn lorentzian_tail_reports_truncation() {
        let t = lorentz()
            .tail_integral(2.0, &QuadratureSpec::default())
            .unwrap();
        assert!(t.converged);
        assert!(t.truncation_bound > 0.0 && t.truncation_bound < 1e-5);
    }

    #[test]
    fn scaled_model() {
        let m = lorentz().scaled(100.0);
        assert_relative_eq!(
            m.value(1.3).unwrap(),
            100.0 * lorentz().value(1.3).unwrap(),
            max_relative = 1e-14
        );
    }
}
