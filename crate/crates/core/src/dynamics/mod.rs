//! Qubit dynamics under the time-local master equation: the generalized
//! Bloch equations with time-dependent coefficients, nonselective σ_z
//! measurements, and the closed-form population estimates used to check
//! the integrated trajectories.

pub mod ode;
pub mod table;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{golden_rule_rate, transition_rates, CumulativeJ, KernelDiagnostics, RateSet};
use crate::quadrature::QuadratureSpec;
use crate::spectrum::{BathParams, SpectralModel};
pub use ode::{Integrator, StepStats};
pub use table::{RateGrid, RateTable};

/// Slack allowed in `|ρ_eg|² ≤ ρ_ee(1 − ρ_ee)` before a sample is flagged.
pub const POSITIVITY_SLACK: f64 = 1e-9;

/// Reduced qubit state. ρ_gg = 1 − ρ_ee and ρ_ge = ρ_eg* are implied.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QubitState {
    pub rho_ee: f64,
    pub rho_eg_re: f64,
    pub rho_eg_im: f64,
}

impl QubitState {
    pub fn new(rho_ee: f64, rho_eg_re: f64, rho_eg_im: f64) -> Self {
        Self {
            rho_ee,
            rho_eg_re,
            rho_eg_im,
        }
    }

    /// Diagonal state with excited population `rho_ee`.
    pub fn diagonal(rho_ee: f64) -> Self {
        Self::new(rho_ee, 0.0, 0.0)
    }

    pub fn rho_gg(&self) -> f64 {
        1.0 - self.rho_ee
    }

    /// `|ρ_eg|² − ρ_ee ρ_gg`; positive values mean the state is not a
    /// valid density matrix.
    pub fn positivity_excess(&self) -> f64 {
        self.rho_eg_re * self.rho_eg_re + self.rho_eg_im * self.rho_eg_im
            - self.rho_ee * self.rho_gg()
    }

    fn to_array(self) -> [f64; 3] {
        [self.rho_ee, self.rho_eg_re, self.rho_eg_im]
    }

    fn from_array(v: &[f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// Time derivative of a [`QubitState`]. `d_rho_gg` is stored explicitly so
/// trace conservation can be checked at the level of the equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochDerivative {
    pub d_rho_ee: f64,
    pub d_rho_gg: f64,
    pub d_rho_eg_re: f64,
    pub d_rho_eg_im: f64,
}

/// Right-hand side of the generalized Bloch equations:
///
/// ```text
/// dρ_ee/dt = −Γ−ρ_ee + Γ+ρ_gg
/// dρ_eg/dt = −[Γ̄ + i(ω_a + Δ− − Δ+)]ρ_eg + [Γ̄ − i(Δ− − Δ+)]ρ_ge,   Γ̄ = (Γ− + Γ+)/2
/// ```
pub fn bloch_rhs(state: &QubitState, rates: &RateSet, bath: &BathParams) -> BlochDerivative {
    let gp = rates.gamma_plus();
    let gm = rates.gamma_minus();
    let gbar = 0.5 * (gp + gm);
    let shift = rates.delta_minus() - rates.delta_plus();
    let d_rho_ee = -gm * state.rho_ee + gp * state.rho_gg();
    let (x, y) = (state.rho_eg_re, state.rho_eg_im);
    BlochDerivative {
        d_rho_ee,
        d_rho_gg: -d_rho_ee,
        d_rho_eg_re: bath.omega_a * y,
        d_rho_eg_im: -(bath.omega_a + 2.0 * shift) * x - 2.0 * gbar * y,
    }
}

/// Nonselective σ_z measurement `ρ ↦ (ρ + σ_z ρ σ_z)/2`: populations are
/// kept and the coherence is erased.
pub fn apply_measurement(state: &QubitState) -> QubitState {
    QubitState::diagonal(state.rho_ee)
}

/// How the ODE right-hand side obtains the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSource {
    /// Interpolate a precomputed [`RateTable`].
    #[default]
    Table,
    /// Evaluate the quadratures at every right-hand-side call (slow; for
    /// debugging the table).
    Direct,
}

/// Time origin of the coefficients after a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientClock {
    /// Coefficients restart from t = 0 after every measurement.
    #[default]
    Reset,
    /// Coefficients keep running on the global clock (experimental).
    Continuous,
}

/// Measurement schedule and integration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    /// Interval between measurements; also the horizon when `n_meas = 0`.
    pub tau: f64,
    pub n_meas: usize,
    pub integrator: Integrator,
    pub grid: RateGrid,
    pub rate_source: RateSource,
    pub clock: CoefficientClock,
    /// Spacing of the recorded samples inside each segment.
    pub sample_interval: f64,
    /// Attach the interpolated coefficients to every sample.
    pub record_rates: bool,
    pub quadrature: QuadratureSpec,
}

impl Protocol {
    pub fn new(tau: f64, n_meas: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "measurement interval must be positive, got {tau}"
            )));
        }
        Ok(Self {
            tau,
            n_meas,
            integrator: Integrator::default(),
            grid: RateGrid::default(),
            rate_source: RateSource::Table,
            clock: CoefficientClock::Reset,
            sample_interval: 0.05,
            record_rates: false,
            quadrature: QuadratureSpec::default(),
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "measurement interval must be positive, got {}",
                self.tau
            )));
        }
        if !(self.sample_interval > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample interval must be positive, got {}",
                self.sample_interval
            )));
        }
        match self.integrator {
            Integrator::Dopri5 { rel_tol, abs_tol } if rel_tol > 0.0 && abs_tol > 0.0 => Ok(()),
            Integrator::Rk4 { step } if step > 0.0 => Ok(()),
            other => Err(Error::InvalidParameter(format!(
                "integrator tolerances must be positive, got {other:?}"
            ))),
        }
    }
}

/// One recorded point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: QubitState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rates: Option<RateSet>,
    /// The state was just projected (recorded post-measurement).
    pub is_measurement: bool,
}

/// Per-trajectory accuracy and validity record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDiagnostics {
    /// Largest `|ρ_eg|² − ρ_ee ρ_gg` seen over the samples.
    pub worst_positivity_excess: f64,
    pub positivity_violated: bool,
    pub steps: StepStats,
    pub kernels: KernelDiagnostics,
}

impl TrajectoryDiagnostics {
    /// True when anything about the run deserves a warning.
    pub fn flagged(&self) -> bool {
        self.positivity_violated || self.steps.failed || !self.kernels.converged
    }
}

/// Time-ordered samples of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub diagnostics: TrajectoryDiagnostics,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.state.rho_ee).collect()
    }

    /// The post-measurement samples, in order.
    pub fn measurements(&self) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(|s| s.is_measurement)
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().unwrap()
    }

    /// CSV with columns `t,rho_ee,re_rho_eg,im_rho_eg,is_measurement`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,rho_ee,re_rho_eg,im_rho_eg,is_measurement")?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{}",
                s.t,
                s.state.rho_ee,
                s.state.rho_eg_re,
                s.state.rho_eg_im,
                u8::from(s.is_measurement)
            )?;
        }
        Ok(())
    }
}

enum Coefficients<'a> {
    Table(RateTable),
    Direct {
        model: &'a SpectralModel,
        spec: QuadratureSpec,
    },
}

impl Coefficients<'_> {
    fn at(&self, bath: &BathParams, t: f64) -> RateSet {
        match self {
            Coefficients::Table(table) => table.rates(t),
            Coefficients::Direct { model, spec } => {
                // t >= 0 was validated and the bath is fixed, so this only
                // fails on NaN input
                transition_rates(model, bath, t, spec).unwrap_or_else(|_| RateSet::zero(t))
            }
        }
    }
}

struct Runner<'a> {
    coeffs: Coefficients<'a>,
    bath: BathParams,
    protocol: Protocol,
    samples: Vec<Sample>,
    steps: StepStats,
    kernels: KernelDiagnostics,
}

impl<'a> Runner<'a> {
    fn new(
        model: &'a SpectralModel,
        bath: &BathParams,
        protocol: &Protocol,
        coefficient_horizon: f64,
    ) -> Result<Self> {
        protocol.validate()?;
        let coeffs = match protocol.rate_source {
            RateSource::Table => Coefficients::Table(RateTable::build(
                model,
                bath,
                coefficient_horizon,
                &protocol.grid,
                &protocol.quadrature,
            )?),
            RateSource::Direct => Coefficients::Direct {
                model,
                spec: protocol.quadrature,
            },
        };
        let kernels = match &coeffs {
            Coefficients::Table(t) => t.diagnostics(),
            Coefficients::Direct { .. } => KernelDiagnostics {
                max_error: 0.0,
                truncation_bound: 0.0,
                converged: true,
            },
        };
        Ok(Self {
            coeffs,
            bath: *bath,
            protocol: *protocol,
            samples: Vec::new(),
            steps: StepStats::default(),
            kernels,
        })
    }

    fn record(&mut self, t: f64, clock: f64, state: QubitState, is_measurement: bool) {
        let rates = self.protocol.record_rates.then(|| {
            let mut r = self.coeffs.at(&self.bath, clock);
            r.t = clock;
            r
        });
        self.samples.push(Sample {
            t,
            state,
            rates,
            is_measurement,
        });
    }

    /// Evolve over `[t0, t0 + length]` with the coefficient clock starting
    /// at `clock0`; records interior samples and the end point.
    fn segment(
        &mut self,
        state: QubitState,
        t0: f64,
        clock0: f64,
        length: f64,
        measure_at_end: bool,
    ) -> QubitState {
        let dt = self.protocol.sample_interval;
        let mut offsets = Vec::new();
        let mut j = 1u64;
        while (j as f64) * dt < length * (1.0 - 1e-9) {
            offsets.push(j as f64 * dt);
            j += 1;
        }
        offsets.push(length);
        let bath = self.bath;
        let coeffs = &self.coeffs;
        let rhs = |s: f64, y: &[f64; 3]| {
            let d = bloch_rhs(
                &QubitState::from_array(y),
                &coeffs.at(&bath, clock0 + s),
                &bath,
            );
            [d.d_rho_ee, d.d_rho_eg_re, d.d_rho_eg_im]
        };
        let mut recorded = Vec::with_capacity(offsets.len());
        let (end, stats) = ode::solve(
            rhs,
            0.0,
            state.to_array(),
            &offsets,
            self.protocol.integrator,
            |s, y| recorded.push((s, QubitState::from_array(y))),
        );
        self.steps.merge(stats);
        let last = recorded.len() - 1;
        for (k, (s, st)) in recorded.into_iter().enumerate() {
            if k == last && measure_at_end {
                self.record(t0 + s, clock0 + s, apply_measurement(&st), true);
            } else {
                self.record(t0 + s, clock0 + s, st, false);
            }
        }
        let end = QubitState::from_array(&end);
        if measure_at_end {
            apply_measurement(&end)
        } else {
            end
        }
    }

    fn finish(self) -> Trajectory {
        let worst = self
            .samples
            .iter()
            .map(|s| s.state.positivity_excess())
            .fold(f64::NEG_INFINITY, f64::max);
        Trajectory {
            samples: self.samples,
            diagnostics: TrajectoryDiagnostics {
                worst_positivity_excess: worst,
                positivity_violated: worst > POSITIVITY_SLACK,
                steps: self.steps,
                kernels: self.kernels,
            },
        }
    }
}

/// Free evolution from `state0` over `[0, horizon]`.
pub fn evolve_free(
    state0: &QubitState,
    model: &SpectralModel,
    bath: &BathParams,
    horizon: f64,
    protocol: &Protocol,
) -> Result<Trajectory> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon must be > 0, got {horizon}")));
    }
    let mut run = Runner::new(model, bath, protocol, horizon)?;
    run.record(0.0, 0.0, *state0, false);
    run.segment(*state0, 0.0, 0.0, horizon, false);
    Ok(run.finish())
}

/// `n_meas` rounds of free evolution over τ followed by a measurement.
/// With `n_meas = 0` this is free evolution over one interval τ.
pub fn evolve_measured(
    state0: &QubitState,
    model: &SpectralModel,
    bath: &BathParams,
    protocol: &Protocol,
) -> Result<Trajectory> {
    if protocol.n_meas == 0 {
        return evolve_free(state0, model, bath, protocol.tau, protocol);
    }
    let tau = protocol.tau;
    let coefficient_horizon = match protocol.clock {
        CoefficientClock::Reset => tau,
        CoefficientClock::Continuous => tau * protocol.n_meas as f64,
    };
    let mut run = Runner::new(model, bath, protocol, coefficient_horizon)?;
    run.record(0.0, 0.0, *state0, false);
    let mut state = *state0;
    for k in 0..protocol.n_meas {
        let t0 = k as f64 * tau;
        let clock0 = match protocol.clock {
            CoefficientClock::Reset => 0.0,
            CoefficientClock::Continuous => t0,
        };
        state = run.segment(state, t0, clock0, tau, true);
    }
    Ok(run.finish())
}

/// Fixed point of the post-measurement populations by Aitken's Δ²
/// extrapolation of the last three of them.
///
/// Between measurements ρ_ee obeys a linear equation that does not involve
/// the coherence, so one measurement round is an affine map of ρ_ee and
/// three consecutive values determine its fixed point. Returns `None` with
/// fewer than three measurements or when the sequence has already
/// stopped moving (then the last value is the plateau).
pub fn extrapolated_plateau(trajectory: &Trajectory) -> Option<f64> {
    let pops: Vec<f64> = trajectory.measurements().map(|s| s.state.rho_ee).collect();
    let [a, b, c] = pops.get(pops.len().checked_sub(3)?..)? else {
        return None;
    };
    let denom = (c - b) - (b - a);
    if denom == 0.0 {
        return None;
    }
    Some(c - (c - b) * (c - b) / denom)
}

/// Qubit inverse temperature read off an excited population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTemperature {
    pub beta_s: f64,
    /// ρ_ee > 1/2: population inversion, β_S < 0.
    pub inverted: bool,
    /// ρ_ee = 1/2: infinite temperature, β_S = 0.
    pub boundary: bool,
}

/// `β_S = ln(1/ρ_ee − 1)/ω_a`.
pub fn effective_temperature(rho_ee: f64, bath: &BathParams) -> Result<EffectiveTemperature> {
    if !(rho_ee > 0.0 && rho_ee < 1.0) {
        return Err(Error::Domain(format!(
            "effective temperature needs 0 < rho_ee < 1, got {rho_ee}"
        )));
    }
    let beta_s = ((1.0 - rho_ee) / rho_ee).ln() / bath.omega_a;
    Ok(EffectiveTemperature {
        beta_s,
        inverted: rho_ee > 0.5,
        boundary: rho_ee == 0.5,
    })
}

/// Short-time adiabatic estimate `ρ_ee(0)[1 + e^{β_S ω_a}J+(t) − J−(t)]`
/// with β_S taken from the initial population.
pub fn adiabatic_population(rho_ee0: f64, cumulative: &CumulativeJ) -> Result<f64> {
    if !(rho_ee0 > 0.0 && rho_ee0 < 1.0) {
        return Err(Error::Domain(format!(
            "adiabatic estimate needs 0 < rho_ee(0) < 1, got {rho_ee0}"
        )));
    }
    // e^{β_S ω_a} = ρ_gg/ρ_ee
    Ok(rho_ee0 + (1.0 - rho_ee0) * cumulative.j_plus() - rho_ee0 * cumulative.j_minus())
}

/// Envelope of the post-measurement populations,
/// `[ρ_ee(0) − J+/J]e^{−(J/τ)t} + J+/J`.
pub fn measured_envelope(rho_ee0: f64, cumulative: &CumulativeJ, t: f64) -> f64 {
    let steady = cumulative.steady_population();
    (rho_ee0 - steady) * (-cumulative.effective_rate() * t).exp() + steady
}

/// Markovian relaxation `[ρ_ee(0) − ρ^B]e^{−Γ0 t} + ρ^B`.
pub fn markovian_population(
    rho_ee0: f64,
    model: &SpectralModel,
    bath: &BathParams,
    t: f64,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    let gamma0 = golden_rule_rate(model, bath)?;
    let eq = bath.equilibrium_population();
    Ok((rho_ee0 - eq) * (-gamma0 * t).exp() + eq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lorentz() -> SpectralModel {
        SpectralModel::modified_lorentzian(0.01, 0.25, 1.5).unwrap()
    }

    fn bath() -> BathParams {
        BathParams::with_beta(2.0).unwrap()
    }

    fn rates(gp: f64, gm: f64, dp: f64, dm: f64) -> RateSet {
        let mut r = RateSet::zero(1.0);
        r.gamma_plus_r = gp;
        r.gamma_minus_cr = gm;
        r.delta_plus_cr = dp;
        r.delta_minus_r = dm;
        r
    }

    #[test]
    fn free_rotation_without_coefficients() {
        let s = QubitState::new(0.3, 0.2, -0.1);
        let d = bloch_rhs(&s, &RateSet::zero(1.0), &bath());
        assert_eq!(d.d_rho_ee, 0.0);
        // d(x + iy)/dt = −i(x + iy)
        assert_eq!(d.d_rho_eg_re, -0.1);
        assert_eq!(d.d_rho_eg_im, -0.2);
    }

    #[test]
    fn balance_point_is_stationary() {
        let d = bloch_rhs(
            &QubitState::diagonal(0.5),
            &rates(0.3, 0.3, 0.1, 0.4),
            &bath(),
        );
        assert_eq!([d.d_rho_ee, d.d_rho_eg_re, d.d_rho_eg_im], [0.0, 0.0, 0.0]);
    }

    #[test]
    fn coherence_free_state_stays_coherence_free() {
        let d = bloch_rhs(
            &QubitState::diagonal(0.2),
            &rates(0.01, 0.05, -0.3, 0.7),
            &bath(),
        );
        assert_eq!((d.d_rho_eg_re, d.d_rho_eg_im), (0.0, 0.0));
        assert_eq!(d.d_rho_ee, -d.d_rho_gg);
        assert_relative_eq!(d.d_rho_ee, -0.05 * 0.2 + 0.01 * 0.8);
    }

    #[test]
    fn non_secular_coherence_terms() {
        // Γ̄ = 0.2, Δ− − Δ+ = 0.3, ρ_eg = 1 + 0i
        let d = bloch_rhs(
            &QubitState::new(0.5, 1.0, 0.0),
            &rates(0.1, 0.3, -0.1, 0.2),
            &bath(),
        );
        assert_relative_eq!(d.d_rho_eg_re, 0.0);
        assert_relative_eq!(d.d_rho_eg_im, -(1.0 + 0.6));
        let d = bloch_rhs(
            &QubitState::new(0.5, 0.0, 1.0),
            &rates(0.1, 0.3, -0.1, 0.2),
            &bath(),
        );
        assert_relative_eq!(d.d_rho_eg_re, 1.0);
        assert_relative_eq!(d.d_rho_eg_im, -0.4);
    }

    #[test]
    fn measurement_projects() {
        let s = apply_measurement(&QubitState::new(0.3, 0.1, -0.2));
        assert_eq!(s, QubitState::diagonal(0.3));
        assert_eq!(apply_measurement(&s), s);
        assert_eq!(
            apply_measurement(&QubitState::diagonal(0.5)),
            QubitState::diagonal(0.5)
        );
    }

    #[test]
    fn effective_temperature_values() {
        let b = bath();
        let eq = b.equilibrium_population();
        assert_relative_eq!(
            effective_temperature(eq, &b).unwrap().beta_s,
            2.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            effective_temperature(0.15, &b).unwrap().beta_s,
            (17.0f64 / 3.0).ln(),
            max_relative = 1e-12
        );
        let half = effective_temperature(0.5, &b).unwrap();
        assert!(half.boundary && half.beta_s == 0.0);
        assert!(effective_temperature(0.7, &b).unwrap().inverted);
        assert!(effective_temperature(0.0, &b).is_err());
        assert!(effective_temperature(1.0, &b).is_err());
    }

    #[test]
    fn closed_form_populations() {
        let j0 = CumulativeJ::zero(1.0);
        assert_eq!(adiabatic_population(0.12, &j0).unwrap(), 0.12);
        assert!(adiabatic_population(0.0, &j0).is_err());
        let m = markovian_population(0.15, &lorentz(), &bath(), 0.0).unwrap();
        assert_eq!(m, 0.15);
        let eq = bath().equilibrium_population();
        let far = markovian_population(0.15, &lorentz(), &bath(), 1e5).unwrap();
        assert_relative_eq!(far, eq, max_relative = 1e-12);
        let g0 = golden_rule_rate(&lorentz(), &bath()).unwrap();
        let half = markovian_population(0.15, &lorentz(), &bath(), 2f64.ln() / g0).unwrap();
        assert_relative_eq!(half - eq, 0.5 * (0.15 - eq), max_relative = 1e-12);

        let mut j = CumulativeJ::zero(2.5);
        j.j_plus_r = 0.004;
        j.j_minus_r = 0.03;
        assert_eq!(measured_envelope(0.15, &j, 0.0), 0.15);
        assert_relative_eq!(
            measured_envelope(0.15, &j, 1e6),
            0.004 / 0.034,
            max_relative = 1e-12
        );
    }

    #[test]
    fn decoupled_qubit_is_frozen() {
        let model = lorentz().scaled(0.0);
        let mut p = Protocol::new(5.0, 0).unwrap();
        p.grid = RateGrid::uniform(0.1);
        let traj = evolve_free(&QubitState::diagonal(0.3), &model, &bath(), 5.0, &p).unwrap();
        for s in &traj.samples {
            assert!((s.state.rho_ee - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn measured_trajectory_markers() {
        let mut p = Protocol::new(0.5, 4).unwrap();
        p.sample_interval = 0.1;
        let traj =
            evolve_measured(&QubitState::new(0.15, 0.1, 0.0), &lorentz(), &bath(), &p).unwrap();
        let times = traj.times();
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        let marks: Vec<f64> = traj.measurements().map(|s| s.t).collect();
        assert_eq!(marks, vec![0.5, 1.0, 1.5, 2.0]);
        for s in traj.measurements() {
            assert_eq!((s.state.rho_eg_re, s.state.rho_eg_im), (0.0, 0.0));
        }
        assert!(!traj.diagnostics.flagged());
    }

    #[test]
    fn plateau_of_affine_sequence() {
        let mut p = Protocol::new(2.5, 5).unwrap();
        p.sample_interval = 2.5;
        let s0 = QubitState::diagonal(0.15);
        let traj = evolve_measured(&s0, &lorentz(), &bath(), &p).unwrap();
        let plateau = extrapolated_plateau(&traj).unwrap();
        p.n_meas = 400;
        let long = evolve_measured(&s0, &lorentz(), &bath(), &p).unwrap();
        let terminal = long.last().state.rho_ee;
        assert!(
            (plateau - terminal).abs() < 1e-5 * terminal,
            "{plateau} vs {terminal}"
        );
        p.n_meas = 2;
        let short = evolve_measured(&s0, &lorentz(), &bath(), &p).unwrap();
        assert!(extrapolated_plateau(&short).is_none());
    }

    #[test]
    fn zero_measurements_is_free_evolution() {
        let p = Protocol::new(1.5, 0).unwrap();
        let s0 = QubitState::diagonal(0.12);
        let a = evolve_measured(&s0, &lorentz(), &bath(), &p).unwrap();
        let b = evolve_free(&s0, &lorentz(), &bath(), 1.5, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn table_and_direct_sources_agree() {
        let mut p = Protocol::new(1.0, 1).unwrap();
        p.sample_interval = 0.25;
        let s0 = QubitState::new(0.15, 0.05, 0.02);
        let table = evolve_measured(&s0, &lorentz(), &bath(), &p).unwrap();
        p.rate_source = RateSource::Direct;
        p.integrator = Integrator::Rk4 { step: 0.05 };
        let direct = evolve_measured(&s0, &lorentz(), &bath(), &p).unwrap();
        for (a, b) in table.samples.iter().zip(&direct.samples) {
            assert!((a.state.rho_ee - b.state.rho_ee).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_layout() {
        let p = Protocol::new(0.2, 1).unwrap();
        let traj = evolve_measured(&QubitState::diagonal(0.15), &lorentz(), &bath(), &p).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,rho_ee,re_rho_eg,im_rho_eg,is_measurement"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "0.0000000000000000e0");
        assert_eq!(first[1].parse::<f64>().unwrap(), 0.15);
        assert!(text.trim_end().ends_with(",1"));
    }
}
