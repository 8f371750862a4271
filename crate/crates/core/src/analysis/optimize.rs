use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::m_factor_exact;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;
use crate::spectrum::{BathParams, SpectralModel};

/// Search range and resolution for [`optimize_tau`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauSearch {
    pub tau_lo: f64,
    pub tau_hi: f64,
    /// Grid points per period 2π/ω_a of the sin(ω_aτ) oscillation.
    pub points_per_period: usize,
    /// Absolute tolerance on τ for the golden-section refinement.
    pub tau_tol: f64,
}

impl TauSearch {
    pub fn new(tau_lo: f64, tau_hi: f64) -> Self {
        Self {
            tau_lo,
            tau_hi,
            points_per_period: 40,
            tau_tol: 1e-6,
        }
    }

    /// The uniform scan grid (endpoints included).
    pub fn grid(&self, omega_a: f64) -> Vec<f64> {
        let period = 2.0 * std::f64::consts::PI / omega_a;
        let span = self.tau_hi - self.tau_lo;
        let n = ((span / period) * self.points_per_period as f64)
            .ceil()
            .max(2.0) as usize;
        (0..=n)
            .map(|k| self.tau_lo + span * k as f64 / n as f64)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau_lo > 0.0 && self.tau_hi > self.tau_lo && self.tau_hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tau range must satisfy 0 < lo < hi, got ({}, {})",
                self.tau_lo, self.tau_hi
            )));
        }
        if self.points_per_period < 20 {
            return Err(Error::InvalidParameter(format!(
                "at least 20 points per period are needed, got {}",
                self.points_per_period
            )));
        }
        if !(self.tau_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "tau tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Minimiser of M(τ) over a range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauOptimum {
    pub tau_min: f64,
    pub m_min: f64,
    /// `m_min < 0`.
    pub cooling: bool,
    pub evaluations: usize,
    pub converged: bool,
}

/// Golden-section minimisation of a unimodal `f` on `[a, b]` down to an
/// interval of width `tol`. Returns the best point seen and its value.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64, usize) {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evals = 2;
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        evals += 1;
    }
    if fc <= fd {
        (c, fc, evals)
    } else {
        (d, fd, evals)
    }
}

/// Scan M(τ) on the search grid and refine the best bracket by golden
/// section. Ties go to the smallest τ.
pub fn optimize_tau(
    model: &SpectralModel,
    bath: &BathParams,
    search: &TauSearch,
    spec: &QuadratureSpec,
) -> Result<TauOptimum> {
    search.validate()?;
    let grid = search.grid(bath.omega_a);
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&t| m_factor_exact(model, bath, t, spec).map(|m| m.value))
        .collect::<Result<_>>()?;
    let mut opt = refine(model, bath, &grid, &values, search.tau_tol, spec)?;
    opt.evaluations += grid.len();
    Ok(opt)
}

/// Golden-section refinement around the smallest of `values` on `grid`.
pub(crate) fn refine_on_grid(
    model: &SpectralModel,
    bath: &BathParams,
    grid: &[f64],
    values: &[f64],
    spec: &QuadratureSpec,
) -> Result<TauOptimum> {
    refine(model, bath, grid, values, 1e-6, spec)
}

fn refine(
    model: &SpectralModel,
    bath: &BathParams,
    grid: &[f64],
    values: &[f64],
    tol: f64,
    spec: &QuadratureSpec,
) -> Result<TauOptimum> {
    let mut i = 0;
    for (k, v) in values.iter().enumerate() {
        if *v < values[i] {
            i = k;
        }
    }
    let a = grid[i.saturating_sub(1)];
    let b = grid[(i + 1).min(grid.len() - 1)];
    let mut failure = None;
    let mut converged = true;
    let (t, m, evals) = golden_section(
        |t| match m_factor_exact(model, bath, t, spec) {
            Ok(m) => {
                converged &= m.diagnostics.converged;
                m.value
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        a,
        b,
        tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let (tau_min, m_min) = if m < values[i] {
        (t, m)
    } else {
        (grid[i], values[i])
    };
    Ok(TauOptimum {
        tau_min,
        m_min,
        cooling: m_min < 0.0,
        evaluations: evals,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_parabola() {
        let (x, fx, _) = golden_section(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx < 1e-16);
    }

    #[test]
    fn grid_density() {
        let s = TauSearch::new(0.5, 20.0);
        let g = s.grid(1.0);
        assert_eq!(g[0], 0.5);
        assert_eq!(*g.last().unwrap(), 20.0);
        let per_period = (g.len() - 1) as f64 / (19.5 / (2.0 * std::f64::consts::PI));
        assert!(per_period >= 40.0);
        let mut bad = s;
        bad.points_per_period = 10;
        assert!(bad.validate().is_err());
    }
}
