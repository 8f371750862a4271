use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{transition_rates, KernelDiagnostics, RateSet};
use crate::quadrature::QuadratureSpec;
use crate::spectrum::{BathParams, SpectralModel};

/// Node layout of a [`RateTable`].
///
/// Nodes are `fine_step` apart up to `fine_until`; beyond that the spacing
/// grows in proportion to t, capped at `max_step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateGrid {
    pub fine_step: f64,
    pub fine_until: f64,
    pub max_step: f64,
}

impl Default for RateGrid {
    fn default() -> Self {
        Self {
            fine_step: 0.01,
            fine_until: 20.0,
            max_step: 0.2,
        }
    }
}

impl RateGrid {
    /// A uniform grid with spacing `step`.
    pub fn uniform(step: f64) -> Self {
        Self {
            fine_step: step,
            fine_until: f64::INFINITY,
            max_step: step,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.fine_step > 0.0 && self.max_step >= self.fine_step && self.fine_until > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rate grid needs 0 < fine_step <= max_step and fine_until > 0, got {self:?}"
            )));
        }
        Ok(())
    }

    fn step_at(&self, t: f64) -> f64 {
        if t < self.fine_until {
            self.fine_step
        } else {
            (self.fine_step * t / self.fine_until).min(self.max_step)
        }
    }

    /// Node times covering `[0, horizon]`, at least four of them.
    pub fn nodes(&self, horizon: f64) -> Vec<f64> {
        let mut nodes = vec![0.0];
        let mut k = 0u64;
        let mut t = 0.0;
        // the uniform part is generated by index to avoid drift
        while t < horizon || nodes.len() < 4 {
            t = if t < self.fine_until {
                k += 1;
                k as f64 * self.fine_step
            } else {
                t + self.step_at(t)
            };
            nodes.push(t);
        }
        nodes
    }
}

/// The eight coefficients precomputed on a grid and interpolated with
/// local cubic Lagrange polynomials.
#[derive(Debug, Clone)]
pub struct RateTable {
    nodes: Vec<f64>,
    values: Vec<[f64; 8]>,
    diagnostics: KernelDiagnostics,
}

impl RateTable {
    /// Evaluate the coefficients at every node of `grid` up to `horizon`.
    /// Nodes are computed in parallel; the result does not depend on the
    /// number of worker threads.
    pub fn build(
        model: &SpectralModel,
        bath: &BathParams,
        horizon: f64,
        grid: &RateGrid,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        grid.validate()?;
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!(
                "table horizon must be >= 0, got {horizon}"
            )));
        }
        let nodes = grid.nodes(horizon);
        let sets: Vec<RateSet> = nodes
            .par_iter()
            .map(|&t| transition_rates(model, bath, t, spec))
            .collect::<Result<_>>()?;
        let mut diagnostics = KernelDiagnostics {
            max_error: 0.0,
            truncation_bound: 0.0,
            converged: true,
        };
        for s in &sets {
            diagnostics.max_error = diagnostics.max_error.max(s.diagnostics.max_error);
            diagnostics.truncation_bound = diagnostics
                .truncation_bound
                .max(s.diagnostics.truncation_bound);
            diagnostics.converged &= s.diagnostics.converged;
        }
        Ok(Self {
            nodes,
            values: sets.iter().map(RateSet::to_array).collect(),
            diagnostics,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Last tabulated time.
    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn diagnostics(&self) -> KernelDiagnostics {
        self.diagnostics
    }

    /// Interpolated coefficients at `t` (extrapolated beyond the horizon).
    pub fn eval(&self, t: f64) -> [f64; 8] {
        let n = self.nodes.len();
        let i = self.nodes.partition_point(|&x| x <= t).saturating_sub(1);
        let s = i.saturating_sub(1).min(n - 4);
        let x = &self.nodes[s..s + 4];
        let mut w = [1.0; 4];
        for j in 0..4 {
            for m in 0..4 {
                if m != j {
                    w[j] *= (t - x[m]) / (x[j] - x[m]);
                }
            }
        }
        let mut out = [0.0; 8];
        for (wj, row) in w.iter().zip(&self.values[s..s + 4]) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += wj * v;
            }
        }
        out
    }

    pub fn rates(&self, t: f64) -> RateSet {
        let mut r = RateSet::from_array(t, self.eval(t));
        r.diagnostics = self.diagnostics;
        r
    }
}
