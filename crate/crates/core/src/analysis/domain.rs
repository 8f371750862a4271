use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::filter_function;
use crate::quadrature::{integrate_scalar, QuadratureSpec};
use crate::spectrum::BathParams;

/// Default upper end of the frequency search window, in units of ω_a.
pub const SEARCH_WINDOW: f64 = 6.0;

/// Largest |F| accepted at a reported boundary.
pub const ROOT_TOLERANCE: f64 = 1e-10;

/// Which filter the cooling domain is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainMode {
    /// The raw filter F(β, β, τ, ω).
    #[default]
    MainLobe,
    /// F averaged over a frequency window of width 2π/τ centred at ω,
    /// which removes the sinc² fringes at large τ.
    PeriodAveraged,
}

/// Controls for [`cooling_domain`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSearch {
    pub mode: DomainMode,
    /// Upper end of the search window (the lower end is 0).
    pub omega_max: f64,
    /// Scan points per fringe period 2π/τ.
    pub points_per_fringe: usize,
    /// Report every negative lobe, not just the main one.
    pub all_lobes: bool,
}

impl Default for DomainSearch {
    fn default() -> Self {
        Self {
            mode: DomainMode::MainLobe,
            omega_max: SEARCH_WINDOW,
            points_per_fringe: 40,
            all_lobes: false,
        }
    }
}

/// A boundary of a negative lobe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainEdge {
    pub omega: f64,
    /// Filter value at `omega`.
    pub residual: f64,
    /// True when the filter changes sign across `omega` and
    /// |F| ≤ [`ROOT_TOLERANCE`]; false when the lobe runs into the edge of
    /// the search window or the root could not be resolved that finely.
    pub certified: bool,
}

/// One interval where the filter is negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lobe {
    pub lower: DomainEdge,
    pub upper: DomainEdge,
    /// Location and value of the most negative scan point.
    pub omega_min: f64,
    pub f_min: f64,
}

/// Result of [`cooling_domain`]; `main` is `None` when the filter is
/// non-negative throughout the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoolingDomain {
    pub tau: f64,
    pub mode: DomainMode,
    pub main: Option<Lobe>,
    /// Every negative lobe in increasing frequency (only filled when
    /// requested).
    pub lobes: Vec<Lobe>,
}

impl CoolingDomain {
    pub fn omega1(&self) -> Option<f64> {
        self.main.map(|l| l.lower.omega)
    }

    pub fn omega2(&self) -> Option<f64> {
        self.main.map(|l| l.upper.omega)
    }
}

/// Total filter `F^r + F^cr` at β_S = β.
pub fn total_filter(bath: &BathParams, tau: f64, omega: f64) -> Result<f64> {
    let (r, cr) = filter_function(bath.beta, bath, tau, omega)?;
    Ok(r + cr)
}

/// `(τ/2π) ∫ F dω'` over `[ω − π/τ, ω + π/τ]`.
pub fn averaged_filter(bath: &BathParams, tau: f64, omega: f64) -> Result<f64> {
    let half = std::f64::consts::PI / tau;
    let (a, b) = (omega - half, omega + half);
    if a <= 0.0 {
        return Err(Error::Domain(format!(
            "averaging window around {omega} reaches the thermal pole"
        )));
    }
    let edges = [bath.omega_a];
    let spec = QuadratureSpec::default().with_rel_tol(1e-12);
    let int = integrate_scalar(
        |w| total_filter(bath, tau, w).unwrap_or(0.0),
        a,
        b,
        &edges,
        None,
        &spec,
    );
    Ok(int.scalar() / (2.0 * half))
}

struct Filter<'a> {
    bath: &'a BathParams,
    tau: f64,
    mode: DomainMode,
}

impl Filter<'_> {
    fn eval(&self, omega: f64) -> f64 {
        let v = match self.mode {
            DomainMode::MainLobe => total_filter(self.bath, self.tau, omega),
            DomainMode::PeriodAveraged => averaged_filter(self.bath, self.tau, omega),
        };
        v.unwrap_or(f64::NAN)
    }

    /// Bisection on a sign change between `a` (F ≥ 0 side irrelevant)
    /// and `b`.
    fn root(&self, mut a: f64, mut fa: f64, mut b: f64) -> DomainEdge {
        let mut best = (a, fa);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a.min(b) || m >= a.max(b) {
                break;
            }
            let fm = self.eval(m);
            if fm.abs() < best.1.abs() {
                best = (m, fm);
            }
            if fm == 0.0 || fm.abs() <= 0.01 * ROOT_TOLERANCE {
                break;
            }
            if (fm < 0.0) == (fa < 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        DomainEdge {
            omega: best.0,
            residual: best.1,
            certified: best.1.abs() <= ROOT_TOLERANCE,
        }
    }
}

/// Negative-filter frequency interval for measurement interval `tau`.
///
/// The filter is scanned on `(ω_lo, omega_max]` and the boundaries of each
/// negative run are refined by bisection. The main lobe is the one holding
/// the most negative scan point.
pub fn cooling_domain(bath: &BathParams, tau: f64, search: &DomainSearch) -> Result<CoolingDomain> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("tau must be > 0, got {tau}")));
    }
    if !(search.omega_max > 0.0) || search.points_per_fringe < 2 {
        return Err(Error::InvalidParameter(format!(
            "search window must be positive with at least 2 points per fringe, got {search:?}"
        )));
    }
    bath.boltzmann_exponent()?;
    let filter = Filter {
        bath,
        tau,
        mode: search.mode,
    };
    let fringe = 2.0 * std::f64::consts::PI / tau;
    let step = (fringe / search.points_per_fringe as f64).min(0.01 * bath.omega_a);
    let lo = match search.mode {
        DomainMode::MainLobe => step,
        DomainMode::PeriodAveraged => 0.5 * fringe + step,
    };
    if lo >= search.omega_max {
        return Err(Error::Domain(format!(
            "search window ({lo}, {}] is empty for tau = {tau}",
            search.omega_max
        )));
    }
    let n = ((search.omega_max - lo) / step).ceil() as usize;
    let grid: Vec<f64> = (0..=n)
        .map(|k| (lo + k as f64 * step).min(search.omega_max))
        .collect();
    let values: Vec<f64> = grid.par_iter().map(|&w| filter.eval(w)).collect();

    let mut lobes = Vec::new();
    let mut k = 0;
    while k < grid.len() {
        if !(values[k] < 0.0) {
            k += 1;
            continue;
        }
        let start = k;
        while k < grid.len() && values[k] < 0.0 {
            k += 1;
        }
        let end = k - 1;
        let lower = if start == 0 {
            DomainEdge {
                omega: grid[0],
                residual: values[0],
                certified: false,
            }
        } else {
            filter.root(grid[start], values[start], grid[start - 1])
        };
        let upper = if end + 1 == grid.len() {
            DomainEdge {
                omega: grid[end],
                residual: values[end],
                certified: false,
            }
        } else {
            filter.root(grid[end], values[end], grid[end + 1])
        };
        let (imin, fmin) =
            (start..=end)
                .map(|i| (i, values[i]))
                .fold(
                    (start, f64::INFINITY),
                    |acc, x| if x.1 < acc.1 { x } else { acc },
                );
        lobes.push(Lobe {
            lower,
            upper,
            omega_min: grid[imin],
            f_min: fmin,
        });
    }
    let main = lobes
        .iter()
        .copied()
        .fold(None::<Lobe>, |acc, l| match acc {
            Some(a) if a.f_min <= l.f_min => Some(a),
            _ => Some(l),
        });
    Ok(CoolingDomain {
        tau,
        mode: search.mode,
        main,
        lobes: if search.all_lobes { lobes } else { Vec::new() },
    })
}

/// `2π/τ − ω_a`, where the counter-rotating filter has its first zero.
/// The flag is set when the value is not positive.
pub fn cr_zero_curve(tau: f64, bath: &BathParams) -> (f64, bool) {
    let w = 2.0 * std::f64::consts::PI / tau - bath.omega_a;
    (w, w <= 0.0)
}

/// `ω_a[1 + 4βω_a e^{−βω_a}]`, the long-interval estimate of ω2.
pub fn w2_estimate(bath: &BathParams) -> f64 {
    let x = bath.beta * bath.omega_a;
    bath.omega_a * (1.0 + 4.0 * x * (-x).exp())
}

/// Maximum of [`w2_estimate`] over β: `ω_a(1 + 4/e)` at βω_a = 1.
pub fn w2_estimate_max(omega_a: f64) -> (f64, f64) {
    (omega_a * (1.0 + 4.0 / std::f64::consts::E), 1.0 / omega_a)
}
