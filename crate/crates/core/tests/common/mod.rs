//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's quadrature or spectrum code.

#![allow(dead_code)]

use zenocool_core::{BathParams, SpectralModel};

/// Composite trapezoid rule with `n` panels.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = 0.5 * (f(a) + f(b));
    for k in 1..n {
        sum += f(a + k as f64 * h);
    }
    sum * h
}

/// Trapezoid rule for several integrands sharing the grid.
pub fn trapezoid_vec<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: F,
    a: f64,
    b: f64,
    n: usize,
) -> [f64; N] {
    let h = (b - a) / n as f64;
    let mut sum = [0.0; N];
    for k in 0..=n {
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        for (s, v) in sum.iter_mut().zip(f(a + k as f64 * h)) {
            *s += w * v;
        }
    }
    sum.map(|s| s * h)
}

/// Plain-formula spectral densities.
#[derive(Debug, Clone, Copy)]
pub enum Sdf {
    Lorentzian {
        alpha: f64,
        lambda: f64,
        omega0: f64,
    },
    Power {
        alpha: f64,
        s: f64,
        omega_c: f64,
    },
}

impl Sdf {
    pub fn value(&self, w: f64) -> f64 {
        match *self {
            Sdf::Lorentzian {
                alpha,
                lambda,
                omega0,
            } => alpha * w * lambda * lambda / ((w - omega0).powi(2) + lambda * lambda),
            Sdf::Power { alpha, s, omega_c } => {
                if w > omega_c {
                    0.0
                } else {
                    alpha * omega_c.powf(1.0 - s) * w.powf(s)
                }
            }
        }
    }

    /// Upper end of the frequency integrals (the library's truncation for
    /// the Lorentzian).
    pub fn end(&self) -> f64 {
        match *self {
            Sdf::Lorentzian { lambda, omega0, .. } => omega0 + 50.0 * lambda,
            Sdf::Power { omega_c, .. } => omega_c,
        }
    }

    pub fn model(&self) -> SpectralModel {
        match *self {
            Sdf::Lorentzian {
                alpha,
                lambda,
                omega0,
            } => SpectralModel::modified_lorentzian(alpha, lambda, omega0).unwrap(),
            Sdf::Power { alpha, s, omega_c } => {
                SpectralModel::super_ohmic(alpha, s, omega_c).unwrap()
            }
        }
    }

    /// `(n G0, (n + 1) G0)`, finite at ω → 0.
    pub fn weights(&self, beta: f64, w: f64) -> (f64, f64) {
        let w = w.max(1e-12);
        let n = 1.0 / (beta * w).exp_m1();
        let g = self.value(w);
        (n * g, (n + 1.0) * g)
    }
}

pub const FIG2: Sdf = Sdf::Lorentzian {
    alpha: 0.01,
    lambda: 0.25,
    omega0: 1.5,
};

pub fn lorentzian(omega0: f64) -> SpectralModel {
    SpectralModel::modified_lorentzian(0.01, 0.25, omega0).unwrap()
}

pub fn fig2() -> SpectralModel {
    FIG2.model()
}

pub fn bath(beta: f64) -> BathParams {
    BathParams::with_beta(beta).unwrap()
}

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// `τ² ∫ w(ω) sinc²((ω ∓ 1)τ/2) dω` for the four J components, in the
/// order `[j_plus_r, j_minus_r, j_plus_cr, j_minus_cr]`.
pub fn j_oracle(sdf: &Sdf, beta: f64, tau: f64, n: usize) -> [f64; 4] {
    trapezoid_vec(
        |w| {
            let (p, q) = sdf.weights(beta, w);
            let kr = tau * tau * sinc(0.5 * (w - 1.0) * tau).powi(2);
            let kc = tau * tau * sinc(0.5 * (w + 1.0) * tau).powi(2);
            [p * kr, q * kr, q * kc, p * kc]
        },
        0.0,
        sdf.end(),
        n,
    )
}

/// The eight coefficients by trapezoid, in `RateSet::to_array` order.
pub fn rates_oracle(sdf: &Sdf, beta: f64, t: f64, n: usize) -> [f64; 8] {
    let omc = |x: f64| {
        if x == 0.0 {
            0.0
        } else {
            (1.0 - (x * t).cos()) / x
        }
    };
    let [gpr, gpc, gmr, gmc, dpr, dpc, dmr, dmc] = trapezoid_vec(
        |w| {
            let (p, q) = sdf.weights(beta, w);
            let sr = 2.0 * t * sinc((w - 1.0) * t);
            let sc = 2.0 * t * sinc((w + 1.0) * t);
            let cr = omc(w - 1.0);
            let cc = omc(w + 1.0);
            [
                p * sr,
                q * sc,
                q * sr,
                p * sc,
                p * cr,
                -q * cc,
                -q * cr,
                p * cc,
            ]
        },
        0.0,
        sdf.end(),
        n,
    );
    [gpr, gpc, gmr, gmc, dpr, dpc, dmr, dmc]
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}
