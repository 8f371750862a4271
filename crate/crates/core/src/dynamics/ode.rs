//! Explicit Runge–Kutta integrators for small non-stiff systems.

use serde::{Deserialize, Serialize};

/// Integration scheme for the Bloch equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Integrator {
    /// Dormand–Prince 5(4) with local error control and dense output.
    Dopri5 { rel_tol: f64, abs_tol: f64 },
    /// Classical fourth-order Runge–Kutta with a fixed step.
    Rk4 { step: f64 },
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::Dopri5 {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
        }
    }
}

/// Step statistics of one integration call.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Set when the step size underflowed or the step budget ran out.
    pub failed: bool,
}

impl StepStats {
    pub fn merge(&mut self, other: StepStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.failed |= other.failed;
    }
}

const MAX_STEPS: usize = 10_000_000;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrate `y' = f(t, y)` from `t0` to the last entry of `outputs`,
/// calling `sink(t, y)` at every output time in order. `outputs` must be
/// increasing and start after `t0`.
pub fn solve<const N: usize, F, S>(
    f: F,
    t0: f64,
    y0: [f64; N],
    outputs: &[f64],
    integrator: Integrator,
    mut sink: S,
) -> ([f64; N], StepStats)
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]),
{
    match integrator {
        Integrator::Dopri5 { rel_tol, abs_tol } => {
            dopri5(&f, t0, y0, outputs, rel_tol, abs_tol, &mut sink)
        }
        Integrator::Rk4 { step } => rk4(&f, t0, y0, outputs, step, &mut sink),
    }
}

fn rk4<const N: usize, F, S>(
    f: &F,
    t0: f64,
    y0: [f64; N],
    outputs: &[f64],
    step: f64,
    sink: &mut S,
) -> ([f64; N], StepStats)
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]),
{
    let mut stats = StepStats::default();
    let mut t = t0;
    let mut y = y0;
    for &target in outputs {
        let span = target - t;
        let n = (span / step).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let start = t;
        for i in 0..n {
            let ti = start + i as f64 * h;
            let k1 = f(ti, &y);
            let k2 = f(ti + 0.5 * h, &axpy(&y, 0.5 * h, &[(1.0, &k1)]));
            let k3 = f(ti + 0.5 * h, &axpy(&y, 0.5 * h, &[(1.0, &k2)]));
            let k4 = f(ti + h, &axpy(&y, h, &[(1.0, &k3)]));
            y = axpy(
                &y,
                h / 6.0,
                &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)],
            );
            stats.accepted += 1;
        }
        t = target;
        sink(t, &y);
    }
    (y, stats)
}

fn dopri5<const N: usize, F, S>(
    f: &F,
    t0: f64,
    y0: [f64; N],
    outputs: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    sink: &mut S,
) -> ([f64; N], StepStats)
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]),
{
    let mut stats = StepStats::default();
    let Some(&t_end) = outputs.last() else {
        return (y0, stats);
    };
    let span = t_end - t0;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = initial_step(f, t, &y, &k1, span, rel_tol, abs_tol);
    let mut next_out = 0;
    let min_step = 1e-14 * span.abs().max(1.0);

    while next_out < outputs.len() {
        if stats.accepted + stats.rejected >= MAX_STEPS || h < min_step {
            stats.failed = true;
            // hand the remaining outputs the last state so callers still
            // see every requested time
            for &to in &outputs[next_out..] {
                sink(to, &y);
            }
            return (y, stats);
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y1 = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let t1 = if last { t_end } else { t + h };
        let k7 = f(t1, &y1);

        let mut err = 0.0;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = abs_tol + rel_tol * y[i].abs().max(y1[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();

        if err <= 1.0 {
            stats.accepted += 1;
            // dense output coefficients over [t, t1]
            let mut r2 = [0.0; N];
            let mut r3 = [0.0; N];
            let mut r4 = [0.0; N];
            let mut r5 = [0.0; N];
            for i in 0..N {
                r2[i] = y1[i] - y[i];
                r3[i] = h * k1[i] - r2[i];
                r4[i] = r2[i] - h * k7[i] - r3[i];
                r5[i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            while next_out < outputs.len() && (outputs[next_out] <= t1 || last) {
                let to = outputs[next_out];
                let theta = ((to - t) / h).clamp(0.0, 1.0);
                let eta = 1.0 - theta;
                let mut yo = [0.0; N];
                for i in 0..N {
                    yo[i] = y[i] + theta * (r2[i] + eta * (r3[i] + theta * (r4[i] + eta * r5[i])));
                }
                if to == t1 {
                    yo = y1;
                }
                sink(to, &yo);
                next_out += 1;
            }
            t = t1;
            y = y1;
            k1 = k7;
            let fac = if err == 0.0 {
                5.0
            } else {
                0.9 * err.powf(-0.2)
            };
            h *= fac.clamp(0.2, 5.0);
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).max(0.2);
        }
    }
    (y, stats)
}

fn initial_step<const N: usize, F>(
    f: &F,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    span: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let scale = |i: usize| abs_tol + rel_tol * y[i].abs();
    let norm = |v: &[f64; N]| {
        (v.iter()
            .enumerate()
            .map(|(i, x)| (x / scale(i)).powi(2))
            .sum::<f64>()
            / N as f64)
            .sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(k1);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let y1 = axpy(y, h0, &[(1.0, k1)]);
    let k2 = f(t + h0, &y1);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = k2[i] - k1[i];
    }
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    #[test]
    fn dopri5_harmonic_oscillator() {
        let outputs: Vec<f64> = (1..=100).map(|k| 0.1 * k as f64).collect();
        let mut seen = Vec::new();
        let (y, stats) = solve(
            oscillator,
            0.0,
            [1.0, 0.0],
            &outputs,
            Integrator::default(),
            |t, y| seen.push((t, *y)),
        );
        assert!(!stats.failed);
        assert_eq!(seen.len(), 100);
        for (t, y) in &seen {
            assert!((y[0] - t.cos()).abs() < 1e-7, "{t} {}", y[0] - t.cos());
            assert!((y[1] + t.sin()).abs() < 1e-7);
        }
        assert_eq!(y, seen.last().unwrap().1);
    }

    #[test]
    fn dopri5_dense_output_between_steps() {
        // a single long step is taken for a linear ODE with loose tolerance;
        // interior outputs come from the continuous extension
        let outputs: Vec<f64> = (1..=50).map(|k| 0.02 * k as f64).collect();
        let mut worst: f64 = 0.0;
        solve(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            [1.0],
            &outputs,
            Integrator::Dopri5 {
                rel_tol: 1e-6,
                abs_tol: 1e-9,
            },
            |t, y| worst = worst.max((y[0] - (-t).exp()).abs()),
        );
        assert!(worst < 1e-6);
    }

    #[test]
    fn rk4_fourth_order() {
        let err = |step: f64| {
            let (y, _) = solve(
                oscillator,
                0.0,
                [1.0, 0.0],
                &[1.0],
                Integrator::Rk4 { step },
                |_, _| {},
            );
            (y[0] - 1f64.cos()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 2.0, "{ratio}");
    }
}
