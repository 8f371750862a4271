//! Globally adaptive 10/21-point Gauss–Kronrod quadrature with
//! oscillation-aware initial panels.
//!
//! The integration interval is first cut at user breakpoints and at the
//! zeros of the oscillating kernel, so every initial panel holds at most one
//! lobe near the kernel centre. The panel with the largest error estimate is
//! then bisected until the summed error meets the tolerance for every
//! component of the (vector-valued) integrand, or the panel budget runs out.
//!
//! Results are deterministic: the refinement order depends only on the
//! integrand values, and the final sum is taken in order of panel position.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

/// Tolerances and budget for one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_panels: 1 << 14,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// A kernel that oscillates like `sin(frequency · (ω − center))`; its zeros
/// sit at `center + kπ/frequency`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillation {
    pub center: f64,
    pub frequency: f64,
}

impl Oscillation {
    /// Zeros of `sinc((ω − center)·t)`.
    pub fn sinc(center: f64, t: f64) -> Self {
        Self {
            center,
            frequency: t,
        }
    }

    /// Zeros of `sinc²((ω − center)·t/2)`.
    pub fn sinc_squared(center: f64, t: f64) -> Self {
        Self {
            center,
            frequency: 0.5 * t,
        }
    }

    fn spacing(&self) -> f64 {
        std::f64::consts::PI / self.frequency
    }
}

/// Value and error estimate of an `N`-component integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub panels: usize,
    pub converged: bool,
}

/// Scalar integral with its error estimate and convergence flag.
pub type ScalarIntegral = Integral<1>;

impl ScalarIntegral {
    pub fn scalar(&self) -> f64 {
        self.value[0]
    }
}

/// Zeros within this many spacings of the kernel centre become panel edges
/// individually; further out the stride doubles every time the distance
/// doubles, so the panel count grows only logarithmically.
const DENSE_ZEROS: i64 = 1024;

/// Integrate `f` over `[a, b]`, splitting at `breakpoints` and at the zeros
/// of `kernel` when given.
pub fn integrate<const N: usize, F>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    kernel: Option<Oscillation>,
    spec: &QuadratureSpec,
) -> Integral<N>
where
    F: Fn(f64) -> [f64; N],
{
    if !(b > a) {
        return Integral {
            value: [0.0; N],
            error: [0.0; N],
            panels: 0,
            converged: true,
        };
    }
    let edges = panel_edges(a, b, breakpoints, kernel);
    let mut heap = BinaryHeap::with_capacity(edges.len() * 2);
    let mut total = [0.0; N];
    let mut total_err = [0.0; N];
    let mut panels = Vec::with_capacity(edges.len());
    for w in edges.windows(2) {
        let p = Panel::new(&f, w[0], w[1]);
        for k in 0..N {
            total[k] += p.value[k];
            total_err[k] += p.error[k];
        }
        panels.push(p);
    }
    let scale = |total: &[f64; N]| -> [f64; N] {
        let mut s = [0.0; N];
        for k in 0..N {
            s[k] = spec.abs_tol.max(spec.rel_tol * total[k].abs());
        }
        s
    };
    let tol = scale(&total);
    for (idx, p) in panels.iter().enumerate() {
        heap.push(Ranked::new(p.priority(&tol), p.a, idx));
    }
    let mut count = panels.len();
    let done = |total: &[f64; N], err: &[f64; N]| {
        let tol = scale(total);
        (0..N).all(|k| err[k] <= tol[k])
    };
    while !done(&total, &total_err) && count < spec.max_panels {
        let Some(top) = heap.pop() else { break };
        let parent = panels[top.index];
        let mid = 0.5 * (parent.a + parent.b);
        if !(mid > parent.a && mid < parent.b) {
            // cannot split further in double precision; retire the panel
            continue;
        }
        let left = Panel::new(&f, parent.a, mid);
        let right = Panel::new(&f, mid, parent.b);
        for k in 0..N {
            total[k] += left.value[k] + right.value[k] - parent.value[k];
            total_err[k] += left.error[k] + right.error[k] - parent.error[k];
        }
        panels[top.index] = left;
        panels.push(right);
        heap.push(Ranked::new(left.priority(&tol), left.a, top.index));
        heap.push(Ranked::new(right.priority(&tol), right.a, panels.len() - 1));
        count += 1;
    }

    // order-deterministic final summation
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for p in &panels {
        for k in 0..N {
            value[k] += p.value[k];
            error[k] += p.error[k];
        }
    }
    let converged = done(&value, &error);
    Integral {
        value,
        error,
        panels: panels.len(),
        converged,
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    kernel: Option<Oscillation>,
    spec: &QuadratureSpec,
) -> ScalarIntegral
where
    F: Fn(f64) -> f64,
{
    integrate(|x| [f(x)], a, b, breakpoints, kernel, spec)
}

fn panel_edges(a: f64, b: f64, breakpoints: &[f64], kernel: Option<Oscillation>) -> Vec<f64> {
    let mut edges = vec![a, b];
    edges.extend(breakpoints.iter().copied().filter(|x| *x > a && *x < b));
    if let Some(osc) = kernel {
        if osc.frequency > 0.0 && osc.frequency.is_finite() {
            let h = osc.spacing();
            let k_lo = ((a - osc.center) / h).ceil() as i64;
            let k_hi = ((b - osc.center) / h).floor() as i64;
            for k in k_lo..=k_hi {
                if keep_zero(k) {
                    let x = osc.center + k as f64 * h;
                    if x > a && x < b {
                        edges.push(x);
                    }
                }
            }
        }
    }
    edges.sort_by(f64::total_cmp);
    let width = b - a;
    edges.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * width);
    edges
}

fn keep_zero(k: i64) -> bool {
    let m = k.abs();
    if m <= DENSE_ZEROS {
        return true;
    }
    let stride = (m / DENSE_ZEROS) as u64;
    let stride = 1i64 << (63 - stride.leading_zeros());
    m % stride == 0
}

#[derive(Debug, Clone, Copy)]
struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
}

impl<const N: usize> Panel<N> {
    fn new<F: Fn(f64) -> [f64; N]>(f: &F, a: f64, b: f64) -> Self {
        let (value, error) = gauss_kronrod21(f, a, b);
        Self { a, b, value, error }
    }

    fn priority(&self, tol: &[f64; N]) -> f64 {
        self.error
            .iter()
            .zip(tol)
            .fold(0.0, |p, (e, t)| p.max(e / t))
    }
}

#[derive(Debug, Clone, Copy)]
struct Ranked {
    priority: f64,
    position: f64,
    index: usize,
}

impl Ranked {
    fn new(priority: f64, position: f64, index: usize) -> Self {
        Self {
            priority,
            position,
            index,
        }
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.position.total_cmp(&self.position))
    }
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208686260206,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// 10-point Gauss weights for XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

fn gauss_kronrod21<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: &F,
    a: f64,
    b: f64,
) -> ([f64; N], [f64; N]) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = [0.0; N];
    let mut res_g = [0.0; N];
    let mut res_abs = [0.0; N];
    let mut fv1 = [[0.0; N]; 10];
    let mut fv2 = [[0.0; N]; 10];
    for k in 0..N {
        res_k[k] = WGK[10] * fc[k];
        res_abs[k] = (WGK[10] * fc[k]).abs();
    }
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for k in 0..N {
            res_k[k] += WGK[j] * (f1[k] + f2[k]);
            res_abs[k] += WGK[j] * (f1[k].abs() + f2[k].abs());
            if j % 2 == 1 {
                res_g[k] += WG[j / 2] * (f1[k] + f2[k]);
            }
        }
        fv1[j] = f1;
        fv2[j] = f2;
    }
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for k in 0..N {
        let mean = 0.5 * res_k[k];
        let mut res_asc = WGK[10] * (fc[k] - mean).abs();
        for j in 0..10 {
            res_asc += WGK[j] * ((fv1[j][k] - mean).abs() + (fv2[j][k] - mean).abs());
        }
        res_asc *= half.abs();
        let res_abs_k = res_abs[k] * half.abs();
        value[k] = res_k[k] * half;
        let mut err = ((res_k[k] - res_g[k]) * half).abs();
        if res_asc != 0.0 && err != 0.0 {
            err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
        }
        if res_abs_k > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * res_abs_k);
        }
        error[k] = err;
    }
    (value, error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrand() {
        let r = integrate_scalar(|_| 1.0, 0.0, 1.0, &[], None, &QuadratureSpec::default());
        assert!((r.scalar() - 1.0).abs() < 1e-15);
        assert!(r.converged);
    }

    #[test]
    fn empty_interval_is_zero() {
        let r = integrate_scalar(|x| x, 1.0, 1.0, &[], None, &QuadratureSpec::default());
        assert_eq!(r.scalar(), 0.0);
        assert!(r.converged);
    }

    #[test]
    fn polynomial_and_exponential() {
        let spec = QuadratureSpec::default();
        let r = integrate_scalar(|x| x.powi(5), 0.0, 2.0, &[], None, &spec);
        assert!((r.scalar() - 64.0 / 6.0).abs() < 1e-12);
        let r = integrate_scalar(|x| (-x).exp(), 0.0, 40.0, &[], None, &spec);
        assert!((r.scalar() - (1.0 - (-40.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let spec = QuadratureSpec::default();
        let r = integrate_scalar(|x| 1.0 / x.sqrt(), 0.0, 1.0, &[], None, &spec);
        assert!((r.scalar() - 2.0).abs() < 1e-7, "{r:?}");
    }

    #[test]
    fn vector_components_share_panels() {
        let spec = QuadratureSpec::default();
        let r = integrate(
            |x| [x.sin(), x.cos()],
            0.0,
            std::f64::consts::PI,
            &[],
            None,
            &spec,
        );
        assert!((r.value[0] - 2.0).abs() < 1e-13);
        assert!(r.value[1].abs() < 1e-12);
    }

    #[test]
    fn kernel_zeros_become_edges() {
        let osc = Oscillation::sinc(1.0, 10.0);
        let edges = panel_edges(0.0, 3.0, &[], Some(osc));
        let h = std::f64::consts::PI / 10.0;
        for e in &edges[1..edges.len() - 1] {
            let k = (e - 1.0) / h;
            assert!((k - k.round()).abs() < 1e-9);
        }
        assert_eq!(edges.len(), 2 + ((3.0 / h) as usize) + 1);
    }

    #[test]
    fn stride_thins_far_zeros() {
        assert!(keep_zero(3));
        assert!(keep_zero(-1024));
        assert!(keep_zero(2048));
        assert!(!keep_zero(2049));
        assert!(keep_zero(4100));
        assert!(!keep_zero(4102));
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let spec = QuadratureSpec {
            rel_tol: 1e-14,
            abs_tol: 0.0,
            max_panels: 4,
        };
        let r = integrate_scalar(|x| (50.0 * x).sin().abs(), 0.0, 10.0, &[], None, &spec);
        assert!(!r.converged);
        assert!(r.scalar().is_finite());
    }
}
