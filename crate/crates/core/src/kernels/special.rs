//! Kernel functions with their removable singularities handled.

/// Below this |x| the kernels switch to their Taylor series.
pub const SERIES_SWITCH: f64 = 1e-4;

/// Unnormalized `sin(x)/x`, equal to 1 at 0.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < SERIES_SWITCH {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `sinc(x)²`.
pub fn sinc_squared(x: f64) -> f64 {
    let s = sinc(x);
    s * s
}

/// `(1 − cos x)/x`, written as `2 sin²(x/2)/x` to avoid cancellation.
pub fn one_minus_cos_over(x: f64) -> f64 {
    if x.abs() < SERIES_SWITCH {
        0.5 * x - x * x * x / 24.0
    } else {
        let s = (0.5 * x).sin();
        2.0 * s * s / x
    }
}

/// `ln(e^x − 1)` for x > 0 without overflow.
pub fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}
