//! Library results against brute-force trapezoid oracles and closed forms.

mod common;

use common::*;
use zenocool_core::kernels::{cumulative_j, golden_rule_rate, transition_rates};
use zenocool_core::quadrature::{integrate_scalar, Oscillation};
use zenocool_core::{QuadratureSpec, SpectralModel};

const MATRIX: [Sdf; 3] = [
    FIG2,
    Sdf::Power {
        alpha: 0.01,
        s: 3.0,
        omega_c: 2.0,
    },
    Sdf::Power {
        alpha: 0.01,
        s: 1.0,
        omega_c: 4.0,
    },
];

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs() + 1e-13
}

#[test]
fn sinc_squared_against_exponential_weight() {
    let tau = 10.0;
    let f = |w: f64| sinc(0.5 * (w - 1.0) * tau).powi(2) * (-w).exp();
    let oracle = trapezoid(f, 0.0, 60.0, 10_000_000);
    let spec = QuadratureSpec::default().with_rel_tol(1e-10);
    let got = integrate_scalar(
        f,
        0.0,
        60.0,
        &[],
        Some(Oscillation::sinc_squared(1.0, tau)),
        &spec,
    );
    assert!(got.converged);
    assert!(
        rel(got.scalar(), oracle) < 1e-6,
        "{} vs {oracle}",
        got.scalar()
    );
}

#[test]
fn constant_integrand() {
    let got = integrate_scalar(|_| 1.0, 0.0, 1.0, &[], None, &QuadratureSpec::default());
    assert!((got.scalar() - 1.0).abs() < 1e-15);
}

#[test]
fn cumulative_j_matrix() {
    let spec = QuadratureSpec::default();
    for sdf in MATRIX {
        let model = sdf.model();
        for beta in [0.5, 2.0] {
            for tau in [0.5, 3.0, 10.0] {
                let j = cumulative_j(&model, &bath(beta), tau, &spec).unwrap();
                let got = [j.j_plus_r, j.j_minus_r, j.j_plus_cr, j.j_minus_cr];
                let want = j_oracle(&sdf, beta, tau, 2_000_000);
                for (g, w) in got.iter().zip(want) {
                    assert!(
                        close(*g, w, 1e-5),
                        "{sdf:?} beta={beta} tau={tau}: {g} vs {w}"
                    );
                }
            }
        }
    }
}

#[test]
fn transition_rate_matrix() {
    let spec = QuadratureSpec::default();
    for sdf in MATRIX {
        let model = sdf.model();
        for beta in [0.5, 2.0] {
            for t in [0.5, 3.0, 10.0] {
                let got = transition_rates(&model, &bath(beta), t, &spec)
                    .unwrap()
                    .to_array();
                let want = rates_oracle(&sdf, beta, t, 2_000_000);
                for (k, (g, w)) in got.iter().zip(want).enumerate() {
                    assert!(
                        close(*g, w, 1e-5),
                        "{sdf:?} beta={beta} t={t} #{k}: {g} vs {w}"
                    );
                }
            }
        }
    }
}

#[test]
fn lorentzian_tail_integral() {
    let model = fig2();
    let tail = model
        .tail_integral(2.0, &QuadratureSpec::default())
        .unwrap();
    let oracle = trapezoid(|w| FIG2.value(w) / (w * w), 2.0, FIG2.end(), 1_000_000);
    assert!(rel(tail.value, oracle) < 1e-8, "{} vs {oracle}", tail.value);
    // dropped remainder, integrated in log ω out to 10⁷
    let rest = trapezoid(
        |u| FIG2.value(u.exp()) / u.exp(),
        FIG2.end().ln(),
        1e7f64.ln(),
        200_000,
    );
    assert!(
        rest > 0.0 && rest <= tail.truncation_bound,
        "{rest} vs {}",
        tail.truncation_bound
    );
}

#[test]
fn power_law_tail_integral() {
    let model = SpectralModel::super_ohmic(0.01, 3.0, 3.0).unwrap();
    let tail = model
        .tail_integral(2.0, &QuadratureSpec::default())
        .unwrap();
    let oracle = trapezoid(|w| 0.01 / 9.0 * w, 2.0, 3.0, 1_000_000);
    assert!(rel(tail.value, oracle) < 1e-10);
    assert!(rel(tail.value, 0.01 * 5.0 / 18.0) < 1e-12);
    let empty = SpectralModel::super_ohmic(0.01, 3.0, 2.0).unwrap();
    assert_eq!(
        empty
            .tail_integral(2.0, &QuadratureSpec::default())
            .unwrap()
            .value,
        0.0
    );
}

#[test]
fn finite_difference_of_j_is_the_rate() {
    let spec = QuadratureSpec::default().with_rel_tol(1e-12);
    let h = 1e-3;
    for sdf in MATRIX {
        let model = sdf.model();
        for tau in [1.0, 3.0, 7.5] {
            let up = cumulative_j(&model, &bath(2.0), tau + h, &spec).unwrap();
            let dn = cumulative_j(&model, &bath(2.0), tau - h, &spec).unwrap();
            let r = transition_rates(&model, &bath(2.0), tau, &spec).unwrap();
            let pairs = [
                (up.j_plus_r - dn.j_plus_r, r.gamma_plus_r),
                (up.j_minus_r - dn.j_minus_r, r.gamma_minus_r),
                (up.j_plus_cr - dn.j_plus_cr, r.gamma_plus_cr),
                (up.j_minus_cr - dn.j_minus_cr, r.gamma_minus_cr),
            ];
            for (k, (dj, gamma)) in pairs.into_iter().enumerate() {
                let fd = dj / (2.0 * h);
                assert!(
                    rel(fd, gamma) < 1e-4,
                    "{sdf:?} tau={tau} #{k}: {fd} vs {gamma}"
                );
            }
        }
    }
}

#[test]
fn long_interval_limits() {
    let spec = QuadratureSpec::default();
    let b = bath(2.0);
    let j = cumulative_j(&fig2(), &b, 500.0, &spec).unwrap();
    let eq = 1.0 / (2f64.exp() + 1.0);
    assert!(rel(j.steady_population(), eq) < 1e-2);
    let gamma0 = golden_rule_rate(&fig2(), &b).unwrap();
    assert!(rel(j.effective_rate(), gamma0) < 2e-2);
    let r = transition_rates(&fig2(), &b, 200.0, &spec).unwrap();
    let n1 = 1.0 / (2f64.exp() - 1.0);
    let limit = 2.0 * std::f64::consts::PI * (n1 + 1.0) * 0.002;
    assert!(
        rel(r.gamma_minus_r, limit) < 1e-2,
        "{} vs {limit}",
        r.gamma_minus_r
    );
}
