//! Measurement-modified factor, cooling domain and classification checks.

mod common;

use common::*;
use zenocool_core::analysis::*;
use zenocool_core::kernels::filter_function;
use zenocool_core::quadrature::{integrate_scalar, Oscillation};
use zenocool_core::{QuadratureSpec, SpectralModel, TabulatedSpectrum, ZenoClass};

#[test]
fn numerator_is_the_filtered_integral() {
    let spec = QuadratureSpec::default();
    let fine = QuadratureSpec::default().with_rel_tol(1e-12);
    for (beta, tau) in [(2.0, 2.5), (0.5, 8.0), (4.0, 1.0)] {
        let b = bath(beta);
        let m = m_factor_exact(&fig2(), &b, tau, &spec).unwrap();
        let f = |w: f64| {
            let (r, cr) = filter_function(beta, &b, tau, w).unwrap();
            (r + cr) * FIG2.value(w)
        };
        let osc = Some(Oscillation::sinc_squared(1.0, tau));
        let direct = integrate_scalar(f, 1e-300, 1.0, &[], osc, &fine).scalar()
            + integrate_scalar(f, 1.0, FIG2.end(), &[1.5], osc, &fine).scalar();
        assert!(
            rel(m.numerator, direct) < 1e-6,
            "{} vs {direct}",
            m.numerator
        );
        let j = m.cumulative;
        assert!(rel(m.steady_population(&b), j.j_plus() / j.j_total()) < 1e-10);
    }
}

#[test]
fn fig2_interval_cools_and_long_intervals_do_not_matter() {
    let spec = QuadratureSpec::default();
    let b = bath(2.0);
    assert!(m_factor_exact(&fig2(), &b, 2.5, &spec).unwrap().value < 0.0);
    assert!(
        m_factor_exact(&fig2(), &b, 500.0, &spec)
            .unwrap()
            .value
            .abs()
            < 0.02
    );
    let debye = SpectralModel::super_ohmic(0.01, 3.0, 2.0).unwrap();
    for model in [fig2(), debye] {
        assert!(
            m_factor_exact(&model, &b, 100.0, &spec)
                .unwrap()
                .value
                .abs()
                < 0.05
        );
    }
}

#[test]
fn approximation_follows_exact_curve() {
    let spec = QuadratureSpec::default();
    let b = bath(2.0);
    let taus: Vec<f64> = (0..=200).map(|k| 2.0 + 0.05 * k as f64).collect();
    let (mut worst, mut peak) = (0.0f64, 0.0f64);
    for &t in &taus {
        let e = m_factor_exact(&fig2(), &b, t, &spec).unwrap().value;
        let a = m_factor_approx(&fig2(), &b, t, &spec).unwrap().value;
        worst = worst.max((a - e).abs());
        peak = peak.max(e.abs());
    }
    assert!(worst <= 0.5 * peak, "{worst} vs {peak}");
}

#[test]
fn approximation_shares_the_sign_of_the_debye_minimum() {
    let spec = QuadratureSpec::default();
    let b = bath(2.0);
    let debye = SpectralModel::super_ohmic(0.01, 3.0, 2.0).unwrap();
    let taus: Vec<f64> = (1..=200).map(|k| 0.1 * k as f64).collect();
    let min = |f: &dyn Fn(f64) -> f64| taus.iter().map(|&t| f(t)).fold(f64::INFINITY, f64::min);
    let exact = min(&|t| m_factor_exact(&debye, &b, t, &spec).unwrap().value);
    let approx = min(&|t| m_factor_approx(&debye, &b, t, &spec).unwrap().value);
    assert_eq!(exact < 0.0, approx < 0.0, "{exact} vs {approx}");
}

#[test]
fn smoothed_curve_is_the_mean_of_the_approximation() {
    let spec = QuadratureSpec::default();
    let b = bath(2.0);
    let tau = 10.0;
    let n = 400;
    let mean = (0..n)
        .map(|k| {
            let t = tau - std::f64::consts::PI
                + 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
            m_factor_approx(&fig2(), &b, t, &spec).unwrap().value
        })
        .sum::<f64>()
        / n as f64;
    let smooth = m_factor_smoothed(&fig2(), &b, tau).unwrap();
    assert!(
        (smooth.value - mean).abs() < 0.3 * mean.abs(),
        "{} vs {mean}",
        smooth.value
    );
    assert!(smooth.value < 0.0);
    let trend: Vec<f64> = (0..=70)
        .map(|k| {
            m_factor_smoothed(&fig2(), &b, 5.0 + 0.5 * k as f64)
                .unwrap()
                .value
        })
        .collect();
    assert!(trend.windows(2).all(|w| w[1] > w[0]));
    assert!(-smooth.resonant > smooth.counter_rotating);
}

#[test]
fn reported_edges_are_certified_roots() {
    let search = DomainSearch {
        all_lobes: true,
        ..DomainSearch::default()
    };
    for beta in [0.5, 2.0, 4.0] {
        let b = bath(beta);
        for tau in [1.0, 2.0, 5.0, 20.0] {
            let d = cooling_domain(&b, tau, &search).unwrap();
            for lobe in &d.lobes {
                assert!(lobe.lower.omega < lobe.upper.omega);
                for edge in [lobe.lower, lobe.upper] {
                    if !edge.certified {
                        continue;
                    }
                    assert!(edge.residual.abs() <= ROOT_TOLERANCE);
                    let f = total_filter(&b, tau, edge.omega).unwrap();
                    assert!(f.abs() <= ROOT_TOLERANCE);
                    let h = 1e-6;
                    let (l, r) = (
                        total_filter(&b, tau, edge.omega - h).unwrap(),
                        total_filter(&b, tau, edge.omega + h).unwrap(),
                    );
                    assert!(l * r <= 0.0, "beta={beta} tau={tau} at {}", edge.omega);
                }
                let mid = 0.5 * (lobe.lower.omega + lobe.upper.omega);
                assert!(total_filter(&b, tau, mid).unwrap() < 0.0 || lobe.f_min < 0.0);
            }
        }
    }
}

#[test]
fn short_interval_lobe_sits_near_counter_rotating_zero() {
    let b = bath(2.0);
    let d = cooling_domain(&b, 2.0, &DomainSearch::default()).unwrap();
    let lobe = d.main.unwrap();
    let zero = cr_zero_curve(2.0, &b).0;
    assert!(lobe.lower.omega > 1.0);
    assert!(lobe.lower.omega <= zero && zero <= lobe.upper.omega);
}

#[test]
fn long_interval_upper_edge() {
    let b = bath(2.0);
    let search = DomainSearch {
        mode: DomainMode::PeriodAveraged,
        ..DomainSearch::default()
    };
    let d = cooling_domain(&b, 50.0, &search).unwrap();
    let (w1, w2) = (d.omega1().unwrap(), d.omega2().unwrap());
    assert!(w1 < w2);
    assert!((w1 - 1.0).abs() < 0.1);
    assert!(rel(w2, w2_estimate(&b)) < 0.1, "{w2}");
}

#[test]
fn criterion_examples() {
    let b = bath(2.0);
    let c = cooling_criterion(&fig2(), &b).unwrap();
    assert!((c.lhs - 4.2).abs() < 1e-12 && c.rhs == 1.0 && c.pass);
    for s in [1.0, 2.5, 3.0] {
        let model = SpectralModel::super_ohmic(0.02, s, 3.0).unwrap();
        for beta in [1.0, 4.0, 7.0] {
            let c = cooling_criterion(&model, &bath(beta)).unwrap();
            assert_eq!(c.pass, s > beta / 2.0);
            assert_eq!(c.beta_max, Some(2.0 * s));
        }
    }
    let grid: Vec<f64> = (0..=2000).map(|k| 0.01 + 0.005 * k as f64).collect();
    let samples = grid.iter().map(|w| 1e-3 / w).collect();
    let one_over_f = SpectralModel::tabulated(TabulatedSpectrum::new(grid, samples, None).unwrap());
    for beta in [0.1, 1.0, 5.0] {
        let c = cooling_criterion(&one_over_f, &bath(beta)).unwrap();
        assert!((c.lhs + 1.0).abs() < 1e-3);
        assert!(!c.pass);
    }
}

#[test]
fn zeno_classification() {
    let spec = QuadratureSpec::default();
    let z = classify_zeno(&fig2(), &bath(2.0), 500.0, &spec).unwrap();
    assert!((z.ratio - 1.0).abs() < 0.02);
    let mut found = false;
    'scan: for s in [2.0, 3.0] {
        for wc in [3.0, 4.0] {
            let model = SpectralModel::super_ohmic(0.01, s, wc).unwrap();
            for k in 1..=100 {
                let tau = 0.1 * k as f64;
                let z = classify_zeno(&model, &bath(2.0), tau, &spec).unwrap();
                let m = m_factor_exact(&model, &bath(2.0), tau, &spec).unwrap();
                if z.class == ZenoClass::AntiZeno && m.value > 0.0 {
                    found = true;
                    break 'scan;
                }
            }
        }
    }
    assert!(found);
}

#[test]
fn optimizer_is_deterministic() {
    let spec = QuadratureSpec::default();
    let search = TauSearch::new(0.1, 2.0 * std::f64::consts::PI);
    let a = optimize_tau(&fig2(), &bath(2.0), &search, &spec).unwrap();
    let b = optimize_tau(&fig2(), &bath(2.0), &search, &spec).unwrap();
    assert_eq!(a, b);
    assert!(a.cooling && a.converged);
    let reference = 2.0 * std::f64::consts::PI / 2.5;
    assert!(rel(a.tau_min, reference) < 0.2);
}

#[test]
fn report_is_consistent() {
    let grid: Vec<f64> = (1..=80).map(|k| 0.25 * k as f64).collect();
    let r = CoolingReport::build(
        &fig2(),
        &bath(2.0),
        &grid,
        2.0,
        &DomainSearch::default(),
        &QuadratureSpec::default(),
    )
    .unwrap();
    assert_eq!(r.m_exact.len(), grid.len());
    assert!(r.m_min <= r.m_exact.iter().copied().fold(f64::INFINITY, f64::min));
    assert!(r.omega1.unwrap() < r.omega2.unwrap());
    assert!(r.criterion_pass);
    let json = serde_json::to_value(&r).unwrap();
    for key in [
        "tau_grid",
        "m_exact",
        "m_approx",
        "m_smoothed",
        "tau_min",
        "m_min",
        "omega1",
        "omega2",
        "zeno_class",
    ] {
        assert!(json.get(key).is_some(), "{key}");
    }
}
