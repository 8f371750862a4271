//! The six pipelines. Each fills an [`Emitter`] and returns the
//! diagnostics block.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};
use zenocool_core::analysis::{
    classify_zeno, cooling_criterion, cooling_domain, cr_zero_curve, m_factor_approx,
    m_factor_exact, m_factor_smoothed, optimize_tau, w2_estimate, DomainEdge,
};
use zenocool_core::dynamics::{
    adiabatic_population, evolve_free, evolve_measured, extrapolated_plateau, markovian_population,
    measured_envelope,
};
use zenocool_core::kernels::{cumulative_j, golden_rule_rate, transition_rates};
use zenocool_core::{BathParams, CoolingReport, QubitState, RateSet, SpectralModel, ZenoClass};

use crate::config::{RunConfig, SweepParameter};
use crate::output::{cell_text, flag, num, opt, Emitter};
use crate::svg::{Chart, Series, Style};
use crate::{CliError, Command};

/// Machine-readable outcome of one command; also written as
/// `diagnostics.json`.
#[derive(Debug, Serialize)]
pub struct Diagnostics {
    pub command: &'static str,
    pub flagged: bool,
    pub flags: Vec<String>,
    pub files: Vec<String>,
    pub summary: Map<String, Value>,
}

struct Run<'a> {
    cfg: &'a RunConfig,
    out: Emitter,
    flags: Vec<String>,
    summary: Map<String, Value>,
}

impl Run<'_> {
    fn flag(&mut self, msg: String) {
        self.flags.push(msg);
    }

    fn note(&mut self, key: &str, value: Value) {
        self.summary.insert(key.to_string(), value);
    }
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<Diagnostics, CliError> {
    let mut run = Run {
        cfg,
        out: Emitter::new(cfg.output.dir.clone(), cfg.output.formats.clone())?,
        flags: Vec::new(),
        summary: Map::new(),
    };
    match command {
        Command::Rates => rates(&mut run)?,
        Command::Evolve => evolve(&mut run)?,
        Command::Mfactor => mfactor(&mut run)?,
        Command::Cooldomain => cooldomain(&mut run)?,
        Command::Optimize => optimize(&mut run)?,
        Command::Classify => classify(&mut run)?,
    }
    let mut diag = Diagnostics {
        command: command.name(),
        flagged: !run.flags.is_empty(),
        flags: run.flags,
        files: run.out.files().to_vec(),
        summary: run.summary,
    };
    diag.files.push("diagnostics.json".into());
    run.out.diagnostics(&diag)?;
    Ok(diag)
}

fn err_text<T>(r: &Result<T, zenocool_core::Error>) -> String {
    r.as_ref()
        .err()
        .map(|e| cell_text(&e.to_string()))
        .unwrap_or_default()
}

fn rates(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let (model, bath, spec) = (cfg.spectral_model()?, cfg.bath_params()?, cfg.quadrature());
    let ts = cfg.t_values();
    let results: Vec<_> = ts
        .par_iter()
        .map(|&t| transition_rates(&model, &bath, t, &spec))
        .collect();

    let mut header = vec!["t"];
    header.extend(RateSet::FIELD_NAMES);
    header.extend(["max_error", "converged", "error"]);
    let mut rows = Vec::with_capacity(ts.len());
    let mut unconverged = 0;
    let mut failed = 0;
    for (&t, r) in ts.iter().zip(&results) {
        let mut row = vec![num(t)];
        match r {
            Ok(rs) => {
                row.extend(rs.to_array().iter().map(|&v| num(v)));
                row.push(num(rs.diagnostics.max_error));
                row.push(flag(rs.diagnostics.converged));
                unconverged += usize::from(!rs.diagnostics.converged);
            }
            Err(_) => {
                row.extend(std::iter::repeat_n(String::new(), 9));
                row.push(flag(false));
                failed += 1;
            }
        }
        row.push(err_text(r));
        rows.push(row);
    }
    if unconverged > 0 {
        run.flag(format!(
            "{unconverged} time points with unconverged quadrature"
        ));
    }
    if failed > 0 {
        run.flag(format!("{failed} time points failed"));
    }
    run.out.csv("rates.csv", &header, &rows)?;

    let ok: Vec<(f64, [f64; 8])> = ts
        .iter()
        .zip(&results)
        .filter_map(|(&t, r)| r.as_ref().ok().map(|rs| (t, rs.to_array())))
        .collect();
    let mut chart = Chart::new("Decay rates", "t", "rate");
    for (i, name) in RateSet::FIELD_NAMES.iter().enumerate().take(4) {
        chart = chart.with(Series::new(
            name,
            ok.iter().map(|(t, v)| (*t, v[i])).collect(),
            Style::Line,
        ));
    }
    run.out.svg("rates.svg", &chart)?;
    run.note("points", json!(ts.len()));
    if let Some((t, v)) = ok.last() {
        run.note("t_last", json!(t));
        let last: Map<String, Value> = RateSet::FIELD_NAMES
            .iter()
            .zip(v)
            .map(|(k, x)| (k.to_string(), json!(x)))
            .collect();
        run.note("rates_at_t_last", Value::Object(last));
    }
    Ok(())
}

fn evolve(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let (model, bath, spec) = (cfg.spectral_model()?, cfg.bath_params()?, cfg.quadrature());
    let protocol = cfg.protocol()?;
    let rho0 = cfg.protocol.rho_ee0;
    let state0 = QubitState::diagonal(rho0);
    let horizon = cfg.free_horizon();

    let free = evolve_free(&state0, &model, &bath, horizon, &protocol)?;
    let measured = evolve_measured(&state0, &model, &bath, &protocol)?;
    for (name, traj) in [("free", &free), ("measured", &measured)] {
        let d = &traj.diagnostics;
        if d.positivity_violated {
            run.flag(format!(
                "{name} trajectory violates positivity by {:e}",
                d.worst_positivity_excess
            ));
        }
        if d.steps.failed {
            run.flag(format!("{name} trajectory: integrator failed"));
        }
        if !d.kernels.converged {
            run.flag(format!("{name} trajectory: unconverged rate quadrature"));
        }
    }
    run.out.csv_with("evolve_free.csv", |w| free.write_csv(w))?;
    run.out
        .csv_with("evolve_measured.csv", |w| measured.write_csv(w))?;

    let cum = cumulative_j(&model, &bath, protocol.tau, &spec)?;
    if !cum.diagnostics.converged {
        run.flag("J integrals at tau did not converge".into());
    }
    let times = free.times();
    let adiabatic: Vec<Option<f64>> = times
        .par_iter()
        .map(|&t| {
            if t > cfg.protocol.adiabatic_until {
                None
            } else if t == 0.0 {
                Some(rho0)
            } else {
                cumulative_j(&model, &bath, t, &spec)
                    .and_then(|c| adiabatic_population(rho0, &c))
                    .ok()
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(times.len());
    let mut markov = Vec::with_capacity(times.len());
    let mut envelope = Vec::with_capacity(times.len());
    for (&t, a) in times.iter().zip(&adiabatic) {
        let m = markovian_population(rho0, &model, &bath, t)?;
        let e = measured_envelope(rho0, &cum, t);
        markov.push((t, m));
        envelope.push((t, e));
        rows.push(vec![num(t), num(m), num(e), opt(*a)]);
    }
    run.out.csv(
        "evolve_envelopes.csv",
        &["t", "markovian", "measured_envelope", "adiabatic"],
        &rows,
    )?;
    let to_points =
        |tr: &zenocool_core::Trajectory| tr.samples.iter().map(|s| (s.t, s.state.rho_ee)).collect();
    let chart = Chart::new("Excited-state population", "t", "rho_ee")
        .with(Series::new("free (TCL2)", to_points(&free), Style::Line))
        .with(Series::new(
            "measured (TCL2)",
            to_points(&measured),
            Style::Line,
        ))
        .with(Series::new("Markovian", markov, Style::Dashed))
        .with(Series::new("measured envelope", envelope, Style::Dashed))
        .with(Series::new(
            "adiabatic",
            times
                .iter()
                .zip(&adiabatic)
                .filter_map(|(&t, a)| a.map(|v| (t, v)))
                .collect(),
            Style::Markers,
        ));
    run.out.svg("evolve.svg", &chart)?;

    run.note("tau", json!(protocol.tau));
    run.note("n_meas", json!(protocol.n_meas));
    run.note("free_horizon", json!(horizon));
    run.note("free_terminal", json!(free.last().state.rho_ee));
    run.note("measured_terminal", json!(measured.last().state.rho_ee));
    run.note(
        "extrapolated_plateau",
        json!(extrapolated_plateau(&measured)),
    );
    run.note("steady_population", json!(cum.steady_population()));
    run.note(
        "equilibrium_population",
        json!(bath.equilibrium_population()),
    );
    run.note("golden_rule_rate", json!(golden_rule_rate(&model, &bath)?));
    run.note(
        "worst_positivity_excess",
        json!(free
            .diagnostics
            .worst_positivity_excess
            .max(measured.diagnostics.worst_positivity_excess)),
    );
    Ok(())
}

fn mfactor(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let (model, bath, spec) = (cfg.spectral_model()?, cfg.bath_params()?, cfg.quadrature());
    let taus = cfg.tau_values();
    let rows: Vec<_> = taus
        .par_iter()
        .map(|&tau| {
            (
                m_factor_exact(&model, &bath, tau, &spec),
                m_factor_approx(&model, &bath, tau, &spec),
                m_factor_smoothed(&model, &bath, tau).ok().map(|s| s.value),
            )
        })
        .collect();

    let mut table = Vec::with_capacity(taus.len());
    let mut bad = 0;
    let mut exact_pts = Vec::new();
    let mut approx_pts = Vec::new();
    let mut smooth_pts = Vec::new();
    for (&tau, (e, a, s)) in taus.iter().zip(&rows) {
        let ev = e.as_ref().ok().map(|m| m.value);
        let av = a.as_ref().ok().map(|m| m.value);
        let converged =
            matches!((e, a), (Ok(e), Ok(a)) if e.diagnostics.converged && a.diagnostics.converged);
        bad += usize::from(!converged);
        let error = [err_text(e), err_text(a)]
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join("; ");
        table.push(vec![
            num(tau),
            opt(ev),
            opt(av),
            opt(*s),
            flag(converged),
            error,
        ]);
        exact_pts.push((tau, ev.unwrap_or(f64::NAN)));
        approx_pts.push((tau, av.unwrap_or(f64::NAN)));
        smooth_pts.push((tau, s.unwrap_or(f64::NAN)));
    }
    if bad > 0 {
        run.flag(format!("{bad} tau points unconverged or failed"));
    }
    run.out.csv(
        "mfactor.csv",
        &[
            "tau",
            "m_exact",
            "m_approx",
            "m_smoothed",
            "converged",
            "error",
        ],
        &table,
    )?;
    let chart = Chart::new("Measurement factor", "tau", "M")
        .with(Series::new("exact", exact_pts, Style::Line))
        .with(Series::new("approximate", approx_pts, Style::Dashed))
        .with(Series::new("smoothed", smooth_pts, Style::Dashed));
    run.out.svg("mfactor.svg", &chart)?;

    if run.out.wants(crate::config::Format::Json) {
        let report = CoolingReport::build(
            &model,
            &bath,
            &taus,
            cfg.protocol.tau,
            &cfg.domain_search(),
            &spec,
        )?;
        if !report.converged {
            run.flag("cooling report has unconverged parts".into());
        }
        run.out.json("cooling_report.json", &report)?;
    }
    if let Some((i, (_, m))) = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.0.as_ref().ok().map(|m| (i, (taus[i], m.value))))
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
    {
        run.note("tau_min_on_grid", json!(taus[i]));
        run.note("m_min_on_grid", json!(m));
    }
    run.note("points", json!(taus.len()));

    if cfg.mfactor.insets {
        let base = &cfg.model;
        let beta_models: Vec<InsetPoint> = cfg
            .sweep
            .beta
            .iter()
            .map(|&b| {
                (
                    b,
                    BathParams::new(b, bath.omega_a)
                        .map(|bp| (model.clone(), bp))
                        .map_err(CliError::from),
                )
            })
            .collect();
        inset(run, "mfactor_beta", "beta", beta_models)?;
        let s_models = cfg
            .sweep
            .s
            .iter()
            .map(|&s| {
                (
                    s,
                    SpectralModel::super_ohmic(base.alpha, s, base.omega_c)
                        .map(|m| (m, bath))
                        .map_err(CliError::from),
                )
            })
            .collect();
        inset(run, "mfactor_s", "s", s_models)?;
    }
    Ok(())
}

/// One inset abscissa with the model and bath it stands for.
type InsetPoint = (f64, Result<(SpectralModel, BathParams), CliError>);

/// M_min against one parameter, for the mfactor insets.
fn inset(
    run: &mut Run,
    stem: &str,
    name: &str,
    points: Vec<InsetPoint>,
) -> Result<(), CliError> {
    let search = run.cfg.tau_search();
    let spec = run.cfg.quadrature();
    let results: Vec<(f64, Result<_, String>)> = points
        .into_iter()
        .map(|(v, mb)| {
            let r = mb
                .map_err(|e| e.to_string())
                .and_then(|(m, b)| optimize_tau(&m, &b, &search, &spec).map_err(|e| e.to_string()));
            (v, r)
        })
        .collect();
    let mut rows = Vec::new();
    let mut pts = Vec::new();
    for (v, r) in &results {
        match r {
            Ok(o) => {
                if !o.converged {
                    run.flag(format!("{stem}: optimiser unconverged at {name} = {v}"));
                }
                rows.push(vec![
                    num(*v),
                    num(o.tau_min),
                    num(o.m_min),
                    flag(o.cooling),
                    flag(o.converged),
                    String::new(),
                ]);
                pts.push((*v, o.m_min));
            }
            Err(e) => {
                run.flag(format!("{stem}: {name} = {v} failed"));
                rows.push(vec![
                    num(*v),
                    String::new(),
                    String::new(),
                    String::new(),
                    flag(false),
                    cell_text(e),
                ]);
            }
        }
    }
    run.out.csv(
        &format!("{stem}.csv"),
        &[name, "tau_min", "m_min", "cooling", "converged", "error"],
        &rows,
    )?;
    let chart = Chart::new(&format!("Minimum of M against {name}"), name, "M_min")
        .with(Series::new("M_min", pts, Style::Line));
    run.out.svg(&format!("{stem}.svg"), &chart)
}

fn edge_cells(e: Option<&DomainEdge>, omega_max: f64) -> (String, String, bool) {
    match e {
        None => (String::new(), String::new(), false),
        Some(e) => {
            let at_window = !e.certified && (e.omega >= omega_max || e.omega <= omega_max * 1e-2);
            (num(e.omega), flag(e.certified), !e.certified && !at_window)
        }
    }
}

fn cooldomain(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let bath = cfg.bath_params()?;
    let search = cfg.domain_search();
    let taus = cfg.tau_values();
    let domains: Vec<_> = taus
        .iter()
        .map(|&tau| cooling_domain(&bath, tau, &search))
        .collect();
    let w2 = w2_estimate(&bath);
    let mut rows = Vec::new();
    let (mut unresolved, mut failed, mut empty_rows) = (0, 0, 0);
    let (mut p1, mut p2, mut pref) = (Vec::new(), Vec::new(), Vec::new());
    for (&tau, d) in taus.iter().zip(&domains) {
        let (reference, nonpositive) = cr_zero_curve(tau, &bath);
        let lobe = d.as_ref().ok().and_then(|d| d.main);
        let (w1, c1, u1) = edge_cells(lobe.as_ref().map(|l| &l.lower), search.omega_max);
        let (w2c, c2, u2) = edge_cells(lobe.as_ref().map(|l| &l.upper), search.omega_max);
        unresolved += usize::from(u1) + usize::from(u2);
        failed += usize::from(d.is_err());
        let empty = d.is_ok() && lobe.is_none();
        empty_rows += usize::from(empty);
        rows.push(vec![
            num(tau),
            w1,
            w2c,
            c1,
            c2,
            flag(empty),
            num(reference),
            flag(nonpositive),
            num(w2),
            err_text(d),
        ]);
        p1.push((tau, lobe.map_or(f64::NAN, |l| l.lower.omega)));
        p2.push((tau, lobe.map_or(f64::NAN, |l| l.upper.omega)));
        pref.push((tau, if nonpositive { f64::NAN } else { reference }));
    }
    if unresolved > 0 {
        run.flag(format!("{unresolved} domain edges could not be certified"));
    }
    if failed > 0 {
        run.flag(format!("{failed} tau points failed"));
    }
    run.out.csv(
        "cooldomain.csv",
        &[
            "tau",
            "omega1",
            "omega2",
            "omega1_certified",
            "omega2_certified",
            "empty",
            "reference",
            "reference_nonpositive",
            "w2_estimate",
            "error",
        ],
        &rows,
    )?;
    let (t0, t1) = (taus[0], *taus.last().expect("non-empty grid"));
    let chart = Chart::new("Cooling domain", "tau", "omega")
        .with(Series::new("omega1", p1, Style::Line))
        .with(Series::new("omega2", p2, Style::Line))
        .with(Series::new("2pi/tau - omega_a", pref, Style::Dashed))
        .with(Series::new(
            "omega2 estimate",
            vec![(t0, w2), (t1, w2)],
            Style::Dashed,
        ));
    run.out.svg("cooldomain.svg", &chart)?;
    run.note("points", json!(taus.len()));
    run.note("empty_rows", json!(empty_rows));
    run.note("w2_estimate", json!(w2));
    Ok(())
}

fn optimize(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let bath = cfg.bath_params()?;
    let spec = cfg.quadrature();
    let search = cfg.tau_search();
    let m = &cfg.model;
    let (name, values) = match cfg.sweep.parameter {
        SweepParameter::Omega0 => ("omega0", &cfg.sweep.omega0),
        SweepParameter::Beta => ("beta", &cfg.sweep.beta),
        SweepParameter::S => ("s", &cfg.sweep.s),
    };
    let base = cfg.spectral_model()?;
    let point = |v: f64| -> Result<(SpectralModel, BathParams), zenocool_core::Error> {
        Ok(match cfg.sweep.parameter {
            SweepParameter::Omega0 => (
                SpectralModel::modified_lorentzian(m.alpha, m.lambda, v)?,
                bath,
            ),
            SweepParameter::S => (SpectralModel::super_ohmic(m.alpha, v, m.omega_c)?, bath),
            SweepParameter::Beta => (base.clone(), BathParams::new(v, bath.omega_a)?),
        })
    };
    let results: Vec<_> = values
        .iter()
        .map(|&v| point(v).and_then(|(model, b)| optimize_tau(&model, &b, &search, &spec)))
        .collect();
    let mut rows = Vec::new();
    let (mut tau_pts, mut ref_pts) = (Vec::new(), Vec::new());
    let mut no_cooling = 0;
    for (&v, r) in values.iter().zip(&results) {
        let reference = match cfg.sweep.parameter {
            SweepParameter::Omega0 => Some(2.0 * std::f64::consts::PI / (v + bath.omega_a)),
            _ => None,
        };
        match r {
            Ok(o) => {
                if !o.converged {
                    run.flag(format!("optimiser unconverged at {name} = {v}"));
                }
                no_cooling += usize::from(!o.cooling);
                rows.push(vec![
                    num(v),
                    num(o.tau_min),
                    num(o.m_min),
                    flag(o.cooling),
                    opt(reference),
                    flag(o.converged),
                    String::new(),
                ]);
                tau_pts.push((v, o.tau_min));
            }
            Err(_) => {
                run.flag(format!("{name} = {v} failed"));
                rows.push(vec![
                    num(v),
                    String::new(),
                    String::new(),
                    String::new(),
                    opt(reference),
                    flag(false),
                    err_text(r),
                ]);
            }
        }
        if let Some(r) = reference {
            ref_pts.push((v, r));
        }
    }
    run.out.csv(
        "optimize.csv",
        &[
            name,
            "tau_min",
            "m_min",
            "cooling",
            "reference",
            "converged",
            "error",
        ],
        &rows,
    )?;
    let mut chart = Chart::new("Optimal measurement interval", name, "tau_min").with(Series::new(
        "tau_min",
        tau_pts,
        Style::Markers,
    ));
    if !ref_pts.is_empty() {
        chart = chart.with(Series::new("2pi/(omega0 + omega_a)", ref_pts, Style::Line));
    }
    run.out.svg("optimize.svg", &chart)?;
    run.note("parameter", json!(name));
    run.note("points", json!(values.len()));
    run.note("no_cooling_points", json!(no_cooling));
    Ok(())
}

#[derive(Serialize)]
struct Classification {
    tau: f64,
    criterion_lhs: f64,
    criterion_rhs: f64,
    criterion_pass: bool,
    beta_max: Option<f64>,
    zeno_class: ZenoClass,
    zeno_ratio: f64,
    effective_rate: f64,
    golden_rule_rate: f64,
    m_exact: f64,
    m_negative: bool,
    /// Anti-Zeno behaviour coincides with M < 0.
    consistent: bool,
}

fn classify(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let (model, bath, spec) = (cfg.spectral_model()?, cfg.bath_params()?, cfg.quadrature());
    let tau = cfg.protocol.tau;
    let crit = cooling_criterion(&model, &bath)?;
    let zeno = classify_zeno(&model, &bath, tau, &spec)?;
    let m = m_factor_exact(&model, &bath, tau, &spec)?;
    if !zeno.diagnostics.converged || !m.diagnostics.converged {
        run.flag("quadrature did not converge".into());
    }
    let c = Classification {
        tau,
        criterion_lhs: crit.lhs,
        criterion_rhs: crit.rhs,
        criterion_pass: crit.pass,
        beta_max: crit.beta_max,
        zeno_class: zeno.class,
        zeno_ratio: zeno.ratio,
        effective_rate: zeno.effective_rate,
        golden_rule_rate: zeno.golden_rule_rate,
        m_exact: m.value,
        m_negative: m.value < 0.0,
        consistent: (zeno.class == ZenoClass::AntiZeno) == (m.value < 0.0),
    };
    run.out.csv(
        "classify.csv",
        &[
            "tau",
            "criterion_lhs",
            "criterion_rhs",
            "criterion_pass",
            "beta_max",
            "zeno_class",
            "zeno_ratio",
            "m_exact",
            "consistent",
        ],
        &[vec![
            num(c.tau),
            num(c.criterion_lhs),
            num(c.criterion_rhs),
            flag(c.criterion_pass),
            opt(c.beta_max),
            c.zeno_class.to_string(),
            num(c.zeno_ratio),
            num(c.m_exact),
            flag(c.consistent),
        ]],
    )?;
    run.out.json("classify.json", &c)?;
    run.note("criterion_pass", json!(c.criterion_pass));
    run.note("zeno_class", json!(c.zeno_class));
    run.note("m_exact", json!(c.m_exact));
    run.note("consistent", json!(c.consistent));
    Ok(())
}
