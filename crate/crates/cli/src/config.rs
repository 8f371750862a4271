//! Run configuration: a sectioned TOML file plus `--set section.key=value`
//! overrides, later values winning.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zenocool_core::analysis::{DomainMode, DomainSearch, TauSearch, SEARCH_WINDOW};
use zenocool_core::dynamics::{CoefficientClock, Integrator, RateGrid};
use zenocool_core::{BathParams, Protocol, QuadratureSpec, SpectralModel, TabulatedSpectrum};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub bath: BathConfig,
    pub protocol: ProtocolConfig,
    pub grid: GridConfig,
    pub sweep: SweepConfig,
    pub domain: DomainConfig,
    pub mfactor: MFactorConfig,
    pub tolerances: Tolerances,
    pub output: OutputConfig,
    /// Directory that relative paths in the file are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lorentzian,
    SuperOhmic,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub alpha: f64,
    pub lambda: f64,
    pub omega0: f64,
    pub s: f64,
    pub omega_c: f64,
    /// Two-column (frequency, density) file for `kind = "tabulated"`.
    pub path: Option<PathBuf>,
    pub cutoff: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Lorentzian,
            alpha: 0.01,
            lambda: 0.25,
            omega0: 1.5,
            s: 3.0,
            omega_c: 2.0,
            path: None,
            cutoff: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathConfig {
    pub beta: f64,
    pub omega_a: f64,
}

impl Default for BathConfig {
    fn default() -> Self {
        Self {
            beta: 2.0,
            omega_a: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    Dopri5,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub tau: f64,
    pub n_meas: usize,
    pub rho_ee0: f64,
    /// Free-evolution horizon; defaults to `n_meas·tau` (or `tau`).
    pub horizon: Option<f64>,
    pub sample_interval: f64,
    pub integrator: IntegratorKind,
    pub rk4_step: f64,
    pub clock: CoefficientClock,
    /// The adiabatic estimate is drawn up to this time.
    pub adiabatic_until: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            tau: 2.5,
            n_meas: 40,
            rho_ee0: 0.15,
            horizon: None,
            sample_interval: 0.05,
            integrator: IntegratorKind::Dopri5,
            rk4_step: 1e-3,
            clock: CoefficientClock::Reset,
            adiabatic_until: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub t_step: f64,
    pub tau_start: f64,
    pub tau_end: f64,
    pub tau_step: f64,
    /// Scan density of the τ optimiser, per period 2π/ω_a.
    pub points_per_period: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t_start: 0.0,
            t_end: 50.0,
            t_step: 0.1,
            tau_start: 0.1,
            tau_end: 20.0,
            tau_step: 0.05,
            points_per_period: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Omega0,
    Beta,
    S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub omega0: Vec<f64>,
    pub beta: Vec<f64>,
    pub s: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            parameter: SweepParameter::Omega0,
            omega0: vec![1.2, 1.5, 2.0, 2.5, 3.0],
            beta: vec![0.5, 1.0, 2.0, 4.0, 6.0],
            s: vec![1.0, 2.0, 3.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub mode: DomainMode,
    pub omega_max: f64,
    pub points_per_fringe: usize,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            mode: DomainMode::MainLobe,
            omega_max: SEARCH_WINDOW,
            points_per_fringe: 40,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MFactorConfig {
    /// Also emit M_min against β and against s.
    pub insets: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    pub ode_rel_tol: f64,
    pub ode_abs_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        Self {
            rel_tol: q.rel_tol,
            abs_tol: q.abs_tol,
            max_panels: q.max_panels,
            ode_rel_tol: 1e-8,
            ode_abs_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
    /// Worker threads; 0 picks the machine default.
    pub threads: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json, Format::Svg],
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl RunConfig {
    /// Read `path` (if any), apply `overrides` in order and validate.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.base_dir = path
            .and_then(Path::parent)
            .map(Path::to_path_buf)
            .unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let g = &self.grid;
        if !(g.t_step > 0.0 && g.t_end >= g.t_start && g.t_start >= 0.0) {
            return bad(format!(
                "time grid is empty: [{}, {}] step {}",
                g.t_start, g.t_end, g.t_step
            ));
        }
        if !(g.tau_step > 0.0 && g.tau_end > g.tau_start && g.tau_start > 0.0) {
            return bad(format!(
                "tau grid is empty: [{}, {}] step {}",
                g.tau_start, g.tau_end, g.tau_step
            ));
        }
        let t = &self.tolerances;
        if !(t.rel_tol > 0.0
            && t.abs_tol > 0.0
            && t.max_panels > 0
            && t.ode_rel_tol > 0.0
            && t.ode_abs_tol > 0.0)
        {
            return bad(format!("tolerances must be positive, got {t:?}"));
        }
        if !(self.protocol.rho_ee0 > 0.0 && self.protocol.rho_ee0 < 1.0) {
            return bad(format!(
                "rho_ee0 must lie in (0, 1), got {}",
                self.protocol.rho_ee0
            ));
        }
        let s = &self.sweep;
        let list = match s.parameter {
            SweepParameter::Omega0 => &s.omega0,
            SweepParameter::Beta => &s.beta,
            SweepParameter::S => &s.s,
        };
        if list.is_empty() {
            return bad(format!("sweep over {:?} has no values", s.parameter));
        }
        if self.model.kind == ModelKind::Tabulated {
            match self.tabulated_path() {
                Some(p) if p.is_file() => {}
                Some(p) => {
                    return bad(format!("tabulated spectrum {} does not exist", p.display()))
                }
                None => return bad("model.kind = \"tabulated\" needs model.path".into()),
            }
        }
        Ok(())
    }

    fn tabulated_path(&self) -> Option<PathBuf> {
        self.model.path.as_ref().map(|p| {
            if p.is_absolute() {
                p.clone()
            } else {
                self.base_dir.join(p)
            }
        })
    }

    pub fn spectral_model(&self) -> Result<SpectralModel, CliError> {
        let m = &self.model;
        Ok(match m.kind {
            ModelKind::Lorentzian => {
                SpectralModel::modified_lorentzian(m.alpha, m.lambda, m.omega0)?
            }
            ModelKind::SuperOhmic => SpectralModel::super_ohmic(m.alpha, m.s, m.omega_c)?,
            ModelKind::Tabulated => {
                let path = self.tabulated_path().expect("validated");
                SpectralModel::tabulated(TabulatedSpectrum::from_path(path, m.cutoff)?)
            }
        })
    }

    pub fn bath_params(&self) -> Result<BathParams, CliError> {
        Ok(BathParams::new(self.bath.beta, self.bath.omega_a)?)
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: self.tolerances.rel_tol,
            abs_tol: self.tolerances.abs_tol,
            max_panels: self.tolerances.max_panels,
        }
    }

    pub fn protocol(&self) -> Result<Protocol, CliError> {
        let p = &self.protocol;
        let mut out = Protocol::new(p.tau, p.n_meas)?;
        out.integrator = match p.integrator {
            IntegratorKind::Dopri5 => Integrator::Dopri5 {
                rel_tol: self.tolerances.ode_rel_tol,
                abs_tol: self.tolerances.ode_abs_tol,
            },
            IntegratorKind::Rk4 => Integrator::Rk4 { step: p.rk4_step },
        };
        out.grid = RateGrid::default();
        out.clock = p.clock;
        out.sample_interval = p.sample_interval;
        out.quadrature = self.quadrature();
        Ok(out)
    }

    pub fn free_horizon(&self) -> f64 {
        let p = &self.protocol;
        p.horizon.unwrap_or(if p.n_meas > 0 {
            p.tau * p.n_meas as f64
        } else {
            p.tau
        })
    }

    pub fn domain_search(&self) -> DomainSearch {
        DomainSearch {
            mode: self.domain.mode,
            omega_max: self.domain.omega_max,
            points_per_fringe: self.domain.points_per_fringe,
            all_lobes: false,
        }
    }

    pub fn tau_search(&self) -> TauSearch {
        let mut s = TauSearch::new(self.grid.tau_start, self.grid.tau_end);
        s.points_per_period = self.grid.points_per_period;
        s
    }

    pub fn t_values(&self) -> Vec<f64> {
        uniform(self.grid.t_start, self.grid.t_end, self.grid.t_step)
    }

    pub fn tau_values(&self) -> Vec<f64> {
        uniform(self.grid.tau_start, self.grid.tau_end, self.grid.tau_step)
    }
}

/// `start, start + step, …` up to and including `end` (within 1e-9 steps).
pub fn uniform(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

/// Apply `section.key=value`; the value is read as a TOML scalar or array
/// and falls back to a bare string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {spec:?} is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!(
            "override key {key:?} is malformed"
        )));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = path.split_last().expect("non-empty");
    let mut cur = table;
    for p in parents {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                CliError::Config(format!("override {key:?} descends into a non-table"))
            })?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
