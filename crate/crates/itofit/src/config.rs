//! Experiment configuration files.
//!
//! Configurations are TOML documents:
//!
//! ```toml
//! name = "fig1a"          # output file stem
//! seed = 1
//! epsilon = 0.1           # scale separation of the data-generating system
//! h = 1e-3                # simulation / observation step
//! stride = 1              # δ = stride · h
//! phi = "gauss"           # test function, see `itofit list-registries`
//! basis = "ou2"           # drift/diffusion basis
//! theta_true = [-0.5, 0.5]  # optional; derived from the system if omitted
//! rank_tol = 1e-12        # optional; default ε_mach · max(m, n)
//! t_grid = { start = 0.01, stop = 0.5, step = 0.01 }   # or an explicit list
//!
//! [system]
//! kind = "fast_ou"        # fast_ou | fast_ou_cubic | langevin2d | langevin1d
//! a = -0.5
//! varsigma = 0.5
//!
//! [design]
//! kind = "ensemble"       # ensemble | series
//! trial_points = 24
//! members = 5000
//! t_max = 0.5
//!
//! [mle]                   # only read by `mle-demo`
//! t_total = 2000.0
//! strides = [1, 10, 100]
//! ```
//!
//! A `series` design takes `trial_points`, `t_total`, `t_max`, and optionally
//! `burn_in` (default 10), `bandwidth` (default plug-in rule) and `x0`
//! (default origin).

use std::fs;
use std::path::Path;

use itofit_core::model::{phi_from_registry, AdmissibleFunction, ParametrizedModel};
use itofit_core::simulate::{
    homogenized_2d_coefficients, langevin1d_cosine_theta, make_langevin_1d_system, make_langevin_2d_system, steps_for,
    FastOuSystem, SdeSystem, DEFAULT_BURN_IN,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub epsilon: f64,
    pub h: f64,
    #[serde(default = "one")]
    pub stride: usize,
    pub phi: String,
    pub basis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_true: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    pub t_grid: TGrid,
    pub system: SystemConfig,
    pub design: DesignConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mle: Option<MleConfig>,
}

fn one() -> usize {
    1
}

fn default_burn_in() -> f64 {
    DEFAULT_BURN_IN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    /// Slow variable driven by fast OU noise, coarse model `dX = A X dt + √(2ς) dW`.
    FastOu { a: f64, varsigma: f64 },
    /// Fast-OU system with `h = Ax + Bx³`, `σ² = σa + σb x²`.
    FastOuCubic { a: f64, b: f64, sigma_a: f64, sigma_b: f64 },
    /// Langevin dynamics in `½ xᵀMx + cos(x₁/ε) + cos(x₂/ε)/2`.
    Langevin2d { m: [[f64; 2]; 2], sigma: f64 },
    /// Langevin dynamics in `αx²/2 + cos(x/ε)`.
    Langevin1d { alpha: f64, sigma: f64 },
}

pub const SYSTEM_KINDS: &[&str] = &["fast_ou", "fast_ou_cubic", "langevin2d", "langevin1d"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignConfig {
    Ensemble {
        trial_points: usize,
        members: usize,
        t_max: f64,
    },
    Series {
        trial_points: usize,
        t_total: f64,
        t_max: f64,
        #[serde(default = "default_burn_in")]
        burn_in: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bandwidth: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MleConfig {
    pub t_total: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    pub strides: Vec<usize>,
}

impl DesignConfig {
    pub fn trial_points(&self) -> usize {
        match self {
            DesignConfig::Ensemble { trial_points, .. } | DesignConfig::Series { trial_points, .. } => *trial_points,
        }
    }

    pub fn t_max(&self) -> f64 {
        match self {
            DesignConfig::Ensemble { t_max, .. } | DesignConfig::Series { t_max, .. } => *t_max,
        }
    }
}

impl SystemConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            SystemConfig::FastOu { .. } => "fast_ou",
            SystemConfig::FastOuCubic { .. } => "fast_ou_cubic",
            SystemConfig::Langevin2d { .. } => "langevin2d",
            SystemConfig::Langevin1d { .. } => "langevin1d",
        }
    }

    /// Dimension of the observed (slow) variable.
    pub fn observed_dim(&self) -> usize {
        match self {
            SystemConfig::Langevin2d { .. } => 2,
            _ => 1,
        }
    }

    pub fn build(&self, epsilon: f64) -> Result<Box<dyn SdeSystem>, CliError> {
        let sys: Box<dyn SdeSystem> = match *self {
            SystemConfig::FastOu { a, varsigma } => Box::new(FastOuSystem::ou(a, varsigma, epsilon)?),
            SystemConfig::FastOuCubic { a, b, sigma_a, sigma_b } => {
                Box::new(FastOuSystem::cubic(a, b, sigma_a, sigma_b, epsilon)?)
            }
            SystemConfig::Langevin2d { m, sigma } => Box::new(make_langevin_2d_system(m, sigma, epsilon)?),
            SystemConfig::Langevin1d { alpha, sigma } => Box::new(make_langevin_1d_system(alpha, sigma, epsilon)?),
        };
        Ok(sys)
    }

    /// Basis the coarse-grained model of this system is naturally written in.
    pub fn natural_basis(&self) -> &'static str {
        match self {
            SystemConfig::FastOu { .. } | SystemConfig::Langevin1d { .. } => "ou2",
            SystemConfig::FastOuCubic { .. } => "cubic4",
            SystemConfig::Langevin2d { .. } => "linear2d",
        }
    }

    /// Coefficients of the coarse-grained model in [`Self::natural_basis`].
    pub fn coarse_theta(&self) -> Result<Vec<f64>, CliError> {
        Ok(match *self {
            SystemConfig::FastOu { a, varsigma } => vec![a, varsigma],
            SystemConfig::FastOuCubic { a, b, sigma_a, sigma_b } => vec![a, b, sigma_a, sigma_b],
            SystemConfig::Langevin2d { m, sigma } => homogenized_2d_coefficients(m, sigma)?.theta().to_vec(),
            SystemConfig::Langevin1d { alpha, sigma } => langevin1d_cosine_theta(alpha, sigma).to_vec(),
        })
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string().trim().replace('\n', " ")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// `δ = stride · h`.
    pub fn delta(&self) -> f64 {
        self.stride as f64 * self.h
    }

    pub fn t_values(&self) -> Result<Vec<f64>, CliError> {
        match &self.t_grid {
            TGrid::List(v) => Ok(v.clone()),
            &TGrid::Range { start, stop, step } => {
                if !(step > 0.0) || !(stop >= start) {
                    return Err(CliError::Parse("t_grid needs step > 0 and stop ≥ start".into()));
                }
                let k0 = (start / step).round();
                if (k0 * step - start).abs() > 1e-9 * step {
                    return Err(CliError::Parse("t_grid start must be a multiple of its step".into()));
                }
                let k1 = (stop / step + 1e-9).floor();
                // k / (1/step) is exact for steps like 0.01 where k · step is not
                let inv = 1.0 / step;
                let at = |k: i64| {
                    if (inv - inv.round()).abs() < 1e-9 {
                        k as f64 / inv.round()
                    } else {
                        k as f64 * step
                    }
                };
                Ok((k0 as i64..=k1 as i64).map(at).collect())
            }
        }
    }

    pub fn model(&self) -> Result<ParametrizedModel, CliError> {
        ParametrizedModel::from_registry(&self.basis)
            .ok_or_else(|| CliError::Registry(format!("unknown basis `{}`", self.basis)))
    }

    pub fn test_function(&self) -> Result<Box<dyn AdmissibleFunction>, CliError> {
        let d = self.system.observed_dim();
        phi_from_registry(&self.phi, d)
            .ok_or_else(|| CliError::Registry(format!("unknown test function `{}` for d = {d}", self.phi)))
    }

    /// Explicit `theta_true`, or the coarse coefficients of the system when
    /// the basis is the system's natural one.
    pub fn resolved_theta_true(&self) -> Result<Option<Vec<f64>>, CliError> {
        if let Some(t) = &self.theta_true {
            return Ok(Some(t.clone()));
        }
        if self.basis == self.system.natural_basis() {
            return Ok(Some(self.system.coarse_theta()?));
        }
        Ok(None)
    }
}

/// Outcome of [`validate_config`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub system: Option<String>,
    pub basis: Option<String>,
    pub n_params: Option<usize>,
    pub phi: Option<String>,
    pub delta: Option<f64>,
    /// Quadrature intervals up to `t_max`.
    pub n_delta: Option<usize>,
    /// Quadrature intervals `n_t` for every grid point that resolves.
    pub n_t: Vec<(f64, usize)>,
    /// Usable kernel-regression window at the largest lag (series designs).
    pub nw_window: Option<usize>,
    pub theta_true: Option<Vec<f64>>,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn render(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let show = |v: &Option<String>| v.clone().unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "system: {}", show(&self.system));
        let _ = writeln!(s, "basis: {}", show(&self.basis));
        if let Some(n) = self.n_params {
            let _ = writeln!(s, "parameters: {n}");
        }
        let _ = writeln!(s, "phi: {}", show(&self.phi));
        if let Some(d) = self.delta {
            let _ = writeln!(s, "delta: {d}");
        }
        if let Some(n) = self.n_delta {
            let _ = writeln!(s, "n_delta: {n}");
        }
        if let (Some(first), Some(last)) = (self.n_t.first(), self.n_t.last()) {
            let _ = writeln!(
                s,
                "t grid: {} points, n_t from {} (t = {}) to {} (t = {})",
                self.n_t.len(),
                first.1,
                first.0,
                last.1,
                last.0
            );
        }
        if let Some(w) = self.nw_window {
            let _ = writeln!(s, "kernel window: {w}");
        }
        if let Some(t) = &self.theta_true {
            let _ = writeln!(s, "theta_true: {t:?}");
        }
        if self.violations.is_empty() {
            let _ = writeln!(s, "violations: none");
        } else {
            let _ = writeln!(s, "violations:");
            for v in &self.violations {
                let _ = writeln!(s, "  - {v}");
            }
        }
        s
    }
}

/// Checks a configuration without running anything.
pub fn validate_config(text: &str) -> ValidationReport {
    let mut r = ValidationReport {
        system: None,
        basis: None,
        n_params: None,
        phi: None,
        delta: None,
        n_delta: None,
        n_t: Vec::new(),
        nw_window: None,
        theta_true: None,
        violations: Vec::new(),
    };
    let cfg = match ExperimentConfig::parse(text) {
        Ok(c) => c,
        Err(e) => {
            r.violations.push(e.to_string());
            return r;
        }
    };
    let v = &mut r.violations;
    r.system = Some(cfg.system.kind().to_string());
    if let Err(e) = cfg.system.build(cfg.epsilon.max(f64::MIN_POSITIVE)) {
        v.push(format!("system: {e}"));
    }
    if !(cfg.epsilon > 0.0) {
        v.push("epsilon must be positive".into());
    }
    if !(cfg.h > 0.0) {
        v.push("h must be positive".into());
    }
    if cfg.stride == 0 {
        v.push("stride must be at least one".into());
    }
    let d = cfg.system.observed_dim();
    let model = match cfg.model() {
        Ok(m) => {
            if m.dim() != d {
                v.push(format!(
                    "basis `{}` has dimension {} but the system has {d}",
                    cfg.basis,
                    m.dim()
                ));
            }
            r.basis = Some(m.name().to_string());
            r.n_params = Some(m.n_params());
            Some(m)
        }
        Err(e) => {
            v.push(e.to_string());
            None
        }
    };
    match cfg.test_function() {
        Ok(p) => r.phi = Some(p.name().to_string()),
        Err(e) => v.push(e.to_string()),
    }
    match cfg.resolved_theta_true() {
        Ok(Some(t)) => {
            if let Some(m) = &model {
                if t.len() != m.n_params() {
                    v.push(format!(
                        "theta_true has {} entries, basis has {}",
                        t.len(),
                        m.n_params()
                    ));
                }
            }
            r.theta_true = Some(t);
        }
        Ok(None) => {}
        Err(e) => v.push(format!("theta_true: {e}")),
    }
    if cfg.design.trial_points() == 0 {
        v.push("need at least one trial point".into());
    }
    let delta = cfg.delta();
    let t_max = cfg.design.t_max();
    if delta > 0.0 {
        r.delta = Some(delta);
        match steps_for(t_max, delta) {
            Ok(0) => v.push("t_max must be positive".into()),
            Ok(n) => r.n_delta = Some(n),
            Err(_) => v.push(format!("t_max = {t_max} is not a multiple of delta = {delta}")),
        }
        match cfg.t_values() {
            Ok(ts) => {
                if ts.is_empty() {
                    v.push("t_grid is empty".into());
                }
                for t in ts {
                    match steps_for(t, delta) {
                        Ok(0) => v.push(format!("t_grid entry {t} is zero")),
                        Ok(n) => {
                            if t > t_max * (1.0 + 1e-12) {
                                v.push(format!("t_grid entry {t} exceeds t_max = {t_max}"));
                            }
                            r.n_t.push((t, n));
                        }
                        Err(_) => v.push(format!("t_grid entry {t} is not a multiple of delta = {delta}")),
                    }
                }
            }
            Err(e) => v.push(e.to_string()),
        }
    }
    match &cfg.design {
        DesignConfig::Ensemble { members, .. } => {
            if *members == 0 {
                v.push("ensemble needs at least one member".into());
            }
        }
        DesignConfig::Series {
            t_total,
            burn_in,
            bandwidth,
            x0,
            ..
        } => {
            if !(*burn_in >= 0.0) {
                v.push("burn_in must be nonnegative".into());
            }
            if let Some(b) = bandwidth {
                if !(*b > 0.0) {
                    v.push("bandwidth must be positive".into());
                }
            }
            if let Some(x0) = x0 {
                if x0.len() != d {
                    v.push(format!("x0 has {} entries, system has dimension {d}", x0.len()));
                }
            }
            if cfg.h > 0.0 {
                match (steps_for(*t_total, cfg.h), steps_for(*burn_in, cfg.h)) {
                    (Ok(samples), Ok(_)) => {
                        let max_lag = r.n_delta.unwrap_or(0) * cfg.stride;
                        if samples < max_lag + 2 {
                            v.push("series too short for t_max".into());
                        } else {
                            r.nw_window = Some(samples - max_lag);
                        }
                    }
                    _ => v.push("t_total and burn_in must be multiples of h".into()),
                }
            }
        }
    }
    if let Some(mle) = &cfg.mle {
        if mle.strides.is_empty() || mle.strides.contains(&0) {
            v.push("mle strides must be nonempty and positive".into());
        }
        if cfg.system.observed_dim() != 1 {
            v.push("mle demo needs a one-dimensional system".into());
        }
        if cfg.h > 0.0 && steps_for(mle.t_total, cfg.h).is_err() {
            v.push("mle t_total must be a multiple of h".into());
        }
    }
    r
}
