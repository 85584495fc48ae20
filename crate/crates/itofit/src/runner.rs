//! Experiment pipeline: simulate, estimate moments, assemble and sweep.

use itofit_core::baselines::{mle_langevin, MleResult};
use itofit_core::estimator::{draw_trial_points, error_sweep, SweepPoint, TrialPoints};
use itofit_core::moments::{
    default_bandwidth, ensemble_moment_table, moment_table, series_integrands, series_moment_table, series_scale,
    MomentTable,
};
use itofit_core::simulate::{generate_observations, steps_for, Design, ObservationSet, Trajectory};
use rayon::prelude::*;

use crate::config::{DesignConfig, ExperimentConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Keep the raw observations in the output (ensembles are otherwise
    /// reduced to moments on the fly).
    pub keep_observations: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trial_points: TrialPoints,
    pub theta_true: Option<Vec<f64>>,
    /// Kernel bandwidth for series designs.
    pub bandwidth: Option<f64>,
    pub tables: Vec<MomentTable>,
    pub sweep: Vec<SweepPoint>,
    pub observations: Option<ObservationSet>,
}

impl RunOutput {
    /// Relative errors of the successful sweep points, as `(t, error)`.
    pub fn relative_errors(&self) -> Vec<(f64, f64)> {
        self.sweep
            .iter()
            .filter_map(|p| p.outcome.as_ref().ok().and_then(|e| e.relative_error.map(|r| (p.t, r))))
            .collect()
    }
}

fn check(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let report = crate::config::validate_config(&cfg.to_toml());
    match report.violations.first() {
        None => Ok(()),
        Some(_) => Err(CliError::Parse(report.violations.join("; "))),
    }
}

/// Runs the experiment described by `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunOutput, CliError> {
    check(cfg)?;
    let system = cfg.system.build(cfg.epsilon)?;
    let model = cfg.model()?;
    let phi = cfg.test_function()?;
    let d = cfg.system.observed_dim();
    let t_max = cfg.design.t_max();
    let trial_points = draw_trial_points(cfg.design.trial_points(), d, cfg.seed)?;
    let theta_true = cfg.resolved_theta_true()?;

    let (tables, observations, bandwidth) = match &cfg.design {
        DesignConfig::Ensemble { members, .. } => {
            if opts.keep_observations {
                let design = Design::Ensemble {
                    xi_points: trial_points.points().to_vec(),
                    members: *members,
                    horizon: t_max,
                    h: cfg.h,
                };
                let obs = generate_observations(system.as_ref(), &design, cfg.seed)?;
                let tables = trial_points
                    .points()
                    .par_iter()
                    .map(|xi| moment_table(&obs, &model, phi.as_ref(), xi, t_max, cfg.stride, None))
                    .collect::<Result<Vec<_>, _>>()?;
                (tables, Some(obs), None)
            } else {
                let tables = trial_points
                    .points()
                    .par_iter()
                    .enumerate()
                    .map(|(i, xi)| {
                        ensemble_moment_table(
                            system.as_ref(),
                            &model,
                            phi.as_ref(),
                            xi,
                            i,
                            *members,
                            t_max,
                            cfg.h,
                            cfg.stride,
                            cfg.seed,
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                (tables, None, None)
            }
        }
        DesignConfig::Series {
            t_total,
            burn_in,
            bandwidth,
            x0,
            ..
        } => {
            let design = Design::SingleSeries {
                total_time: *t_total,
                h: cfg.h,
                burn_in: *burn_in,
                x0: x0.clone().unwrap_or_else(|| vec![0.0; d]),
            };
            let obs = generate_observations(system.as_ref(), &design, cfg.seed)?;
            let ObservationSet::SingleSeries(series) = &obs else {
                unreachable!("series design yields a series")
            };
            let kappa = match bandwidth {
                Some(k) => *k,
                None => default_bandwidth(series.len(), &series_scale(series))?,
            };
            let integrands = series_integrands(series, &model, phi.as_ref())?;
            let tables = trial_points
                .points()
                .par_iter()
                .map(|xi| series_moment_table(series, &integrands, phi.sup_bound(), xi, t_max, cfg.stride, kappa))
                .collect::<Result<Vec<_>, _>>()?;
            let keep = opts.keep_observations.then_some(obs);
            (tables, keep, Some(kappa))
        }
    };

    let t_values = cfg.t_values()?;
    let sweep = error_sweep(&tables, phi.as_ref(), theta_true.as_deref(), &t_values, cfg.rank_tol);

    Ok(RunOutput {
        trial_points,
        theta_true,
        bandwidth,
        tables,
        sweep,
        observations,
    })
}

/// One row of the MLE stride sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct MleRow {
    pub stride: usize,
    /// Sampling step `H = stride · h`.
    pub step: f64,
    pub result: Result<MleResult, itofit_core::Error>,
    /// Set when `H ≥ 1`: too few effective samples for a stable estimate.
    pub high_variance: bool,
}

#[derive(Debug, Clone)]
pub struct MleOutput {
    /// Coefficient of the fine-scale potential.
    pub alpha: Option<f64>,
    /// Drift coefficient of the coarse-grained model.
    pub coarse: Option<f64>,
    pub rows: Vec<MleRow>,
}

/// Step size from which an MLE row is flagged as high variance.
pub const HIGH_VARIANCE_STEP: f64 = 1.0;

/// Simulates the configured one-dimensional system as a single series of
/// length `mle.t_total` and evaluates the MLE (with `V'(x) = x`) at every
/// configured stride.
pub fn run_mle_demo(cfg: &ExperimentConfig) -> Result<MleOutput, CliError> {
    let mle = cfg
        .mle
        .as_ref()
        .ok_or_else(|| CliError::Parse("mle-demo needs an [mle] section".into()))?;
    check(cfg)?;
    let path = simulate_mle_path(cfg)?;
    let (alpha, coarse) = match cfg.system {
        crate::config::SystemConfig::Langevin1d { alpha, .. } => {
            let th = cfg.system.coarse_theta()?;
            (Some(alpha), Some(-th[0]))
        }
        crate::config::SystemConfig::FastOu { a, .. } => (None, Some(-a)),
        _ => (None, None),
    };
    let rows = mle
        .strides
        .iter()
        .map(|&s| {
            let step = s as f64 * cfg.h;
            MleRow {
                stride: s,
                step,
                result: mle_langevin(&path, |x| x, s),
                high_variance: step >= HIGH_VARIANCE_STEP,
            }
        })
        .collect();
    Ok(MleOutput { alpha, coarse, rows })
}

/// The series the MLE demo is evaluated on.
pub fn simulate_mle_path(cfg: &ExperimentConfig) -> Result<Trajectory, CliError> {
    let mle = cfg
        .mle
        .as_ref()
        .ok_or_else(|| CliError::Parse("mle-demo needs an [mle] section".into()))?;
    let system = cfg.system.build(cfg.epsilon)?;
    steps_for(mle.t_total, cfg.h)?;
    let design = Design::SingleSeries {
        total_time: mle.t_total,
        h: cfg.h,
        burn_in: mle.burn_in,
        x0: vec![0.0; cfg.system.observed_dim()],
    };
    match generate_observations(system.as_ref(), &design, cfg.seed)? {
        ObservationSet::SingleSeries(s) => Ok(s),
        ObservationSet::Ensemble(_) => unreachable!("series design yields a series"),
    }
}
