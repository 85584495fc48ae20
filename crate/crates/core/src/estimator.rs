//! Assembly of `A θ = b` over trial points and its minimum-norm
//! least-squares solution.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, default_rank_tol, Matrix};
use crate::model::{AdmissibleFunction, ParametrizedModel};
use crate::moments::{moment_table, trapezoid_integrate, MomentTable};
use crate::rng::{stream, TRIAL_POINT_STREAM};
use crate::simulate::{steps_for, ObservationSet};

/// Trial points ξ₁, …, ξ_m, drawn once per experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialPoints {
    points: Vec<Vec<f64>>,
    seed: u64,
}

impl TrialPoints {
    /// Wraps explicitly given points; `seed` records where they came from.
    pub fn new(points: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let d = points.first().map(Vec::len).unwrap_or(0);
        if d == 0 {
            return Err(Error::invalid("need at least one nonempty trial point"));
        }
        for p in &points {
            Error::check_dim("trial point", d, p.len())?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("trial points must be finite"));
            }
        }
        Ok(TrialPoints { points, seed })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}

/// `m` i.i.d. standard normal points in `ℝ^d` from the trial-point stream
/// of `seed`.
pub fn draw_trial_points(m: usize, d: usize, seed: u64) -> Result<TrialPoints> {
    if m == 0 || d == 0 {
        return Err(Error::invalid("need m ≥ 1 trial points of dimension d ≥ 1"));
    }
    let mut rng = stream(seed, TRIAL_POINT_STREAM);
    let points = (0..m)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    TrialPoints::new(points, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystemEstimate {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub theta_hat: Vec<f64>,
    /// Nonincreasing.
    pub singular_values: Vec<f64>,
    pub effective_rank: usize,
    pub residual_norm: f64,
}

impl LinearSystemEstimate {
    /// `σ₁ / σ_n`; infinite for a rank-deficient matrix.
    pub fn condition_number(&self) -> f64 {
        match (self.singular_values.first(), self.singular_values.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            (Some(_), Some(_)) => f64::INFINITY,
            _ => f64::NAN,
        }
    }

    pub fn relative_error(&self, theta_true: &[f64]) -> Result<f64> {
        relative_error(&self.theta_hat, theta_true)
    }
}

/// `‖θ̂ − θ‖₂ / ‖θ‖₂`.
pub fn relative_error(theta_hat: &[f64], theta_true: &[f64]) -> Result<f64> {
    Error::check_dim("parameter vector", theta_true.len(), theta_hat.len())?;
    let norm = linalg::norm2(theta_true);
    if norm == 0.0 {
        return Err(Error::invalid("relative error undefined for θ = 0"));
    }
    let diff: Vec<f64> = theta_hat.iter().zip(theta_true).map(|(a, b)| a - b).collect();
    Ok(linalg::norm2(&diff) / norm)
}

/// Index of the grid node at time `t` for spacing `delta`; rejects `t = 0`
/// and horizons beyond the last node.
pub fn node_index(t: f64, delta: f64, n_nodes: usize) -> Result<usize> {
    let n_t = steps_for(t, delta)?;
    if n_t == 0 {
        return Err(Error::invalid("t must be positive (at least one quadrature interval)"));
    }
    if n_t >= n_nodes {
        return Err(Error::invalid("t exceeds the horizon of the moment curves"));
    }
    Ok(n_t)
}

/// Assembles `A` and `b` at horizon `t` from one moment table per trial
/// point: `bᵢ = ū(t, ξᵢ; φ) − φ(ξᵢ)`, `Aᵢⱼ = ∫₀ᵗ ū(s, ξᵢ; 𝓛ⱼφ) ds` by the
/// trapezoidal rule.
pub fn assemble_from_tables(
    tables: &[MomentTable],
    phi: &dyn AdmissibleFunction,
    t: f64,
) -> Result<(Matrix, Vec<f64>)> {
    let first = tables
        .first()
        .ok_or_else(|| Error::invalid("no moment tables to assemble"))?;
    let n = first.n_params();
    let delta = first.delta;
    let nodes = first.n_nodes();
    for tab in tables {
        Error::check_dim("moment table width", n + 1, tab.curves.len())?;
        Error::check_dim("moment table nodes", nodes, tab.n_nodes())?;
        if tab.delta != delta {
            return Err(Error::invalid("moment tables use different grids"));
        }
    }
    let n_t = node_index(t, delta, nodes)?;
    let mut a = Matrix::zeros(tables.len(), n);
    let mut b = vec![0.0; tables.len()];
    for (i, tab) in tables.iter().enumerate() {
        b[i] = tab.phi()[n_t] - phi.value(&tab.xi);
        if !b[i].is_finite() {
            return Err(Error::Assembly { row: i, col: None });
        }
        let row = a.row_mut(i);
        for (j, aij) in row.iter_mut().enumerate() {
            *aij = trapezoid_integrate(&tab.generator(j)[..=n_t], delta)?;
            if !aij.is_finite() {
                return Err(Error::Assembly { row: i, col: Some(j) });
            }
        }
    }
    Ok((a, b))
}

/// Builds moment tables for every trial point on `[0, horizon]`.
pub fn moment_tables(
    model: &ParametrizedModel,
    phi: &dyn AdmissibleFunction,
    xi: &TrialPoints,
    horizon: f64,
    observations: &ObservationSet,
    stride: usize,
    bandwidth: Option<f64>,
) -> Result<Vec<MomentTable>> {
    xi.points()
        .iter()
        .map(|p| moment_table(observations, model, phi, p, horizon, stride, bandwidth))
        .collect()
}

/// Assembles `(A, b)` at horizon `t` directly from observations.
pub fn assemble_system(
    model: &ParametrizedModel,
    phi: &dyn AdmissibleFunction,
    xi: &TrialPoints,
    t: f64,
    observations: &ObservationSet,
    stride: usize,
    bandwidth: Option<f64>,
) -> Result<(Matrix, Vec<f64>)> {
    Error::check_dim("trial point dimension", model.dim(), xi.dim())?;
    let tables = moment_tables(model, phi, xi, t, observations, stride, bandwidth)?;
    assemble_from_tables(&tables, phi, t)
}

/// `θ̂ = A⁺ b`, truncating singular values `≤ rank_tol · σ₁`
/// (default `ε_mach · max(m, n)`).
pub fn solve(a: Matrix, b: Vec<f64>, rank_tol: Option<f64>) -> Result<LinearSystemEstimate> {
    let tol = rank_tol.unwrap_or_else(|| default_rank_tol(a.rows(), a.cols()));
    let sol = linalg::min_norm_least_squares(&a, &b, tol)?;
    Ok(LinearSystemEstimate {
        a,
        b,
        theta_hat: sol.x,
        singular_values: sol.singular_values,
        effective_rank: sol.effective_rank,
        residual_norm: sol.residual_norm,
    })
}

/// Assembly followed by the pseudoinverse solve.
#[allow(clippy::too_many_arguments)]
pub fn estimate(
    model: &ParametrizedModel,
    phi: &dyn AdmissibleFunction,
    xi: &TrialPoints,
    t: f64,
    observations: &ObservationSet,
    stride: usize,
    bandwidth: Option<f64>,
    rank_tol: Option<f64>,
) -> Result<LinearSystemEstimate> {
    let (a, b) = assemble_system(model, phi, xi, t, observations, stride, bandwidth)?;
    solve(a, b, rank_tol)
}

/// One row of an error-versus-t sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub t: f64,
    pub outcome: Result<SweepEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEstimate {
    /// `None` when no reference parameter was supplied.
    pub relative_error: Option<f64>,
    pub condition: f64,
    pub estimate: LinearSystemEstimate,
}

/// Estimates θ at every `t` in `t_grid` from shared moment tables. A
/// failure at one `t` is recorded in its row and the sweep continues.
pub fn error_sweep(
    tables: &[MomentTable],
    phi: &dyn AdmissibleFunction,
    theta_true: Option<&[f64]>,
    t_grid: &[f64],
    rank_tol: Option<f64>,
) -> Vec<SweepPoint> {
    t_grid
        .iter()
        .map(|&t| SweepPoint {
            t,
            outcome: sweep_one(tables, phi, theta_true, t, rank_tol),
        })
        .collect()
}

fn sweep_one(
    tables: &[MomentTable],
    phi: &dyn AdmissibleFunction,
    theta_true: Option<&[f64]>,
    t: f64,
    rank_tol: Option<f64>,
) -> Result<SweepEstimate> {
    let (a, b) = assemble_from_tables(tables, phi, t)?;
    let est = solve(a, b, rank_tol)?;
    Ok(SweepEstimate {
        relative_error: theta_true.map(|th| est.relative_error(th)).transpose()?,
        condition: est.condition_number(),
        estimate: est,
    })
}
