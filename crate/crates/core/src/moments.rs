//! Conditional-moment estimators and time quadrature.
//!
//! `E φ(X_ξ(τ))` is approximated either by an ensemble average over
//! trajectories started at ξ, or, for a single stationary time series, by the
//! Nadaraya–Watson estimator with a Gaussian kernel. Moment curves are
//! integrated in time with the trapezoidal rule.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::model::{AdmissibleFunction, GeneratorEvaluator, ParametrizedModel};
use crate::simulate::{simulate_member, steps_for, EnsembleObservations, ObservationSet, SdeSystem, Trajectory};

/// Kernel denominators below this are treated as zero; the estimator then
/// falls back to uniform weights.
pub const ZERO_DENOMINATOR: f64 = 1e-300;

/// Kernel terms whose log-weight is this far below the largest one are
/// skipped by the batched estimator (relative size < e⁻⁶⁰ ≈ 9e-27).
const LOG_WEIGHT_CUTOFF: f64 = 60.0;

/// Estimated moment curve `E φ(X_ξ(q δ))`, `q = 0..=n_δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCurve {
    pub xi: Vec<f64>,
    pub delta: f64,
    pub values: Vec<f64>,
}

/// Moment curves of φ and of every `𝓛ⱼφ` at one trial point, on a common
/// grid of spacing `delta`. `curves[0]` belongs to φ, `curves[j]` to `𝓛ⱼφ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub xi: Vec<f64>,
    pub delta: f64,
    pub curves: Vec<Vec<f64>>,
    /// Nodes where the φ estimate exceeded the declared bound of φ (only
    /// possible for kernel regression).
    pub bound_violations: usize,
}

impl MomentTable {
    pub fn n_nodes(&self) -> usize {
        self.curves[0].len()
    }

    pub fn n_params(&self) -> usize {
        self.curves.len() - 1
    }

    pub fn phi(&self) -> &[f64] {
        &self.curves[0]
    }

    /// Curve of `𝓛ⱼφ`, 0-based `j`.
    pub fn generator(&self, j: usize) -> &[f64] {
        &self.curves[j + 1]
    }

    pub fn curve(&self, f: usize) -> MomentCurve {
        MomentCurve {
            xi: self.xi.clone(),
            delta: self.delta,
            values: self.curves[f].clone(),
        }
    }
}

/// `(1/N) Σ f(X⁽ᵏ⁾(step h))` over the members of trial point `trial`,
/// summed in member order.
pub fn ensemble_moment(
    obs: &EnsembleObservations,
    trial: usize,
    step: usize,
    mut f: impl FnMut(&[f64]) -> f64,
) -> Result<f64> {
    if obs.members() == 0 {
        return Err(Error::invalid("empty ensemble"));
    }
    if trial >= obs.trial_points().len() || step > obs.n_steps() {
        return Err(Error::invalid("trial or step index out of range"));
    }
    let sum: f64 = obs.states_at(trial, step).map(&mut f).sum();
    Ok(sum / obs.members() as f64)
}

/// Gaussian kernel `(2π)^{-d/2} exp(−‖u‖²/2)` evaluated at `(x − ξ)/κ`.
#[inline]
fn kernel(x: &[f64], xi: &[f64], inv_kappa: f64, norm: f64) -> f64 {
    norm * math::exp(log_kernel(x, xi, inv_kappa))
}

#[inline]
fn log_kernel(x: &[f64], xi: &[f64], inv_kappa: f64) -> f64 {
    let r2: f64 = x
        .iter()
        .zip(xi)
        .map(|(a, b)| {
            let u = (a - b) * inv_kappa;
            u * u
        })
        .sum();
    -0.5 * r2
}

fn kernel_norm(d: usize) -> f64 {
    math::powf(2.0 * core::f64::consts::PI, -(d as f64) / 2.0)
}

fn check_series(series: &Trajectory, xi: &[f64], lag: usize, kappa: f64) -> Result<usize> {
    Error::check_dim("trial point", series.dim(), xi.len())?;
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::invalid("bandwidth must be positive"));
    }
    let n = series.len();
    if n < lag + 2 {
        return Err(Error::InvalidArgument(alloc::format!(
            "series of length {n} too short for lag {lag}"
        )));
    }
    // usable pairs (j, j + lag) for j in 0..window
    Ok(n - lag)
}

/// Nadaraya–Watson weights for lag `lag`: one weight per usable index
/// `j < len − lag`, summing to one.
pub fn nadaraya_watson_weights(series: &Trajectory, xi: &[f64], lag: usize, kappa: f64) -> Result<Vec<f64>> {
    let window = check_series(series, xi, lag, kappa)?;
    let norm = kernel_norm(series.dim());
    let inv = 1.0 / kappa;
    let mut w: Vec<f64> = (0..window).map(|j| kernel(series.state(j), xi, inv, norm)).collect();
    let den: f64 = w.iter().sum();
    if den < ZERO_DENOMINATOR {
        let u = 1.0 / window as f64;
        w.iter_mut().for_each(|v| *v = u);
    } else {
        w.iter_mut().for_each(|v| *v /= den);
    }
    Ok(w)
}

/// Nadaraya–Watson estimate of `E f(X(τ)) | X(0) = ξ` with `τ = lag·h`:
/// `Σⱼ wⱼ(ξ) f(series[j + lag])`.
pub fn nadaraya_watson_moment(
    series: &Trajectory,
    xi: &[f64],
    lag: usize,
    f: impl Fn(&[f64]) -> f64,
    kappa: f64,
) -> Result<f64> {
    let w = nadaraya_watson_weights(series, xi, lag, kappa)?;
    Ok(w.iter().enumerate().map(|(j, wj)| wj * f(series.state(j + lag))).sum())
}

/// Batched Nadaraya–Watson estimates at lags `q·stride`, `q = 0..n_nodes`,
/// for several functions at once.
///
/// `integrands[f][j]` holds the value of function `f` at `series[j]`. Each
/// lag uses its own usable window and normalization, exactly as
/// [`nadaraya_watson_moment`]; kernel terms that are negligible relative to
/// the largest one are skipped. Returns `[f][q]`.
pub fn nadaraya_watson_curves(
    series: &Trajectory,
    xi: &[f64],
    stride: usize,
    n_nodes: usize,
    integrands: &[&[f64]],
    kappa: f64,
) -> Result<Vec<Vec<f64>>> {
    if stride == 0 || n_nodes == 0 {
        return Err(Error::invalid("need a positive stride and at least one node"));
    }
    let max_lag = (n_nodes - 1) * stride;
    check_series(series, xi, max_lag, kappa)?;
    let n = series.len();
    for g in integrands {
        Error::check_dim("integrand values", n, g.len())?;
    }
    let inv = 1.0 / kappa;
    let norm = kernel_norm(series.dim());

    let log_w: Vec<f64> = series.iter().map(|x| log_kernel(x, xi, inv)).collect();
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = top - LOG_WEIGHT_CUTOFF;

    let mut acc = vec![vec![0.0; n_nodes]; integrands.len()];
    // den[q] = Σ w_j over kept j with j + q·stride < n, via a tail-difference array
    let mut den_drop = vec![0.0; n_nodes + 1];
    let mut total = 0.0;
    for (j, &lw) in log_w.iter().enumerate() {
        if lw <= floor {
            continue;
        }
        let w = norm * math::exp(lw);
        if w == 0.0 {
            continue;
        }
        let reach = (n - 1 - j) / stride + 1;
        let q_max = reach.min(n_nodes);
        total += w;
        den_drop[q_max] += w;
        for (a, g) in acc.iter_mut().zip(integrands) {
            let a = &mut a[..q_max];
            if stride == 1 {
                for (aq, gv) in a.iter_mut().zip(&g[j..j + q_max]) {
                    *aq += w * gv;
                }
            } else {
                for (aq, gv) in a.iter_mut().zip(g[j..].iter().step_by(stride)) {
                    *aq += w * gv;
                }
            }
        }
    }

    let mut den = total;
    for q in 0..n_nodes {
        den -= den_drop[q];
        let lag = q * stride;
        if den < ZERO_DENOMINATOR {
            // recompute this lag exactly, including the uniform fallback
            let w = nadaraya_watson_weights(series, xi, lag, kappa)?;
            for (a, g) in acc.iter_mut().zip(integrands) {
                a[q] = w.iter().enumerate().map(|(j, wj)| wj * g[j + lag]).sum();
            }
        } else {
            for a in acc.iter_mut() {
                a[q] /= den;
            }
        }
    }
    Ok(acc)
}

/// Per-coordinate sample standard deviation of a series.
pub fn series_scale(series: &Trajectory) -> Vec<f64> {
    let d = series.dim();
    let n = series.len() as f64;
    let mut mean = vec![0.0; d];
    for s in series.iter() {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for s in series.iter() {
        for ((acc, v), m) in var.iter_mut().zip(s).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    var.iter().map(|v| math::sqrt(v / (n - 1.0).max(1.0))).collect()
}

/// Plug-in bandwidth `κ = s · N^{−1/(d+4)}` with `s` the geometric mean of
/// the per-coordinate scales.
pub fn default_bandwidth(n: usize, scale: &[f64]) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("bandwidth needs at least two samples"));
    }
    if scale.is_empty() || scale.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::invalid("bandwidth scales must be positive"));
    }
    let d = scale.len() as f64;
    let log_mean = scale.iter().map(|s| math::ln(*s)).sum::<f64>() / d;
    Ok(math::exp(log_mean) * math::powf(n as f64, -1.0 / (d + 4.0)))
}

/// Composite trapezoidal rule `(δ/2)(v₀ + vₙ + 2 Σ_{k=1}^{n−1} v_k)`.
pub fn trapezoid_integrate(values: &[f64], delta: f64) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::invalid("trapezoid rule needs at least two values"));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid("quadrature step must be positive"));
    }
    let n = values.len() - 1;
    let inner: f64 = values[1..n].iter().sum();
    Ok(0.5 * delta * (values[0] + values[n] + 2.0 * inner))
}

/// Node count and stride for a moment curve on `[0, t]` with `δ = stride·h`.
fn grid(t: f64, h: f64, stride: usize) -> Result<usize> {
    if stride == 0 {
        return Err(Error::invalid("stride must be at least one"));
    }
    let delta = stride as f64 * h;
    Ok(steps_for(t, delta)? + 1)
}

fn trial_index(obs: &EnsembleObservations, xi: &[f64]) -> Result<usize> {
    obs.trial_points()
        .iter()
        .position(|p| p.as_slice() == xi)
        .ok_or_else(|| Error::invalid("trial point not present in the ensemble"))
}

/// Moment curve of a single function `f` on `[0, t]` with spacing
/// `δ = stride · h`. Ensembles are looked up by trial point; single series
/// use the kernel estimator with `bandwidth` (default plug-in if `None`).
pub fn moment_curve(
    obs: &ObservationSet,
    xi: &[f64],
    f: impl Fn(&[f64]) -> f64,
    t: f64,
    stride: usize,
    bandwidth: Option<f64>,
) -> Result<MomentCurve> {
    let nodes = grid(t, obs.h(), stride)?;
    let delta = stride as f64 * obs.h();
    let values = match obs {
        ObservationSet::Ensemble(e) => {
            let i = trial_index(e, xi)?;
            let last = (nodes - 1) * stride;
            if last > e.n_steps() {
                return Err(Error::invalid("moment horizon exceeds the ensemble horizon"));
            }
            (0..nodes)
                .map(|q| ensemble_moment(e, i, q * stride, &f))
                .collect::<Result<Vec<_>>>()?
        }
        ObservationSet::SingleSeries(s) => {
            let kappa = match bandwidth {
                Some(k) => k,
                None => default_bandwidth(s.len(), &series_scale(s))?,
            };
            (0..nodes)
                .map(|q| nadaraya_watson_moment(s, xi, q * stride, &f, kappa))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(MomentCurve {
        xi: xi.to_vec(),
        delta,
        values,
    })
}

/// Evaluates `[φ, 𝓛₁φ, …, 𝓛ₙφ]` at every state of `series`; returns `[f][j]`.
pub fn series_integrands(
    series: &Trajectory,
    model: &ParametrizedModel,
    phi: &dyn AdmissibleFunction,
) -> Result<Vec<Vec<f64>>> {
    Error::check_dim("series dimension", model.dim(), series.dim())?;
    let mut eval = GeneratorEvaluator::new(model, phi)?;
    let width = eval.width();
    let mut out = vec![Vec::with_capacity(series.len()); width];
    let mut buf = vec![0.0; width];
    for x in series.iter() {
        eval.evaluate(x, &mut buf);
        for (o, v) in out.iter_mut().zip(&buf) {
            o.push(*v);
        }
    }
    Ok(out)
}

/// Kernel-regression moment table at `xi` from precomputed integrands.
pub fn series_moment_table(
    series: &Trajectory,
    integrands: &[Vec<f64>],
    sup_bound: f64,
    xi: &[f64],
    t: f64,
    stride: usize,
    kappa: f64,
) -> Result<MomentTable> {
    let nodes = grid(t, series.h(), stride)?;
    let refs: Vec<&[f64]> = integrands.iter().map(|v| v.as_slice()).collect();
    let curves = nadaraya_watson_curves(series, xi, stride, nodes, &refs, kappa)?;
    let bound_violations = curves[0].iter().filter(|v| math::abs(**v) > sup_bound).count();
    Ok(MomentTable {
        xi: xi.to_vec(),
        delta: stride as f64 * series.h(),
        curves,
        bound_violations,
    })
}

fn check_ensemble_bound(curves: &[Vec<f64>], sup_bound: f64) -> Result<()> {
    if curves[0].iter().any(|v| math::abs(*v) > sup_bound) {
        return Err(Error::invalid(
            "ensemble average of the test function exceeds its declared bound",
        ));
    }
    Ok(())
}

/// Moment table at `xi` for φ and every `𝓛ⱼφ` on `[0, t]`.
pub fn moment_table(
    obs: &ObservationSet,
    model: &ParametrizedModel,
    phi: &dyn AdmissibleFunction,
    xi: &[f64],
    t: f64,
    stride: usize,
    bandwidth: Option<f64>,
) -> Result<MomentTable> {
    match obs {
        ObservationSet::Ensemble(e) => {
            let nodes = grid(t, e.h(), stride)?;
            if (nodes - 1) * stride > e.n_steps() {
                return Err(Error::invalid("moment horizon exceeds the ensemble horizon"));
            }
            let i = trial_index(e, xi)?;
            let mut eval = GeneratorEvaluator::new(model, phi)?;
            let width = eval.width();
            let mut curves = vec![vec![0.0; nodes]; width];
            let mut buf = vec![0.0; width];
            for q in 0..nodes {
                for x in e.states_at(i, q * stride) {
                    eval.evaluate(x, &mut buf);
                    for (c, v) in curves.iter_mut().zip(&buf) {
                        c[q] += v;
                    }
                }
            }
            let inv = e.members() as f64;
            curves.iter_mut().flatten().for_each(|v| *v /= inv);
            check_ensemble_bound(&curves, phi.sup_bound())?;
            Ok(MomentTable {
                xi: xi.to_vec(),
                delta: stride as f64 * e.h(),
                curves,
                bound_violations: 0,
            })
        }
        ObservationSet::SingleSeries(s) => {
            let kappa = match bandwidth {
                Some(k) => k,
                None => default_bandwidth(s.len(), &series_scale(s))?,
            };
            let integrands = series_integrands(s, model, phi)?;
            series_moment_table(s, &integrands, phi.sup_bound(), xi, t, stride, kappa)
        }
    }
}

/// Simulates `members` trajectories of `system` from `xi` and reduces them
/// straight into a moment table, without storing the paths.
///
/// Produces bit-for-bit the table that [`moment_table`] computes from
/// [`crate::simulate::generate_observations`] with the same seed and trial
/// index.
#[allow(clippy::too_many_arguments)]
pub fn ensemble_moment_table<S: SdeSystem + ?Sized>(
    system: &S,
    model: &ParametrizedModel,
    phi: &dyn AdmissibleFunction,
    xi: &[f64],
    trial: usize,
    members: usize,
    horizon: f64,
    h: f64,
    stride: usize,
    seed: u64,
) -> Result<MomentTable> {
    if members == 0 {
        return Err(Error::invalid("empty ensemble"));
    }
    let nodes = grid(horizon, h, stride)?;
    let n_steps = (nodes - 1) * stride;
    let mut eval = GeneratorEvaluator::new(model, phi)?;
    let width = eval.width();
    let mut curves = vec![vec![0.0; nodes]; width];
    let mut buf = vec![0.0; width];
    for k in 0..members {
        simulate_member(system, xi, h, n_steps, seed, trial, k, |step, x| {
            if step % stride == 0 {
                eval.evaluate(x, &mut buf);
                let q = step / stride;
                for (c, v) in curves.iter_mut().zip(&buf) {
                    c[q] += v;
                }
            }
        })?;
    }
    let inv = members as f64;
    curves.iter_mut().flatten().for_each(|v| *v /= inv);
    check_ensemble_bound(&curves, phi.sup_bound())?;
    Ok(MomentTable {
        xi: xi.to_vec(),
        delta: stride as f64 * h,
        curves,
        bound_violations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GaussianBump;

    fn series(values: &[f64], h: f64) -> Trajectory {
        Trajectory::new(0.0, h, 1, values.to_vec()).unwrap()
    }

    #[test]
    fn trapezoid_constant_and_affine() {
        let c = vec![2.5; 11];
        assert!((trapezoid_integrate(&c, 0.1).unwrap() - 2.5).abs() < 1e-15);
        let ramp: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        assert!((trapezoid_integrate(&ramp, 0.1).unwrap() - 0.5).abs() < 1e-15);
        assert!(trapezoid_integrate(&[1.0], 0.1).is_err());
        assert!(trapezoid_integrate(&[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn bandwidth_plug_in() {
        let k = default_bandwidth(10_000, &[1.0]).unwrap();
        assert!((k - 10f64.powf(-0.8)).abs() < 1e-15);
        assert!((k - 0.1585).abs() < 1e-4);
        let k2 = default_bandwidth(10_000, &[2.0]).unwrap();
        assert!((k2 - 2.0 * k).abs() < 1e-15);
        assert!(default_bandwidth(1, &[1.0]).is_err());
    }

    #[test]
    fn nw_weights_sum_to_one() {
        let s = series(&[0.0, 0.3, -0.2, 1.1, 0.5, -0.7, 0.05, 0.4], 0.1);
        for lag in 0..6 {
            let w = nadaraya_watson_weights(&s, &[0.1], lag, 0.3).unwrap();
            assert_eq!(w.len(), 8 - lag);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nw_concentrates_on_single_match() {
        let mut v = vec![100.0; 50];
        v[10] = 0.0;
        v[11] = 5.0;
        let s = series(&v, 0.1);
        let phi = GaussianBump::new(1);
        let est = nadaraya_watson_moment(&s, &[0.0], 1, |x| phi.value(x), 0.1).unwrap();
        assert!((est - phi.value(&[5.0])).abs() < 1e-15);
    }

    #[test]
    fn nw_constant_series() {
        let s = series(&[0.8; 20], 0.1);
        let phi = GaussianBump::new(1);
        for xi in [-3.0, 0.0, 0.8, 50.0] {
            for kappa in [1e-3, 0.5, 10.0] {
                let est = nadaraya_watson_moment(&s, &[xi], 3, |x| phi.value(x), kappa).unwrap();
                assert!((est - phi.value(&[0.8])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn nw_uniform_fallback_when_far_away() {
        let s = series(&[0.0, 1.0, 2.0, 3.0], 0.1);
        let w = nadaraya_watson_weights(&s, &[1e6], 0, 0.01).unwrap();
        assert!(w.iter().all(|v| (*v - 0.25).abs() < 1e-15));
        let b = nadaraya_watson_curves(&s, &[1e6], 1, 2, &[&[0.0, 1.0, 2.0, 3.0]], 0.01).unwrap();
        assert!((b[0][0] - 1.5).abs() < 1e-15);
        assert!((b[0][1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn nw_rejects_short_series() {
        let s = series(&[0.0, 1.0, 2.0], 0.1);
        assert!(nadaraya_watson_moment(&s, &[0.0], 2, |x| x[0], 0.1).is_err());
        assert!(nadaraya_watson_moment(&s, &[0.0], 1, |x| x[0], 0.1).is_ok());
        assert!(nadaraya_watson_moment(&s, &[0.0], 0, |x| x[0], 0.0).is_err());
    }

    #[test]
    fn batched_matches_single_lag() {
        // pseudo-random walk without pulling in an RNG
        let mut v = Vec::new();
        let mut x = 0.0f64;
        for k in 0..2000 {
            x = 0.95 * x + ((k as f64 * 12.9898).sin() * 43758.5453).fract() - 0.5;
            v.push(x);
        }
        let s = series(&v, 0.01);
        let g: Vec<f64> = v.iter().map(|x| (-0.5 * x * x).exp()).collect();
        for stride in [1, 3] {
            let b = nadaraya_watson_curves(&s, &[0.2], stride, 40, &[&g], 0.15).unwrap();
            for (q, batched) in b[0].iter().enumerate() {
                let single =
                    nadaraya_watson_moment(&s, &[0.2], q * stride, |x| (-0.5 * x[0] * x[0]).exp(), 0.15).unwrap();
                assert!((batched - single).abs() < 1e-12, "stride {stride} q {q}");
            }
        }
    }
}
