//! Observation data: Euler–Maruyama integration of generic and multiscale
//! systems, an exact Ornstein–Uhlenbeck sampler, and closed-form
//! homogenized coefficients for the bundled test systems.

mod homogenize;
mod observations;
mod ou_exact;
mod systems;

pub use homogenize::{
    bessel_i0, homogenized_2d_coefficients, homogenized_langevin_coefficients, langevin1d_cosine_theta, Homogenized2d,
    HOMOGENIZATION_PANELS,
};
pub use observations::{
    generate_observations, simulate_member, simulate_series, Design, EnsembleObservations, ObservationSet,
    DEFAULT_BURN_IN,
};
pub use ou_exact::{ou_exact_path, sample_ou_exact};
pub use systems::{
    make_fast_ou_system, make_langevin_1d_system, make_langevin_2d_system, FastOuSystem, FnSystem, Langevin1dSystem,
    Langevin2dSystem, OuSystem, ScalarFunction,
};

use alloc::vec;
use alloc::vec::Vec;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math;
use crate::rng::Rng;

/// Any state component beyond this magnitude aborts a simulation.
pub const BLOWUP_THRESHOLD: f64 = 1e8;

/// Itô SDE `dX = f(X) dt + g(X) dW` with `X ∈ ℝ^dim_state`, `W ∈ ℝ^dim_noise`.
pub trait SdeSystem: Send + Sync {
    fn dim_state(&self) -> usize;

    fn dim_noise(&self) -> usize;

    fn drift(&self, x: &[f64], out: &mut [f64]);

    /// Row-major `dim_state × dim_noise` matrix.
    fn diffusion(&self, x: &[f64], out: &mut [f64]);

    fn label(&self) -> &str;

    /// Observations only see the leading `observed_dim` components; for
    /// multiscale systems these are the slow variables.
    fn observed_dim(&self) -> usize {
        self.dim_state()
    }

    /// Full initial state for a run whose observed part starts at `xi`.
    /// Unobserved components start from their stationary law where one is
    /// known, otherwise at zero.
    fn initial_state(&self, xi: &[f64], _rng: &mut Rng, out: &mut [f64]) {
        out.fill(0.0);
        out[..xi.len()].copy_from_slice(xi);
    }
}

/// Uniformly sampled path; `state(k) ≈ X(t0 + k h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t0: f64,
    h: f64,
    dim: usize,
    states: Vec<f64>,
}

impl Trajectory {
    pub fn new(t0: f64, h: f64, dim: usize, states: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::invalid("trajectory step must be positive"));
        }
        if dim == 0 || states.is_empty() || !states.len().is_multiple_of(dim) {
            return Err(Error::invalid(
                "trajectory needs at least one state of the given dimension",
            ));
        }
        if states.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("trajectory states must be finite"));
        }
        Ok(Trajectory { t0, h, dim, states })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of states.
    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn iter(&self) -> core::slice::ChunksExact<'_, f64> {
        self.states.chunks_exact(self.dim)
    }

    /// Keeps the leading `dim` components of every state.
    pub fn project(&self, dim: usize) -> Trajectory {
        if dim == self.dim {
            return self.clone();
        }
        let states = self.iter().flat_map(|s| s[..dim].iter().copied()).collect();
        Trajectory {
            t0: self.t0,
            h: self.h,
            dim,
            states,
        }
    }
}

/// Reusable Euler–Maruyama stepper:
/// `x ← x + f(x) h + g(x) √h η`, `η ~ N(0, I)`.
pub struct EulerMaruyama<'a, S: SdeSystem + ?Sized> {
    system: &'a S,
    h: f64,
    sqrt_h: f64,
    drift: Vec<f64>,
    diff: Vec<f64>,
    noise: Vec<f64>,
}

impl<'a, S: SdeSystem + ?Sized> EulerMaruyama<'a, S> {
    pub fn new(system: &'a S, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::invalid("step size must be positive"));
        }
        let (d, r) = (system.dim_state(), system.dim_noise());
        Ok(EulerMaruyama {
            system,
            h,
            sqrt_h: math::sqrt(h),
            drift: vec![0.0; d],
            diff: vec![0.0; d * r],
            noise: vec![0.0; r],
        })
    }

    /// Advances `x` by one step. `step` is the index of the new state and
    /// is only used for error reporting.
    #[inline]
    pub fn step(&mut self, x: &mut [f64], rng: &mut Rng, step: usize) -> Result<()> {
        let r = self.noise.len();
        self.system.drift(x, &mut self.drift);
        self.system.diffusion(x, &mut self.diff);
        for eta in self.noise.iter_mut() {
            *eta = StandardNormal.sample(rng);
        }
        let mut ok = true;
        for (i, xi) in x.iter_mut().enumerate() {
            let row = &self.diff[i * r..(i + 1) * r];
            let stoch: f64 = row.iter().zip(&self.noise).map(|(g, e)| g * e).sum();
            *xi += self.drift[i] * self.h + stoch * self.sqrt_h;
            ok &= xi.is_finite() && math::abs(*xi) <= BLOWUP_THRESHOLD;
        }
        if ok {
            Ok(())
        } else {
            Err(Error::SimulationBlowup { step })
        }
    }
}

/// Integrates `system` from `x0` for `n_steps` steps of size `h`.
///
/// The returned trajectory has `n_steps + 1` full states. Identical RNG
/// state gives a bit-identical trajectory.
pub fn euler_maruyama<S: SdeSystem + ?Sized>(
    system: &S,
    x0: &[f64],
    h: f64,
    n_steps: usize,
    rng: &mut Rng,
) -> Result<Trajectory> {
    let d = system.dim_state();
    Error::check_dim("initial state", d, x0.len())?;
    let mut stepper = EulerMaruyama::new(system, h)?;
    let mut states = Vec::with_capacity((n_steps + 1) * d);
    states.extend_from_slice(x0);
    let mut x = x0.to_vec();
    for k in 0..n_steps {
        stepper.step(&mut x, rng, k + 1)?;
        states.extend_from_slice(&x);
    }
    Trajectory::new(0.0, h, d, states)
}

/// Converts `t / h` to an integer step count, rejecting non-multiples.
pub fn steps_for(t: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) || !(t >= 0.0) {
        return Err(Error::invalid("time and step must be nonnegative/positive"));
    }
    let n = libm::round(t / h);
    if math::abs(n * h - t) > 1e-9 * t.max(h) {
        return Err(Error::InvalidArgument(alloc::format!(
            "time {t} is not a multiple of step {h}"
        )));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn zero_system_is_constant() {
        let sys = OuSystem::new(0.0, 0.0);
        let mut rng = stream(1, 0);
        let tr = euler_maruyama(&sys, &[1.0], 0.01, 50, &mut rng).unwrap();
        assert_eq!(tr.len(), 51);
        assert!(tr.iter().all(|s| s[0] == 1.0));
    }

    #[test]
    fn deterministic_decay_matches_exponential() {
        let sys = OuSystem::new(-1.0, 0.0);
        let mut rng = stream(1, 0);
        let tr = euler_maruyama(&sys, &[1.0], 1e-3, 1000, &mut rng).unwrap();
        let end = tr.state(1000)[0];
        assert!((end - (-1.0f64).exp()).abs() <= 5e-4, "{end}");
    }

    #[test]
    fn same_seed_same_path() {
        let sys = make_langevin_1d_system(2.0, 1.0, 0.1).unwrap();
        let a = euler_maruyama(&sys, &[0.3], 1e-3, 500, &mut stream(9, 2)).unwrap();
        let b = euler_maruyama(&sys, &[0.3], 1e-3, 500, &mut stream(9, 2)).unwrap();
        assert_eq!(a, b);
        let c = euler_maruyama(&sys, &[0.3], 1e-3, 500, &mut stream(9, 3)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn blowup_reports_step() {
        let sys = OuSystem::new(2000.0, 0.0);
        let err = euler_maruyama(&sys, &[1.0], 1.0, 10, &mut stream(1, 0)).unwrap_err();
        // x_k = 2001^k exceeds 1e8 at k = 3.
        assert_eq!(err, Error::SimulationBlowup { step: 3 });
    }

    #[test]
    fn rejects_bad_step() {
        let sys = OuSystem::new(-1.0, 1.0);
        assert!(euler_maruyama(&sys, &[0.0], 0.0, 1, &mut stream(1, 0)).is_err());
        assert!(euler_maruyama(&sys, &[0.0, 1.0], 0.1, 1, &mut stream(1, 0)).is_err());
    }

    #[test]
    fn step_count_conversion() {
        assert_eq!(steps_for(0.5, 1e-3).unwrap(), 500);
        assert_eq!(steps_for(5000.0, 1e-3).unwrap(), 5_000_000);
        assert!(steps_for(0.0105, 1e-2).is_err());
    }
}
