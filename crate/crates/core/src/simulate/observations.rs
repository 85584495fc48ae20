use alloc::vec;
use alloc::vec::Vec;

use super::{steps_for, EulerMaruyama, SdeSystem, Trajectory};
use crate::error::{Error, Result};
use crate::rng::{ensemble_stream_id, stream, SERIES_STREAM};

/// Default burn-in discarded before a single series is recorded.
pub const DEFAULT_BURN_IN: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    /// `members` independent runs of length `horizon` from every trial point.
    Ensemble {
        xi_points: Vec<Vec<f64>>,
        members: usize,
        horizon: f64,
        h: f64,
    },
    /// One long run: `total_time / h` samples recorded after `burn_in`.
    SingleSeries {
        total_time: f64,
        h: f64,
        burn_in: f64,
        x0: Vec<f64>,
    },
}

/// Ensemble of observed trajectories, stored `[trial][member][step][dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleObservations {
    h: f64,
    dim: usize,
    n_steps: usize,
    members: usize,
    trial_points: Vec<Vec<f64>>,
    data: Vec<f64>,
}

impl EnsembleObservations {
    pub fn new(
        h: f64,
        dim: usize,
        n_steps: usize,
        members: usize,
        trial_points: Vec<Vec<f64>>,
        data: Vec<f64>,
    ) -> Result<Self> {
        if !(h > 0.0) || dim == 0 || members == 0 || trial_points.is_empty() {
            return Err(Error::invalid("ensemble needs h > 0, d ≥ 1, N ≥ 1 and m ≥ 1"));
        }
        Error::check_dim(
            "ensemble data",
            trial_points.len() * members * (n_steps + 1) * dim,
            data.len(),
        )?;
        let obs = EnsembleObservations {
            h,
            dim,
            n_steps,
            members,
            trial_points,
            data,
        };
        for (i, xi) in obs.trial_points.iter().enumerate() {
            Error::check_dim("trial point", dim, xi.len())?;
            for k in 0..members {
                if obs.state(i, k, 0) != xi.as_slice() {
                    return Err(Error::invalid("ensemble member does not start at its trial point"));
                }
            }
        }
        Ok(obs)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn members(&self) -> usize {
        self.members
    }

    pub fn trial_points(&self) -> &[Vec<f64>] {
        &self.trial_points
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Flattened states of member `k` of trial point `i`.
    pub fn trajectory(&self, i: usize, k: usize) -> &[f64] {
        let len = (self.n_steps + 1) * self.dim;
        let start = (i * self.members + k) * len;
        &self.data[start..start + len]
    }

    pub fn state(&self, i: usize, k: usize, step: usize) -> &[f64] {
        let tr = self.trajectory(i, k);
        &tr[step * self.dim..(step + 1) * self.dim]
    }

    /// States of all members of trial point `i` at `step`, in member order.
    pub fn states_at(&self, i: usize, step: usize) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.members).map(move |k| self.state(i, k, step))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservationSet {
    Ensemble(EnsembleObservations),
    SingleSeries(Trajectory),
}

impl ObservationSet {
    pub fn h(&self) -> f64 {
        match self {
            ObservationSet::Ensemble(e) => e.h(),
            ObservationSet::SingleSeries(s) => s.h(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ObservationSet::Ensemble(e) => e.dim(),
            ObservationSet::SingleSeries(s) => s.dim(),
        }
    }

    /// Latest time (relative to the start of a run) with observations.
    pub fn horizon(&self) -> f64 {
        match self {
            ObservationSet::Ensemble(e) => e.n_steps() as f64 * e.h(),
            ObservationSet::SingleSeries(s) => (s.len() - 1) as f64 * s.h(),
        }
    }
}

/// Simulates one ensemble member: `n_steps` Euler–Maruyama steps from
/// `xi`, calling `visit(step, observed_state)` for steps `0..=n_steps`.
///
/// Uses stream `ensemble_stream_id(trial, member)` of `seed`, so members
/// are reproducible independently of evaluation order.
#[allow(clippy::too_many_arguments)]
pub fn simulate_member<S, F>(
    system: &S,
    xi: &[f64],
    h: f64,
    n_steps: usize,
    seed: u64,
    trial: usize,
    member: usize,
    mut visit: F,
) -> Result<()>
where
    S: SdeSystem + ?Sized,
    F: FnMut(usize, &[f64]),
{
    let obs = system.observed_dim();
    Error::check_dim("trial point", obs, xi.len())?;
    let mut rng = stream(seed, ensemble_stream_id(trial, member));
    let mut x = vec![0.0; system.dim_state()];
    system.initial_state(xi, &mut rng, &mut x);
    let mut stepper = EulerMaruyama::new(system, h)?;
    visit(0, &x[..obs]);
    for k in 1..=n_steps {
        stepper.step(&mut x, &mut rng, k)?;
        visit(k, &x[..obs]);
    }
    Ok(())
}

/// Runs the single-series design, calling `visit` on every recorded state.
pub fn simulate_series<S, F>(
    system: &S,
    x0: &[f64],
    h: f64,
    burn_in_steps: usize,
    samples: usize,
    seed: u64,
    mut visit: F,
) -> Result<()>
where
    S: SdeSystem + ?Sized,
    F: FnMut(&[f64]),
{
    let obs = system.observed_dim();
    Error::check_dim("series start", obs, x0.len())?;
    if samples < 2 {
        return Err(Error::invalid("a series needs at least two samples"));
    }
    let mut rng = stream(seed, SERIES_STREAM);
    let mut x = vec![0.0; system.dim_state()];
    system.initial_state(x0, &mut rng, &mut x);
    let mut stepper = EulerMaruyama::new(system, h)?;
    for k in 1..=burn_in_steps {
        stepper.step(&mut x, &mut rng, k)?;
    }
    visit(&x[..obs]);
    for k in 1..samples {
        stepper.step(&mut x, &mut rng, burn_in_steps + k)?;
        visit(&x[..obs]);
    }
    Ok(())
}

/// Generates observations of the observed (slow) components of `system`.
pub fn generate_observations<S: SdeSystem + ?Sized>(system: &S, design: &Design, seed: u64) -> Result<ObservationSet> {
    let dim = system.observed_dim();
    match design {
        Design::Ensemble {
            xi_points,
            members,
            horizon,
            h,
        } => {
            let n_steps = steps_for(*horizon, *h)?;
            if *members == 0 || xi_points.is_empty() {
                return Err(Error::invalid("ensemble needs N ≥ 1 and at least one trial point"));
            }
            let mut data = Vec::with_capacity(xi_points.len() * members * (n_steps + 1) * dim);
            for (i, xi) in xi_points.iter().enumerate() {
                for k in 0..*members {
                    simulate_member(system, xi, *h, n_steps, seed, i, k, |_, s| data.extend_from_slice(s))?;
                }
            }
            Ok(ObservationSet::Ensemble(EnsembleObservations::new(
                *h,
                dim,
                n_steps,
                *members,
                xi_points.clone(),
                data,
            )?))
        }
        Design::SingleSeries {
            total_time,
            h,
            burn_in,
            x0,
        } => {
            if !(*burn_in >= 0.0) || !(burn_in < total_time) {
                return Err(Error::invalid(
                    "burn-in must be nonnegative and shorter than the series",
                ));
            }
            let samples = steps_for(*total_time, *h)?;
            let burn = steps_for(*burn_in, *h)?;
            let mut data = Vec::with_capacity(samples * dim);
            simulate_series(system, x0, *h, burn, samples, seed, |s| data.extend_from_slice(s))?;
            Ok(ObservationSet::SingleSeries(Trajectory::new(*burn_in, *h, dim, data)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{FastOuSystem, OuSystem};

    #[test]
    fn ensemble_shape_and_starts() {
        let sys = FastOuSystem::ou(-0.5, 0.5, 0.1).unwrap();
        let design = Design::Ensemble {
            xi_points: vec![vec![0.5], vec![-1.0], vec![2.0]],
            members: 4,
            horizon: 0.05,
            h: 1e-3,
        };
        let obs = generate_observations(&sys, &design, 42).unwrap();
        let ObservationSet::Ensemble(e) = &obs else {
            panic!("expected ensemble")
        };
        assert_eq!(e.dim(), 1);
        assert_eq!(e.n_steps(), 50);
        assert_eq!(e.data().len(), 3 * 4 * 51);
        assert_eq!(e.state(1, 3, 0), &[-1.0]);
        assert_eq!(obs, generate_observations(&sys, &design, 42).unwrap());
        assert_ne!(obs, generate_observations(&sys, &design, 43).unwrap());
    }

    #[test]
    fn noiseless_members_coincide() {
        let sys = OuSystem::new(-1.0, 0.0);
        let design = Design::Ensemble {
            xi_points: vec![vec![1.0]],
            members: 3,
            horizon: 0.1,
            h: 0.01,
        };
        let ObservationSet::Ensemble(e) = generate_observations(&sys, &design, 1).unwrap() else {
            unreachable!()
        };
        assert_eq!(e.trajectory(0, 0), e.trajectory(0, 2));
        assert!((e.state(0, 0, 10)[0] - 0.99f64.powi(10)).abs() < 1e-15);
    }

    #[test]
    fn series_length_and_burn_in() {
        let sys = OuSystem::new(-1.0, 1.0);
        let design = Design::SingleSeries {
            total_time: 5.0,
            h: 1e-2,
            burn_in: 1.0,
            x0: vec![0.0],
        };
        let ObservationSet::SingleSeries(s) = generate_observations(&sys, &design, 7).unwrap() else {
            unreachable!()
        };
        assert_eq!(s.len(), 500);
        assert_eq!(s.t0(), 1.0);
        let bad = Design::SingleSeries {
            total_time: 5.0,
            h: 1e-2,
            burn_in: 5.0,
            x0: vec![0.0],
        };
        assert!(generate_observations(&sys, &bad, 7).is_err());
    }

    #[test]
    fn horizon_must_be_grid_multiple() {
        let sys = OuSystem::new(-1.0, 1.0);
        let design = Design::Ensemble {
            xi_points: vec![vec![0.0]],
            members: 1,
            horizon: 0.0105,
            h: 1e-2,
        };
        assert!(generate_observations(&sys, &design, 7).is_err());
    }
}
