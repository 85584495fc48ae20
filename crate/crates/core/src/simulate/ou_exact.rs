use alloc::vec::Vec;
use rand_distr::{Distribution, StandardNormal};

use super::Trajectory;
use crate::error::{Error, Result};
use crate::math;
use crate::rng::Rng;

/// Exact transition of `dX = A X dt + √(2Σ) dW` over time `t`:
/// a draw from `N(x0 e^{At}, Σ (1 − e^{2At}) / |A|)`. Requires `A < 0`.
pub fn sample_ou_exact(a: f64, sigma_cap: f64, x0: f64, t: f64, rng: &mut Rng) -> Result<f64> {
    if !(a < 0.0) {
        return Err(Error::invalid("exact OU sampler requires A < 0"));
    }
    if !(t > 0.0) || !(sigma_cap >= 0.0) {
        return Err(Error::invalid("exact OU sampler requires t > 0 and Σ ≥ 0"));
    }
    let decay = math::exp(a * t);
    // 1 − e^{2At} without cancellation for small t
    let var = sigma_cap * -libm::expm1(2.0 * a * t) / -a;
    let eta: f64 = StandardNormal.sample(rng);
    Ok(x0 * decay + math::sqrt(var) * eta)
}

/// Path of exact OU transitions on a uniform grid.
pub fn ou_exact_path(a: f64, sigma_cap: f64, x0: f64, h: f64, n_steps: usize, rng: &mut Rng) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut x = x0;
    states.push(x);
    for _ in 0..n_steps {
        x = sample_ou_exact(a, sigma_cap, x, h, rng)?;
        states.push(x);
    }
    Trajectory::new(0.0, h, 1, states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn tiny_time_stays_put() {
        let x = sample_ou_exact(-0.5, 0.5, 1.3, 1e-12, &mut stream(1, 1)).unwrap();
        assert!((x - 1.3).abs() < 1e-5);
    }

    #[test]
    fn rejects_unstable_drift() {
        assert!(sample_ou_exact(0.0, 0.5, 0.0, 1.0, &mut stream(1, 1)).is_err());
        assert!(sample_ou_exact(0.3, 0.5, 0.0, 1.0, &mut stream(1, 1)).is_err());
    }

    #[test]
    fn stationary_variance() {
        let mut rng = stream(11, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_ou_exact(-0.5, 0.5, 0.0, 20.0, &mut rng).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        // SE of a Gaussian sample variance: σ²√(2/(n−1))
        let se = (2.0 / (n - 1) as f64).sqrt();
        assert!((var - 1.0).abs() < 3.0 * se, "var = {var}");
    }

    #[test]
    fn reproducible() {
        let a = sample_ou_exact(-1.0, 1.0, 0.5, 0.3, &mut stream(5, 5)).unwrap();
        let b = sample_ou_exact(-1.0, 1.0, 0.5, 0.3, &mut stream(5, 5)).unwrap();
        assert_eq!(a, b);
    }
}
