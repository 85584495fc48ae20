use alloc::boxed::Box;
use alloc::string::String;

use rand_distr::{Distribution, StandardNormal};

use super::SdeSystem;
use crate::error::{Error, Result};
use crate::math;
use crate::model::fd_step;
use crate::rng::Rng;

pub type ScalarFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Scalar function with an optional analytic derivative; without one the
/// derivative falls back to a central difference.
pub struct ScalarFunction {
    value: ScalarFn,
    derivative: Option<ScalarFn>,
}

impl ScalarFunction {
    pub fn new(value: ScalarFn, derivative: Option<ScalarFn>) -> Self {
        ScalarFunction { value, derivative }
    }

    pub fn constant(c: f64) -> Self {
        ScalarFunction::new(Box::new(move |_| c), Some(Box::new(|_| 0.0)))
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.derivative {
            Some(d) => d(x),
            None => {
                let h = fd_step(x);
                ((self.value)(x + h) - (self.value)(x - h)) / (2.0 * h)
            }
        }
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }
}

/// Slow variable driven by fast Ornstein–Uhlenbeck noise:
///
/// ```text
/// dX = ( σ(X) Y / ε + h(X, Y) − σ'(X) σ(X) ) dt
/// dY = −Y / ε² dt + √2 / ε dV
/// ```
///
/// The Stratonovich correction `σ'σ` is subtracted so that the homogenized
/// limit `dX = h̄(X) dt + √(2σ(X)²) dW` is an Itô equation. Only `X` is
/// observed; `Y` starts from its stationary law `N(0, 1)`.
pub struct FastOuSystem {
    h_fun: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    sigma: ScalarFunction,
    epsilon: f64,
    label: String,
}

pub fn make_fast_ou_system(
    h_fun: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    sigma: ScalarFunction,
    epsilon: f64,
) -> Result<FastOuSystem> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    Ok(FastOuSystem {
        h_fun,
        sigma,
        epsilon,
        label: String::from("fast_ou"),
    })
}

impl FastOuSystem {
    /// `h(x, y) = A x`, `σ = √ς`; the limit is an OU process.
    pub fn ou(a: f64, varsigma: f64, epsilon: f64) -> Result<Self> {
        if !(varsigma >= 0.0) {
            return Err(Error::invalid("varsigma must be nonnegative"));
        }
        make_fast_ou_system(
            Box::new(move |x, _| a * x),
            ScalarFunction::constant(math::sqrt(varsigma)),
            epsilon,
        )
    }

    /// `h(x, y) = A x + B x³`, `σ(x) = √(σ_a + σ_b x²)`.
    pub fn cubic(a: f64, b: f64, sigma_a: f64, sigma_b: f64, epsilon: f64) -> Result<Self> {
        if !(sigma_a > 0.0) || !(sigma_b >= 0.0) {
            return Err(Error::invalid("sigma_a must be positive and sigma_b nonnegative"));
        }
        let sigma = ScalarFunction::new(
            Box::new(move |x| math::sqrt(sigma_a + sigma_b * x * x)),
            Some(Box::new(move |x| sigma_b * x / math::sqrt(sigma_a + sigma_b * x * x))),
        );
        make_fast_ou_system(Box::new(move |x, _| a * x + b * x * x * x), sigma, epsilon)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Drift of the slow component at `(x, y)`.
    pub fn slow_drift(&self, x: f64, y: f64) -> f64 {
        let s = self.sigma.value(x);
        s * y / self.epsilon + (self.h_fun)(x, y) - self.sigma.derivative(x) * s
    }

    /// `σ'(x) σ(x)`.
    pub fn stratonovich_correction(&self, x: f64) -> f64 {
        self.sigma.derivative(x) * self.sigma.value(x)
    }
}

impl SdeSystem for FastOuSystem {
    fn dim_state(&self) -> usize {
        2
    }

    fn dim_noise(&self) -> usize {
        1
    }

    #[inline]
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.slow_drift(x[0], x[1]);
        out[1] = -x[1] / (self.epsilon * self.epsilon);
    }

    #[inline]
    fn diffusion(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
        out[1] = core::f64::consts::SQRT_2 / self.epsilon;
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn observed_dim(&self) -> usize {
        1
    }

    fn initial_state(&self, xi: &[f64], rng: &mut Rng, out: &mut [f64]) {
        out[0] = xi[0];
        out[1] = StandardNormal.sample(rng);
    }
}

/// Brownian motion in the two-dimensional two-scale potential
/// `½ xᵀMx + cos(x₁/ε) + cos(x₂/ε)/2`:
///
/// ```text
/// dX = −( M X + (1/ε) (p₁'(X₁/ε), p₂'(X₂/ε)) ) dt + √(2σ) dU
/// ```
#[derive(Debug, Clone)]
pub struct Langevin2dSystem {
    m: [[f64; 2]; 2],
    noise_scale: f64,
    epsilon: f64,
    fluctuations: bool,
}

pub fn make_langevin_2d_system(m: [[f64; 2]; 2], sigma: f64, epsilon: f64) -> Result<Langevin2dSystem> {
    if math::abs(m[0][1] - m[1][0]) > 1e-12 {
        return Err(Error::invalid("M must be symmetric"));
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(m[0][0] > 0.0 && det > 0.0) {
        return Err(Error::invalid("M must be positive definite"));
    }
    if !(sigma > 0.0) || !(epsilon > 0.0) {
        return Err(Error::invalid("sigma and epsilon must be positive"));
    }
    Ok(Langevin2dSystem {
        m,
        noise_scale: math::sqrt(2.0 * sigma),
        epsilon,
        fluctuations: true,
    })
}

impl Langevin2dSystem {
    /// Drops the fluctuating part of the potential (`p ≡ 0`).
    pub fn without_fluctuations(mut self) -> Self {
        self.fluctuations = false;
        self
    }
}

impl SdeSystem for Langevin2dSystem {
    fn dim_state(&self) -> usize {
        2
    }

    fn dim_noise(&self) -> usize {
        2
    }

    #[inline]
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        let m = &self.m;
        out[0] = -(m[0][0] * x[0] + m[0][1] * x[1]);
        out[1] = -(m[1][0] * x[0] + m[1][1] * x[1]);
        if self.fluctuations {
            // p₁'(y) = −sin y, p₂'(y) = −sin(y)/2
            let e = self.epsilon;
            out[0] += math::sin(x[0] / e) / e;
            out[1] += 0.5 * math::sin(x[1] / e) / e;
        }
    }

    #[inline]
    fn diffusion(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = self.noise_scale;
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = self.noise_scale;
    }

    fn label(&self) -> &str {
        "langevin2d"
    }
}

/// `dX = −( αX + (1/ε) p'(X/ε) ) dt + √(2σ) dU` with `p = cos`.
#[derive(Debug, Clone)]
pub struct Langevin1dSystem {
    alpha: f64,
    noise_scale: f64,
    epsilon: f64,
}

pub fn make_langevin_1d_system(alpha: f64, sigma: f64, epsilon: f64) -> Result<Langevin1dSystem> {
    if !(sigma > 0.0) || !(epsilon > 0.0) {
        return Err(Error::invalid("sigma and epsilon must be positive"));
    }
    Ok(Langevin1dSystem {
        alpha,
        noise_scale: math::sqrt(2.0 * sigma),
        epsilon,
    })
}

impl SdeSystem for Langevin1dSystem {
    fn dim_state(&self) -> usize {
        1
    }

    fn dim_noise(&self) -> usize {
        1
    }

    #[inline]
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        let e = self.epsilon;
        out[0] = -(self.alpha * x[0] - math::sin(x[0] / e) / e);
    }

    #[inline]
    fn diffusion(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = self.noise_scale;
    }

    fn label(&self) -> &str {
        "langevin1d"
    }
}

/// Scalar Ornstein–Uhlenbeck process `dX = A X dt + √(2Σ) dW`.
#[derive(Debug, Clone)]
pub struct OuSystem {
    a: f64,
    noise_scale: f64,
}

impl OuSystem {
    pub fn new(a: f64, sigma_cap: f64) -> Self {
        OuSystem {
            a,
            noise_scale: math::sqrt(2.0 * sigma_cap.max(0.0)),
        }
    }
}

impl SdeSystem for OuSystem {
    fn dim_state(&self) -> usize {
        1
    }

    fn dim_noise(&self) -> usize {
        1
    }

    #[inline]
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.a * x[0];
    }

    #[inline]
    fn diffusion(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = self.noise_scale;
    }

    fn label(&self) -> &str {
        "ou"
    }
}

pub type VectorFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// System assembled from user closures.
pub struct FnSystem {
    dim_state: usize,
    dim_noise: usize,
    drift: VectorFn,
    diffusion: VectorFn,
    label: String,
}

impl FnSystem {
    pub fn new(
        label: impl Into<String>,
        dim_state: usize,
        dim_noise: usize,
        drift: VectorFn,
        diffusion: VectorFn,
    ) -> Result<Self> {
        if dim_state == 0 || dim_noise == 0 {
            return Err(Error::invalid("system dimensions must be positive"));
        }
        Ok(FnSystem {
            dim_state,
            dim_noise,
            drift,
            diffusion,
            label: label.into(),
        })
    }
}

impl SdeSystem for FnSystem {
    fn dim_state(&self) -> usize {
        self.dim_state
    }

    fn dim_noise(&self) -> usize {
        self.dim_noise
    }

    fn drift(&self, x: &[f64], out: &mut [f64]) {
        (self.drift)(x, out)
    }

    fn diffusion(&self, x: &[f64], out: &mut [f64]) {
        (self.diffusion)(x, out)
    }

    fn label(&self) -> &str {
        &self.label
    }
}
