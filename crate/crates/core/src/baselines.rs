//! Continuous-time maximum likelihood estimator for the drift coefficient of
//! the first-order Langevin equation `dX = −α V'(X) dt + √(2σ) dW`.
//!
//! The stochastic integral is discretized at the **left** endpoint (Itô).
//! A midpoint rule would approximate the Stratonovich integral instead and
//! converge to a different value.
//!
//! On data from a multiscale model this estimator converges to the
//! coefficient of the fine-scale model rather than of the homogenized one.
//! Subsampling at a step between the fast and slow time scales reduces the
//! bias.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::simulate::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleResult {
    /// `Λ_T`.
    pub estimate: f64,
    /// Time span covered by the strided path.
    pub horizon: f64,
    pub stride: usize,
}

impl MleResult {
    /// Sampling step of the strided path.
    pub fn step(&self, h: f64) -> f64 {
        self.stride as f64 * h
    }
}

/// Every `stride`-th state of `path`, with step `stride · h`.
pub fn subsample(path: &Trajectory, stride: usize) -> Result<Trajectory> {
    if stride == 0 {
        return Err(Error::invalid("stride must be at least one"));
    }
    let states: Vec<f64> = path.iter().step_by(stride).flatten().copied().collect();
    Trajectory::new(path.t0(), path.h() * stride as f64, path.dim(), states)
}

/// `Λ_T = −Σ V'(Xₖ)(Xₖ₊₁ − Xₖ) / Σ V'(Xₖ)² H` on the path strided by
/// `stride`, where `H = stride · h`.
pub fn mle_langevin(path: &Trajectory, v_prime: impl Fn(f64) -> f64, stride: usize) -> Result<MleResult> {
    Error::check_dim("path dimension", 1, path.dim())?;
    if stride == 0 {
        return Err(Error::invalid("stride must be at least one"));
    }
    if path.len() < 2 * stride {
        return Err(Error::InvalidArgument(alloc::format!(
            "path of length {} too short for stride {stride}",
            path.len()
        )));
    }
    let x = path.states();
    let step = stride as f64 * path.h();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut k = 0;
    while k + stride < x.len() {
        let g = v_prime(x[k]);
        num += g * (x[k + stride] - x[k]);
        den += g * g;
        k += stride;
    }
    den *= step;
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::DegeneratePath("∫ V'(X)² dt vanishes on this path".into()));
    }
    let estimate = -num / den;
    if !estimate.is_finite() {
        return Err(Error::DegeneratePath("non-finite estimate".into()));
    }
    Ok(MleResult {
        estimate,
        horizon: (k / stride) as f64 * step,
        stride,
    })
}

/// [`mle_langevin`] for each stride in `strides`.
pub fn mle_stride_sweep(path: &Trajectory, v_prime: impl Fn(f64) -> f64, strides: &[usize]) -> Vec<Result<MleResult>> {
    strides.iter().map(|&s| mle_langevin(path, &v_prime, s)).collect()
}
