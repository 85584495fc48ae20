//! Parameter inference for stochastic differential equations observed
//! through weakly perturbed, discretely sampled data.
//!
//! The drift `f(x; θ) = Σ θⱼ fⱼ(x)` and diffusion `G(x; θ) = Σ θⱼ Gⱼ(x)` of
//! the coarse model are linear in θ. For a bounded test function φ, Itô's
//! formula gives, at every starting point ξ,
//!
//! ```text
//! E φ(X_ξ(t)) − φ(ξ) = Σⱼ θⱼ ∫₀ᵗ E (𝓛ⱼφ)(X_ξ(s)) ds,   𝓛ⱼφ = fⱼ·∇φ + ½ Gⱼ:∇∇φ
//! ```
//!
//! Stacking this identity over a set of trial points yields `A θ = b`, which
//! is solved in the minimum-norm least-squares sense. Expectations come from
//! data (ensemble averages or Nadaraya–Watson regression on a single time
//! series) and time integrals from the trapezoidal rule.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and
//! parallel orchestration live in the `itofit` crate.
//!
//! Modules:
//! - [`model`]: parametrized drift/diffusion bases and admissible test functions.
//! - [`simulate`]: Euler–Maruyama, the multiscale test systems, an exact OU
//!   sampler and homogenized coefficients.
//! - [`moments`]: conditional-moment estimators and trapezoidal quadrature.
//! - [`estimator`]: linear-system assembly and the pseudoinverse solve.
//! - [`baselines`]: the continuous-time MLE for the Langevin equation.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod baselines;
pub mod error;
pub mod estimator;
pub mod linalg;
mod math;
pub mod model;
pub mod moments;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
