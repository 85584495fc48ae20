//! Closed-form coefficients of the coarse-grained models for the bundled
//! two-scale Langevin systems.

use crate::error::{Error, Result};
use crate::math;

/// Trapezoid panels used for the periodic partition-function integrals.
pub const HOMOGENIZATION_PANELS: usize = 20_000;

/// Modified Bessel function of the first kind, order zero.
///
/// Power series `Σ (x/2)^{2k} / (k!)²` for `|x| ≤ 20` (relative tolerance
/// 1e-16), asymptotic expansion beyond.
pub fn bessel_i0(x: f64) -> f64 {
    let ax = math::abs(x);
    if ax <= 20.0 {
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        // e^x / √(2πx) · Σ ((2k−1)!!)² / (k! (8x)^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let kf = k as f64;
            let next = term * (2.0 * kf - 1.0) * (2.0 * kf - 1.0) / (kf * 8.0 * ax);
            if next > term {
                break;
            }
            term = next;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        math::exp(ax) / math::sqrt(2.0 * core::f64::consts::PI * ax) * sum
    }
}

fn inv_square(x: f64) -> f64 {
    1.0 / (x * x)
}

fn periodic_trapezoid(f: &dyn Fn(f64) -> f64, period: f64, panels: usize) -> f64 {
    let dx = period / panels as f64;
    // periodic integrand: both endpoints carry weight ½ and coincide
    let mut s = 0.0;
    for k in 0..panels {
        s += f(k as f64 * dx);
    }
    s * dx
}

/// Coarse coefficients `(A, Σ) = (α, σ) · L² / (Z₊ Z₋)` of the one-dimensional
/// two-scale Langevin equation, `Z± = ∫₀ᴸ e^{±p(y)/σ} dy`.
pub fn homogenized_langevin_coefficients(
    alpha: f64,
    sigma: f64,
    period: f64,
    p: &dyn Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    if !(sigma > 0.0) || !(period > 0.0) {
        return Err(Error::invalid("sigma and period must be positive"));
    }
    let z_plus = periodic_trapezoid(&|y| math::exp(p(y) / sigma), period, HOMOGENIZATION_PANELS);
    let z_minus = periodic_trapezoid(&|y| math::exp(-p(y) / sigma), period, HOMOGENIZATION_PANELS);
    let r = period * period / (z_plus * z_minus);
    Ok((alpha * r, sigma * r))
}

/// True parameters for the `ou2` basis fitted to the `p = cos` Langevin
/// system: `I₀(1/σ)^{-2} (−α, σ)`.
pub fn langevin1d_cosine_theta(alpha: f64, sigma: f64) -> [f64; 2] {
    let r = inv_square(bessel_i0(1.0 / sigma));
    [-alpha * r, sigma * r]
}

/// Coarse model `dX = −RMX dt + √(2σR) dW` of the two-dimensional system,
/// `R = diag(I₀(1/σ)^{-2}, I₀(1/(2σ))^{-2})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homogenized2d {
    pub r: [f64; 2],
    /// `−RM`
    pub drift: [[f64; 2]; 2],
    /// `σR`
    pub diffusion: [[f64; 2]; 2],
}

impl Homogenized2d {
    /// Parameters in the order of the `linear2d` basis.
    pub fn theta(&self) -> [f64; 6] {
        [
            self.drift[0][0],
            self.drift[0][1],
            self.drift[1][0],
            self.drift[1][1],
            self.diffusion[0][0],
            self.diffusion[1][1],
        ]
    }
}

pub fn homogenized_2d_coefficients(m: [[f64; 2]; 2], sigma: f64) -> Result<Homogenized2d> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    let r = [
        inv_square(bessel_i0(1.0 / sigma)),
        inv_square(bessel_i0(1.0 / (2.0 * sigma))),
    ];
    let mut drift = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            drift[i][j] = -r[i] * m[i][j];
        }
    }
    Ok(Homogenized2d {
        r,
        drift,
        diffusion: [[sigma * r[0], 0.0], [0.0, sigma * r[1]]],
    })
}
