//! Parametrized SDE families and admissible test functions.
//!
//! A [`ParametrizedModel`] holds basis functions `fⱼ: ℝᵈ → ℝᵈ` and
//! `Gⱼ: ℝᵈ → ℝᵈˣᵈ` (symmetric) so that drift and diffusion are
//! `Σ θⱼ fⱼ` and `Σ θⱼ Gⱼ`. An [`AdmissibleFunction`] is a bounded C² test
//! function φ whose per-basis generators `𝓛ⱼφ = fⱼ·∇φ + ½ Gⱼ:∇∇φ` are
//! bounded as well.
//!
//! Registry names (used by configuration files):
//!
//! | basis      | d | n | drift basis                  | diffusion basis              |
//! |------------|---|---|------------------------------|------------------------------|
//! | `ou2`      | 1 | 2 | `x, 0`                       | `0, 2`                       |
//! | `cubic4`   | 1 | 4 | `x, x³, 0, 0`                | `0, 0, 2, 2x²`               |
//! | `linear2d` | 2 | 6 | `(x₁,0), (x₂,0), (0,x₁), (0,x₂), 0, 0` | `0,0,0,0, diag(2,0), diag(0,2)` |
//!
//! | φ              | d   | formula                          |
//! |----------------|-----|----------------------------------|
//! | `gauss`        | any | `exp(−‖x‖²/2)`                   |
//! | `affine_gauss` | 1   | `(1+x) exp(−x²/2)`               |
//! | `bump_product` | 2   | `Φ(x₁)Φ(x₂)`, `Φ(z) = (1+z²)exp(−z²/2)` |

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

pub type DriftFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Writes a row-major symmetric d×d matrix.
pub type DiffusionFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Absolute tolerance for symmetry of diffusion basis matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub struct ParametrizedModel {
    name: String,
    dim: usize,
    drift_basis: Vec<DriftFn>,
    diffusion_basis: Vec<DiffusionFn>,
}

impl core::fmt::Debug for ParametrizedModel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ParametrizedModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("n_params", &self.n_params())
            .finish()
    }
}

impl ParametrizedModel {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        drift_basis: Vec<DriftFn>,
        diffusion_basis: Vec<DiffusionFn>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("model dimension must be positive"));
        }
        if drift_basis.is_empty() {
            return Err(Error::invalid("model needs at least one parameter"));
        }
        Error::check_dim("diffusion basis", drift_basis.len(), diffusion_basis.len())?;
        Ok(ParametrizedModel {
            name: name.into(),
            dim,
            drift_basis,
            diffusion_basis,
        })
    }

    /// Looks up a basis from the registry.
    pub fn from_registry(name: &str) -> Option<Self> {
        match name {
            "ou2" => Some(ou2()),
            "cubic4" => Some(cubic4()),
            "linear2d" => Some(linear2d()),
            _ => None,
        }
    }

    pub fn registry_names() -> &'static [&'static str] {
        &["ou2", "cubic4", "linear2d"]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_params(&self) -> usize {
        self.drift_basis.len()
    }

    fn check_args(&self, theta: &[f64], x: &[f64]) -> Result<()> {
        Error::check_dim("theta", self.n_params(), theta.len())?;
        Error::check_dim("state", self.dim, x.len())
    }

    /// `fⱼ(x)` for a single basis index (0-based).
    pub fn basis_drift(&self, j: usize, x: &[f64], out: &mut [f64]) {
        (self.drift_basis[j])(x, out)
    }

    /// `Gⱼ(x)` for a single basis index (0-based), row-major.
    pub fn basis_diffusion(&self, j: usize, x: &[f64], out: &mut [f64]) {
        (self.diffusion_basis[j])(x, out)
    }

    /// `Σⱼ θⱼ fⱼ(x)`.
    pub fn evaluate_drift(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check_args(theta, x)?;
        let d = self.dim;
        let mut out = vec![0.0; d];
        let mut tmp = vec![0.0; d];
        for (f, &t) in self.drift_basis.iter().zip(theta) {
            f(x, &mut tmp);
            for (o, v) in out.iter_mut().zip(&tmp) {
                *o += t * v;
            }
        }
        Ok(out)
    }

    /// `Σⱼ θⱼ Gⱼ(x)` as a row-major d×d matrix.
    pub fn evaluate_diffusion(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check_args(theta, x)?;
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        let mut tmp = vec![0.0; d * d];
        for (j, (g, &t)) in self.diffusion_basis.iter().zip(theta).enumerate() {
            g(x, &mut tmp);
            check_symmetric(&tmp, d, j)?;
            for (o, v) in out.iter_mut().zip(&tmp) {
                *o += t * v;
            }
        }
        Ok(out)
    }

    /// `𝓛ⱼφ(x) = fⱼ(x)·∇φ(x) + ½ Gⱼ(x):∇∇φ(x)` for a 0-based basis index.
    pub fn generator_apply(&self, j: usize, phi: &dyn AdmissibleFunction, x: &[f64]) -> Result<f64> {
        if j >= self.n_params() {
            return Err(Error::invalid("basis index out of range"));
        }
        Error::check_dim("state", self.dim, x.len())?;
        Error::check_dim("test function dimension", self.dim, phi.dim())?;
        let mut eval = GeneratorEvaluator::new(self, phi)?;
        let mut out = vec![0.0; self.n_params() + 1];
        eval.evaluate(x, &mut out);
        Ok(out[j + 1])
    }
}

fn check_symmetric(m: &[f64], d: usize, j: usize) -> Result<()> {
    for r in 0..d {
        for c in r + 1..d {
            if math::abs(m[r * d + c] - m[c * d + r]) > SYMMETRY_TOL {
                return Err(Error::InvalidArgument(alloc::format!(
                    "diffusion basis {j} is not symmetric"
                )));
            }
        }
    }
    Ok(())
}

/// Evaluates `[φ(x), 𝓛₁φ(x), …, 𝓛ₙφ(x)]` with reusable scratch space.
///
/// Derivatives of φ are computed once per point and shared by all basis
/// indices.
pub struct GeneratorEvaluator<'a> {
    model: &'a ParametrizedModel,
    phi: &'a dyn AdmissibleFunction,
    grad: Vec<f64>,
    hess: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
}

impl<'a> GeneratorEvaluator<'a> {
    pub fn new(model: &'a ParametrizedModel, phi: &'a dyn AdmissibleFunction) -> Result<Self> {
        Error::check_dim("test function dimension", model.dim, phi.dim())?;
        let d = model.dim;
        Ok(GeneratorEvaluator {
            model,
            phi,
            grad: vec![0.0; d],
            hess: vec![0.0; d * d],
            f: vec![0.0; d],
            g: vec![0.0; d * d],
        })
    }

    /// Number of values written by [`Self::evaluate`]: `n_params + 1`.
    pub fn width(&self) -> usize {
        self.model.n_params() + 1
    }

    pub fn evaluate(&mut self, x: &[f64], out: &mut [f64]) {
        out[0] = self.phi.value(x);
        self.phi.gradient(x, &mut self.grad);
        self.phi.hessian(x, &mut self.hess);
        for j in 0..self.model.n_params() {
            self.model.basis_drift(j, x, &mut self.f);
            self.model.basis_diffusion(j, x, &mut self.g);
            let first: f64 = self.f.iter().zip(&self.grad).map(|(a, b)| a * b).sum();
            let second: f64 = self.g.iter().zip(&self.hess).map(|(a, b)| a * b).sum();
            out[j + 1] = first + 0.5 * second;
        }
    }
}

fn ou2() -> ParametrizedModel {
    ParametrizedModel::new(
        "ou2",
        1,
        vec![Box::new(|x, o| o[0] = x[0]), Box::new(|_, o| o[0] = 0.0)],
        vec![Box::new(|_, o| o[0] = 0.0), Box::new(|_, o| o[0] = 2.0)],
    )
    .expect("static basis")
}

fn cubic4() -> ParametrizedModel {
    ParametrizedModel::new(
        "cubic4",
        1,
        vec![
            Box::new(|x, o| o[0] = x[0]),
            Box::new(|x, o| o[0] = x[0] * x[0] * x[0]),
            Box::new(|_, o| o[0] = 0.0),
            Box::new(|_, o| o[0] = 0.0),
        ],
        vec![
            Box::new(|_, o| o[0] = 0.0),
            Box::new(|_, o| o[0] = 0.0),
            Box::new(|_, o| o[0] = 2.0),
            Box::new(|x, o| o[0] = 2.0 * x[0] * x[0]),
        ],
    )
    .expect("static basis")
}

fn linear2d() -> ParametrizedModel {
    let zero2: fn(&[f64], &mut [f64]) = |_, o| o.fill(0.0);
    ParametrizedModel::new(
        "linear2d",
        2,
        vec![
            Box::new(|x, o| {
                o[0] = x[0];
                o[1] = 0.0
            }),
            Box::new(|x, o| {
                o[0] = x[1];
                o[1] = 0.0
            }),
            Box::new(|x, o| {
                o[0] = 0.0;
                o[1] = x[0]
            }),
            Box::new(|x, o| {
                o[0] = 0.0;
                o[1] = x[1]
            }),
            Box::new(zero2),
            Box::new(zero2),
        ],
        vec![
            Box::new(zero2),
            Box::new(zero2),
            Box::new(zero2),
            Box::new(zero2),
            Box::new(|_, o| o.copy_from_slice(&[2.0, 0.0, 0.0, 0.0])),
            Box::new(|_, o| o.copy_from_slice(&[0.0, 0.0, 0.0, 2.0])),
        ],
    )
    .expect("static basis")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeSource {
    Analytic,
    FiniteDifference,
}

/// Bounded C² test function with gradient and Hessian access.
pub trait AdmissibleFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64], out: &mut [f64]);

    /// Row-major d×d Hessian.
    fn hessian(&self, x: &[f64], out: &mut [f64]);

    /// A known bound on `|φ|`.
    fn sup_bound(&self) -> f64;

    fn derivative_source(&self) -> DerivativeSource {
        DerivativeSource::Analytic
    }

    fn name(&self) -> &str {
        "custom"
    }
}

/// Looks up a test function from the registry for state dimension `dim`.
pub fn phi_from_registry(name: &str, dim: usize) -> Option<Box<dyn AdmissibleFunction>> {
    match (name, dim) {
        ("gauss", d) if d > 0 => Some(Box::new(GaussianBump::new(d))),
        ("affine_gauss", 1) => Some(Box::new(AffineGaussian)),
        ("bump_product", 2) => Some(Box::new(BumpProduct)),
        _ => None,
    }
}

pub fn phi_registry_names() -> &'static [&'static str] {
    &["gauss", "affine_gauss", "bump_product"]
}

/// `exp(−‖x‖²/2)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianBump {
    dim: usize,
}

impl GaussianBump {
    pub fn new(dim: usize) -> Self {
        GaussianBump { dim }
    }
}

impl AdmissibleFunction for GaussianBump {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        math::exp(-0.5 * r2)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let v = self.value(x);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = -xi * v;
        }
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let v = self.value(x);
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                let delta = if i == j { 1.0 } else { 0.0 };
                out[i * d + j] = (x[i] * x[j] - delta) * v;
            }
        }
    }

    fn sup_bound(&self) -> f64 {
        1.0
    }

    fn name(&self) -> &str {
        "gauss"
    }
}

/// `(1+x) exp(−x²/2)` in one dimension.
#[derive(Debug, Clone, Copy)]
pub struct AffineGaussian;

impl AdmissibleFunction for AffineGaussian {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        let z = x[0];
        (1.0 + z) * math::exp(-0.5 * z * z)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let z = x[0];
        out[0] = (1.0 - z - z * z) * math::exp(-0.5 * z * z);
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let z = x[0];
        out[0] = (z * z * z + z * z - 3.0 * z - 1.0) * math::exp(-0.5 * z * z);
    }

    fn sup_bound(&self) -> f64 {
        // max at z = (√5 − 1)/2, value ≈ 1.3365
        1.34
    }

    fn name(&self) -> &str {
        "affine_gauss"
    }
}

/// `Φ(x₁)Φ(x₂)` with `Φ(z) = (1+z²) exp(−z²/2)`.
#[derive(Debug, Clone, Copy)]
pub struct BumpProduct;

impl BumpProduct {
    // (Φ, Φ', Φ'')
    fn factor(z: f64) -> (f64, f64, f64) {
        let e = math::exp(-0.5 * z * z);
        let z2 = z * z;
        ((1.0 + z2) * e, z * (1.0 - z2) * e, (z2 * z2 - 4.0 * z2 + 1.0) * e)
    }
}

impl AdmissibleFunction for BumpProduct {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        Self::factor(x[0]).0 * Self::factor(x[1]).0
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let (a, da, _) = Self::factor(x[0]);
        let (b, db, _) = Self::factor(x[1]);
        out[0] = da * b;
        out[1] = a * db;
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let (a, da, dda) = Self::factor(x[0]);
        let (b, db, ddb) = Self::factor(x[1]);
        out[0] = dda * b;
        out[1] = da * db;
        out[2] = da * db;
        out[3] = a * ddb;
    }

    fn sup_bound(&self) -> f64 {
        // (2/√e)² = 4/e ≈ 1.47152 at (±1, ±1)
        1.4716
    }

    fn name(&self) -> &str {
        "bump_product"
    }
}

/// `Σ cᵢ φᵢ` with derivatives combined term by term.
pub struct LinearCombination {
    dim: usize,
    terms: Vec<(f64, Box<dyn AdmissibleFunction>)>,
}

impl LinearCombination {
    pub fn new(terms: Vec<(f64, Box<dyn AdmissibleFunction>)>) -> Result<Self> {
        let dim = terms
            .first()
            .map(|(_, f)| f.dim())
            .ok_or_else(|| Error::invalid("empty linear combination"))?;
        for (_, f) in &terms {
            Error::check_dim("combined test function", dim, f.dim())?;
        }
        Ok(LinearCombination { dim, terms })
    }

    /// `c · φ`.
    pub fn scaled(c: f64, phi: Box<dyn AdmissibleFunction>) -> Self {
        LinearCombination {
            dim: phi.dim(),
            terms: vec![(c, phi)],
        }
    }
}

impl AdmissibleFunction for LinearCombination {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.value(x)).sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let mut tmp = vec![0.0; out.len()];
        for (c, f) in &self.terms {
            f.gradient(x, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += c * t;
            }
        }
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let mut tmp = vec![0.0; out.len()];
        for (c, f) in &self.terms {
            f.hessian(x, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += c * t;
            }
        }
    }

    fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|(c, f)| math::abs(*c) * f.sup_bound()).sum()
    }

    fn derivative_source(&self) -> DerivativeSource {
        if self
            .terms
            .iter()
            .all(|(_, f)| f.derivative_source() == DerivativeSource::Analytic)
        {
            DerivativeSource::Analytic
        } else {
            DerivativeSource::FiniteDifference
        }
    }
}

/// Per-coordinate central-difference step `1e-5 · (1 + |xᵢ|)`.
#[inline]
pub fn fd_step(xi: f64) -> f64 {
    1e-5 * (1.0 + math::abs(xi))
}

/// Central finite-difference gradient of `f` at `x`.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], out: &mut [f64]) {
    let mut p = x.to_vec();
    for i in 0..x.len() {
        let h = fd_step(x[i]);
        p[i] = x[i] + h;
        let fp = f(&p);
        p[i] = x[i] - h;
        let fm = f(&p);
        p[i] = x[i];
        out[i] = (fp - fm) / (2.0 * h);
    }
}

/// Central finite-difference Hessian of `f` at `x`, row-major.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], out: &mut [f64]) {
    let d = x.len();
    let f0 = f(x);
    let mut p = x.to_vec();
    for i in 0..d {
        let hi = fd_step(x[i]);
        p[i] = x[i] + hi;
        let fp = f(&p);
        p[i] = x[i] - hi;
        let fm = f(&p);
        p[i] = x[i];
        out[i * d + i] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in i + 1..d {
            let hj = fd_step(x[j]);
            let mut corner = |si: f64, sj: f64| {
                p[i] = x[i] + si * hi;
                p[j] = x[j] + sj * hj;
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * hi * hj);
            out[i * d + j] = v;
            out[j * d + i] = v;
        }
    }
}

/// A user-supplied value function whose derivatives come from central
/// finite differences.
pub struct FiniteDifferenceFunction<F> {
    dim: usize,
    sup_bound: f64,
    f: F,
}

impl<F> FiniteDifferenceFunction<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, sup_bound: f64, f: F) -> Self {
        FiniteDifferenceFunction { dim, sup_bound, f }
    }
}

impl<F> AdmissibleFunction for FiniteDifferenceFunction<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        fd_gradient(&self.f, x, out)
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        fd_hessian(&self.f, x, out)
    }

    fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    fn derivative_source(&self) -> DerivativeSource {
        DerivativeSource::FiniteDifference
    }
}

/// Tolerance of the derivative consistency check.
pub const DERIVATIVE_CHECK_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub samples: usize,
    pub max_abs_value: f64,
    /// `max |𝓛ⱼφ|` over the samples, one entry per basis index.
    pub max_abs_generator: Vec<f64>,
    pub max_derivative_error: f64,
    pub bound_ok: bool,
    pub derivatives_ok: bool,
    pub generators_finite: bool,
    pub issues: Vec<String>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.bound_ok && self.derivatives_ok && self.generators_finite
    }
}

/// Error between an analytic derivative and its finite-difference estimate,
/// relative to `max(1, |analytic|)`.
fn derivative_error(analytic: f64, fd: f64) -> f64 {
    math::abs(analytic - fd) / math::abs(analytic).max(1.0)
}

/// Spot-checks admissibility of `phi` for `model` on `samples`.
///
/// Boundedness cannot be verified globally; the report only covers the
/// supplied points.
pub fn validate_admissible(
    phi: &dyn AdmissibleFunction,
    model: &ParametrizedModel,
    samples: &[Vec<f64>],
) -> Result<AdmissibilityReport> {
    if samples.is_empty() {
        return Err(Error::invalid("validation needs at least one sample point"));
    }
    let d = model.dim();
    let mut eval = GeneratorEvaluator::new(model, phi)?;
    let mut vals = vec![0.0; eval.width()];
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    let mut fd_g = vec![0.0; d];
    let mut fd_h = vec![0.0; d * d];
    let mut gbuf = vec![0.0; d * d];
    let value = |x: &[f64]| phi.value(x);

    let mut report = AdmissibilityReport {
        samples: samples.len(),
        max_abs_value: 0.0,
        max_abs_generator: vec![0.0; model.n_params()],
        max_derivative_error: 0.0,
        bound_ok: true,
        derivatives_ok: true,
        generators_finite: true,
        issues: Vec::new(),
    };
    for x in samples {
        Error::check_dim("sample point", d, x.len())?;
        for j in 0..model.n_params() {
            model.basis_diffusion(j, x, &mut gbuf);
            check_symmetric(&gbuf, d, j)?;
        }
        eval.evaluate(x, &mut vals);
        let v = math::abs(vals[0]);
        if v > report.max_abs_value {
            report.max_abs_value = v;
        }
        for (m, g) in report.max_abs_generator.iter_mut().zip(&vals[1..]) {
            if !g.is_finite() {
                report.generators_finite = false;
            } else if math::abs(*g) > *m {
                *m = math::abs(*g);
            }
        }
        phi.gradient(x, &mut grad);
        phi.hessian(x, &mut hess);
        fd_gradient(&value, x, &mut fd_g);
        fd_hessian(&value, x, &mut fd_h);
        let err = grad
            .iter()
            .zip(&fd_g)
            .chain(hess.iter().zip(&fd_h))
            .map(|(a, b)| derivative_error(*a, *b))
            .fold(0.0, f64::max);
        if err > report.max_derivative_error {
            report.max_derivative_error = err;
        }
    }
    if report.max_abs_value > phi.sup_bound() {
        report.bound_ok = false;
        report
            .issues
            .push("declared sup bound exceeded at a sample point".to_string());
    }
    if report.max_derivative_error > DERIVATIVE_CHECK_TOL {
        report.derivatives_ok = false;
        report
            .issues
            .push("gradient/Hessian disagree with finite differences".to_string());
    }
    if !report.generators_finite {
        report.issues.push("non-finite generator value".to_string());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ou_drift_examples() {
        let m = ParametrizedModel::from_registry("ou2").unwrap();
        assert_eq!(m.evaluate_drift(&[-0.5, 0.5], &[2.0]).unwrap(), vec![-1.0]);
        assert_eq!(m.evaluate_drift(&[0.0, 0.0], &[3.7]).unwrap(), vec![0.0]);
        assert_eq!(m.evaluate_diffusion(&[0.0, 0.5], &[1.0]).unwrap(), vec![1.0]);
        assert_eq!(m.evaluate_diffusion(&[0.0, 0.0], &[1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn cubic_drift_cancels() {
        let m = ParametrizedModel::from_registry("cubic4").unwrap();
        assert_eq!(m.evaluate_drift(&[2.0, -2.0, 0.0, 0.0], &[1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn linear2d_diffusion() {
        let m = ParametrizedModel::from_registry("linear2d").unwrap();
        let g = m
            .evaluate_diffusion(&[0.0, 0.0, 0.0, 0.0, 1.0, 1.0], &[0.3, -0.2])
            .unwrap();
        assert_eq!(g, vec![2.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = ParametrizedModel::from_registry("ou2").unwrap();
        assert!(matches!(
            m.evaluate_drift(&[1.0], &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            m.evaluate_diffusion(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mismatched_basis_lengths_rejected() {
        let r = ParametrizedModel::new("bad", 1, vec![Box::new(|x: &[f64], o: &mut [f64]| o[0] = x[0])], vec![]);
        assert!(r.is_err());
    }

    #[test]
    fn asymmetric_diffusion_rejected() {
        let m = ParametrizedModel::new(
            "skew",
            2,
            vec![Box::new(|_: &[f64], o: &mut [f64]| o.fill(0.0))],
            vec![Box::new(|_: &[f64], o: &mut [f64]| {
                o.copy_from_slice(&[0.0, 1.0, 0.0, 0.0])
            })],
        )
        .unwrap();
        assert!(m.evaluate_diffusion(&[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn generator_examples() {
        let m = ParametrizedModel::from_registry("ou2").unwrap();
        let phi = GaussianBump::new(1);
        assert_eq!(m.generator_apply(0, &phi, &[0.0]).unwrap(), 0.0);
        let v = m.generator_apply(0, &phi, &[1.0]).unwrap();
        assert!((v + (-0.5f64).exp()).abs() < 1e-15);
        assert!((v + 0.6065306597).abs() < 1e-10);
        assert_eq!(m.generator_apply(1, &phi, &[0.0]).unwrap(), -1.0);
        assert!(m.generator_apply(2, &phi, &[0.0]).is_err());
    }

    #[test]
    fn registry_lookups() {
        assert!(phi_from_registry("gauss", 3).is_some());
        assert!(phi_from_registry("affine_gauss", 2).is_none());
        assert!(phi_from_registry("bump_product", 2).is_some());
        assert!(phi_from_registry("nope", 1).is_none());
        for name in ParametrizedModel::registry_names() {
            assert!(ParametrizedModel::from_registry(name).is_some());
        }
    }
}
