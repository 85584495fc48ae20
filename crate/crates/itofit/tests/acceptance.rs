//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Figure checks run the bundled configurations through the library API,
//! varying only the seed (bundled seed, bundled seed + 1, ...). The
//! property check (7) recomputes each quantity against an oracle written
//! here, independent of the library code paths it checks.

use std::time::Instant;

use itofit::bundled_config;
use itofit::config::{ExperimentConfig, TGrid};
use itofit::runner::{run_experiment, run_mle_demo, RunOptions, RunOutput};
use itofit_core::estimator::{assemble_system, draw_trial_points, relative_error, solve};
use itofit_core::linalg::{min_norm_least_squares, Matrix};
use itofit_core::model::{
    phi_from_registry, validate_admissible, AdmissibleFunction, LinearCombination, ParametrizedModel,
    DERIVATIVE_CHECK_TOL,
};
use itofit_core::moments::{ensemble_moment, trapezoid_integrate};
use itofit_core::rng::{stream, Rng};
use itofit_core::simulate::{
    bessel_i0, generate_observations, homogenized_langevin_coefficients, langevin1d_cosine_theta, sample_ou_exact,
    Design, EnsembleObservations, EulerMaruyama, OuSystem,
};
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn config(name: &str, seed_offset: u64) -> ExperimentConfig {
    let mut cfg = bundled_config(name).expect("bundled config");
    cfg.seed += seed_offset;
    cfg
}

fn run(cfg: &ExperimentConfig) -> RunOutput {
    run_experiment(cfg, RunOptions::default()).expect("experiment runs")
}

/// Relative error at the grid point nearest `t`.
fn error_at(out: &RunOutput, t: f64) -> f64 {
    out.relative_errors()
        .into_iter()
        .find(|(s, _)| (s - t).abs() < 1e-9)
        .map(|(_, e)| e)
        .unwrap_or(f64::INFINITY)
}

/// For every `t`, the median over `seeds` runs of `name`.
fn per_t_medians(name: &str, seeds: u64, ts: &[f64]) -> Vec<f64> {
    let runs: Vec<RunOutput> = (0..seeds).map(|s| run(&config(name, s))).collect();
    ts.iter()
        .map(|&t| median(&runs.iter().map(|r| error_at(r, t)).collect::<Vec<_>>()))
        .collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
}

const PLATEAU: [f64; 4] = [0.2, 0.3, 0.4, 0.5];

fn fig1a() -> Outcome {
    let med = per_t_medians("fig1a", 3, &PLATEAU);
    Outcome {
        pass: med.iter().all(|&e| e < 0.05),
        detail: format!(
            "per-t median over 3 seeds at t=0.2..0.5: [{}], need < 0.05",
            fmt_list(&med)
        ),
    }
}

fn fig1b() -> Outcome {
    let med = per_t_medians("fig1b", 5, &PLATEAU);
    Outcome {
        pass: med.iter().all(|&e| e < 0.12),
        detail: format!(
            "per-t median over 5 seeds at t=0.2..0.5: [{}], need < 0.12",
            fmt_list(&med)
        ),
    }
}

fn fig2a() -> Outcome {
    let out = run(&config("fig2a", 0));
    let errs: Vec<f64> = out
        .relative_errors()
        .into_iter()
        .filter(|(t, _)| *t >= 0.2 - 1e-9)
        .map(|(_, e)| e)
        .collect();
    let m = median(&errs);
    Outcome {
        pass: !errs.is_empty() && (0.0..=0.15).contains(&m),
        detail: format!("median over t >= 0.2: {m:.4}, need in [0, 0.15]"),
    }
}

fn fig3() -> Outcome {
    // plateau: t in [0.2, 0.5] on the bundled 0.01 grid
    let ts: Vec<f64> = (20..=50).map(|k| k as f64 / 100.0).collect();
    let med = per_t_medians("fig3", 5, &ts);
    let (k, best) = med
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, &e)| (k, e))
        .unwrap();
    Outcome {
        pass: best < 0.10,
        detail: format!(
            "median over 5 seeds at the best plateau t={:.2}: {best:.4}, need < 0.10",
            ts[k]
        ),
    }
}

fn fig4() -> Outcome {
    let out = run(&config("fig4", 0));
    let (t_worst, worst) = out
        .relative_errors()
        .into_iter()
        .filter(|(t, _)| *t >= 0.1 - 1e-9)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((f64::NAN, f64::INFINITY));
    Outcome {
        pass: worst < 0.07,
        detail: format!("max over t >= 0.1: {worst:.4} at t={t_worst:.2}, need < 0.07"),
    }
}

fn mle() -> Outcome {
    let outs: Vec<_> = (0..5)
        .map(|s| run_mle_demo(&config("mle_demo", s)).expect("mle demo runs"))
        .collect();
    let alpha = outs[0].alpha.unwrap();
    let coarse = outs[0].coarse.unwrap();
    let strides: Vec<usize> = outs[0].rows.iter().map(|r| r.stride).collect();
    let medians: Vec<f64> = (0..strides.len())
        .map(|k| {
            let v: Vec<f64> = outs
                .iter()
                .map(|o| o.rows[k].result.as_ref().map_or(f64::NAN, |m| m.estimate))
                .collect();
            median(&v)
        })
        .collect();
    let k1 = strides.iter().position(|&s| s == 1).expect("stride 1 in sweep");
    let at1 = medians[k1];
    let near_alpha = (at1 - alpha).abs() / alpha <= 0.15;
    let far_from_coarse = (at1 - coarse).abs() / coarse >= 0.40;
    let repaired: Vec<usize> = strides
        .iter()
        .zip(&medians)
        .filter(|(_, &m)| (m - coarse).abs() / coarse <= 0.25)
        .map(|(&s, _)| s)
        .collect();
    Outcome {
        pass: near_alpha && far_from_coarse && !repaired.is_empty(),
        detail: format!(
            "stride 1 median {at1:.4} (alpha {alpha}, A {coarse:.4}); strides within 25% of A: {repaired:?}"
        ),
    }
}

fn epsilon_monotone() -> Outcome {
    let eps = [0.4, 0.2, 0.1];
    let med: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let errs: Vec<f64> = (0..5)
                .map(|s| {
                    let mut cfg = config("fig4", s);
                    cfg.epsilon = e;
                    cfg.t_grid = TGrid::List(vec![0.5]);
                    error_at(&run(&cfg), 0.5)
                })
                .collect();
            median(&errs)
        })
        .collect();
    Outcome {
        pass: med.windows(2).all(|w| w[1] <= w[0]),
        detail: format!(
            "median at t=0.5 over 5 seeds for eps 0.4, 0.2, 0.1: [{}], need nonincreasing",
            fmt_list(&med)
        ),
    }
}

// ---- property checks ----

fn normals(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Gaussian elimination with partial pivoting; `a` is row-major n×n.
fn dense_solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Vec<f64> {
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs()))
            .unwrap();
        for k in 0..n {
            a.swap(c * n + k, p * n + k);
        }
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r * n + c] / a[c * n + c];
            for k in c..n {
                a[r * n + k] -= f * a[c * n + k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r * n + k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    x
}

fn gram(m: &Matrix) -> Vec<f64> {
    let (r, c) = (m.rows(), m.cols());
    let mut g = vec![0.0; c * c];
    for i in 0..c {
        for j in 0..c {
            g[i * c + j] = (0..r).map(|k| m[(k, i)] * m[(k, j)]).sum();
        }
    }
    g
}

/// `A⁺b` for `A = BC` with `B` (m×r) of full column rank and `C` (r×n) of
/// full row rank: `A⁺ = Cᵀ(CCᵀ)⁻¹ (BᵀB)⁻¹Bᵀ`.
fn factored_pinv_solve(b_mat: &Matrix, c_mat: &Matrix, rhs: &[f64]) -> Vec<f64> {
    let r = b_mat.cols();
    let bt_rhs = b_mat.transpose().mul_vec(rhs).unwrap();
    let y = dense_solve(gram(b_mat), bt_rhs, r);
    let z = dense_solve(gram(&c_mat.transpose()), y, r);
    c_mat.transpose().mul_vec(&z).unwrap()
}

fn check_pinv_oracle() -> Result<String, String> {
    let mut rng = stream(7, 0);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let m = 2 + case % 6;
        let n = 1 + (case / 6) % 5;
        let r = 1 + case % m.min(n);
        let b_mat = Matrix::from_row_major(m, r, normals(&mut rng, m * r)).unwrap();
        let c_mat = Matrix::from_row_major(r, n, normals(&mut rng, r * n)).unwrap();
        let a = b_mat.mul(&c_mat).unwrap();
        let rhs = normals(&mut rng, m);
        let want = factored_pinv_solve(&b_mat, &c_mat, &rhs);
        let got = min_norm_least_squares(&a, &rhs, 1e-10).map_err(|e| e.to_string())?.x;
        let diff: f64 = got.iter().zip(&want).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let scale = want.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        worst = worst.max(diff / scale);
    }
    if worst <= 1e-8 {
        Ok(format!("pinv {worst:.1e}"))
    } else {
        Err(format!("pinv oracle mismatch {worst:.2e}"))
    }
}

fn check_trapezoid() -> Result<String, String> {
    let (c0, c1, t) = (0.7, -1.3, 0.9);
    let n = 37;
    let delta = t / (n - 1) as f64;
    let vals: Vec<f64> = (0..n).map(|q| c0 + c1 * q as f64 * delta).collect();
    let got = trapezoid_integrate(&vals, delta).unwrap();
    let want = c0 * t + 0.5 * c1 * t * t;
    if (got - want).abs() > 1e-12 {
        return Err(format!("trapezoid affine error {:.1e}", (got - want).abs()));
    }
    let errs: Vec<f64> = [10usize, 20, 40, 80]
        .iter()
        .map(|&panels| {
            let d = 1.0 / panels as f64;
            let v: Vec<f64> = (0..=panels).map(|q| (q as f64 * d).exp()).collect();
            (trapezoid_integrate(&v, d).unwrap() - (1f64.exp() - 1.0)).abs()
        })
        .collect();
    let order = (errs[0] / errs[3]).ln() / 8f64.ln();
    if (order - 2.0).abs() <= 0.1 {
        Ok(format!("trapezoid order {order:.3}"))
    } else {
        Err(format!("trapezoid order {order:.3}"))
    }
}

fn check_derivatives() -> Result<String, String> {
    let mut rng = stream(8, 0);
    let mut worst = 0.0f64;
    for (phi, basis, d) in [
        ("gauss", "ou2", 1),
        ("affine_gauss", "cubic4", 1),
        ("bump_product", "linear2d", 2),
    ] {
        let phi = phi_from_registry(phi, d).unwrap();
        let model = ParametrizedModel::from_registry(basis).unwrap();
        let samples: Vec<Vec<f64>> = (0..50).map(|_| normals(&mut rng, d)).collect();
        let rep = validate_admissible(phi.as_ref(), &model, &samples).map_err(|e| e.to_string())?;
        if !rep.passed() {
            return Err(format!("admissibility of {} failed: {:?}", phi.name(), rep.issues));
        }
        worst = worst.max(rep.max_derivative_error);
    }
    if worst <= DERIVATIVE_CHECK_TOL {
        Ok(format!("fd {worst:.1e}"))
    } else {
        Err(format!("derivative error {worst:.1e}"))
    }
}

/// Weak order of Euler–Maruyama on `dX = −X dt + √(2·0.5) dW`, `X(0) = 0`,
/// for `E X(1)²`.
fn check_weak_order() -> Result<String, String> {
    let (a, sig, x0, t_end): (f64, f64, f64, f64) = (-1.0, 0.5, 0.0, 1.0);
    let exact = x0 * x0 * (2.0 * a * t_end).exp() + sig / -a * (1.0 - (2.0 * a * t_end).exp());
    let system = OuSystem::new(a, sig);
    let paths = 400_000;
    let hs = [0.2, 0.1, 0.05, 0.025];
    let mut errs = Vec::new();
    for (k, &h) in hs.iter().enumerate() {
        let n = (t_end / h).round() as usize;
        let mut stepper = EulerMaruyama::new(&system, h).unwrap();
        let mut rng = stream(9, k as u64);
        let mut acc = 0.0;
        for _ in 0..paths {
            let mut x = [x0];
            for s in 1..=n {
                stepper.step(&mut x, &mut rng, s).unwrap();
            }
            acc += x[0] * x[0];
        }
        errs.push((acc / paths as f64 - exact).abs());
    }
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let slope = ls_slope(&lx, &ly);
    if (slope - 1.0).abs() <= 0.4 {
        Ok(format!("EM weak {slope:.2}"))
    } else {
        Err(format!("EM weak slope {slope:.2}"))
    }
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Variance of the ensemble moment against `N`, from exact OU draws.
fn check_ensemble_variance() -> Result<String, String> {
    let phi = phi_from_registry("gauss", 1).unwrap();
    let ns = [25usize, 100, 400, 1600];
    let reps = 400;
    let mut vars = Vec::new();
    for (k, &n) in ns.iter().enumerate() {
        let mut rng = stream(10, k as u64);
        let est: Vec<f64> = (0..reps)
            .map(|_| {
                let xi = 0.3;
                let mut data = Vec::with_capacity(2 * n);
                for _ in 0..n {
                    data.push(xi);
                    data.push(sample_ou_exact(-0.5, 0.5, xi, 0.5, &mut rng).unwrap());
                }
                let obs = EnsembleObservations::new(0.5, 1, 1, n, vec![vec![xi]], data).unwrap();
                ensemble_moment(&obs, 0, 1, |x| phi.value(x)).unwrap()
            })
            .collect();
        let mean = est.iter().sum::<f64>() / reps as f64;
        vars.push(est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (reps - 1) as f64);
    }
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = vars.iter().map(|v| v.ln()).collect();
    let slope = ls_slope(&lx, &ly);
    if (slope + 1.0).abs() <= 0.2 {
        Ok(format!("variance slope {slope:.2}"))
    } else {
        Err(format!("ensemble variance slope {slope:.2}"))
    }
}

fn check_exact_recovery() -> Result<String, String> {
    let mut rng = stream(11, 0);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let n = 1 + case % 6;
        let m = n + case % 5;
        let a = Matrix::from_row_major(m, n, normals(&mut rng, m * n)).unwrap();
        let theta = normals(&mut rng, n);
        let b = a.mul_vec(&theta).unwrap();
        let est = solve(a, b, None).map_err(|e| e.to_string())?;
        worst = worst.max(relative_error(&est.theta_hat, &theta).unwrap());
    }
    if worst <= 1e-10 {
        Ok(format!("recovery {worst:.1e}"))
    } else {
        Err(format!("exact recovery error {worst:.1e}"))
    }
}

fn check_phi_scaling() -> Result<String, String> {
    let system = OuSystem::new(-0.5, 0.5);
    let xi = draw_trial_points(6, 1, 3).unwrap();
    let design = Design::Ensemble {
        xi_points: xi.points().to_vec(),
        members: 50,
        horizon: 0.2,
        h: 1e-3,
    };
    let obs = generate_observations(&system, &design, 3).unwrap();
    let model = ParametrizedModel::from_registry("ou2").unwrap();
    let theta = |phi: &dyn AdmissibleFunction| {
        let (a, b) = assemble_system(&model, phi, &xi, 0.2, &obs, 1, None).unwrap();
        solve(a, b, None).unwrap().theta_hat
    };
    let base = theta(phi_from_registry("gauss", 1).unwrap().as_ref());
    let mut worst = 0.0f64;
    for c in [-3.0, 0.01, 250.0] {
        let scaled = LinearCombination::scaled(c, phi_from_registry("gauss", 1).unwrap());
        worst = worst.max(relative_error(&theta(&scaled), &base).unwrap());
    }
    if worst <= 1e-10 {
        Ok(format!("scaling {worst:.1e}"))
    } else {
        Err(format!("phi scaling changed theta by {worst:.1e}"))
    }
}

/// Composite Simpson rule on `[0, len]`.
fn simpson(f: impl Fn(f64) -> f64, len: f64, panels: usize) -> f64 {
    let d = len / panels as f64;
    let inner: f64 = (1..panels)
        .map(|k| if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * d))
        .sum();
    (f(0.0) + inner + f(len)) * d / 3.0
}

fn check_homogenization() -> Result<String, String> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let (alpha, sigma) = (2.0, 1.0);
    let flat = homogenized_langevin_coefficients(alpha, sigma, two_pi, &|_| 0.0).map_err(|e| e.to_string())?;
    if flat != (alpha, sigma) {
        return Err(format!("p = 0 gave {flat:?}"));
    }
    let zp = simpson(|y| (y.cos() / sigma).exp(), two_pi, 2000);
    let zm = simpson(|y| (-y.cos() / sigma).exp(), two_pi, 2000);
    let oracle = alpha * two_pi * two_pi / (zp * zm);
    let (a_quad, _) =
        homogenized_langevin_coefficients(alpha, sigma, two_pi, &|y: f64| y.cos()).map_err(|e| e.to_string())?;
    let a_closed = -langevin1d_cosine_theta(alpha, sigma)[0];
    let want = 2.0 / bessel_i0(1.0).powi(2);
    let worst = [a_quad, a_closed, oracle]
        .iter()
        .map(|v| (v - want).abs())
        .fold(0.0, f64::max);
    if worst <= 1e-6 {
        Ok(format!("homogenization {worst:.1e}"))
    } else {
        Err(format!("homogenized A off by {worst:.1e}"))
    }
}

fn properties() -> Outcome {
    let checks: [fn() -> Result<String, String>; 8] = [
        check_pinv_oracle,
        check_trapezoid,
        check_derivatives,
        check_weak_order,
        check_ensemble_variance,
        check_exact_recovery,
        check_phi_scaling,
        check_homogenization,
    ];
    let mut notes = Vec::new();
    let mut pass = true;
    for c in checks {
        match c() {
            Ok(s) => notes.push(s),
            Err(s) => {
                pass = false;
                notes.push(format!("FAILED {s}"));
            }
        }
    }
    Outcome {
        pass,
        detail: notes.join("; "),
    }
}

/// Name, runtime budget in seconds, check.
type Criterion = (&'static str, f64, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 fig1a OU, N=5000", 600.0, fig1a),
        ("2 fig1b OU, N=100", 60.0, fig1b),
        ("3 fig2a cubic, m=54", 1200.0, fig2a),
        ("4 fig3 2-d Langevin", 1800.0, fig3),
        ("5 fig4 single series", 1800.0, fig4),
        ("6 MLE bias and subsampling", 600.0, mle),
        ("7 property suite", 300.0, properties),
        ("8 epsilon monotonicity", 2700.0, epsilon_monotone),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let out = check();
        let secs = start.elapsed().as_secs_f64();
        let pass = out.pass && secs <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} [{name}] {} ({secs:.1} s, budget {budget:.0} s)",
            if pass { "PASS" } else { "FAIL" },
            out.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
