//! Result, diagnostics, observation and moment files.
//!
//! All CSV files are comma separated with `.` decimals, LF line endings and
//! one header row. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use itofit_core::moments::MomentTable;
use itofit_core::simulate::{EnsembleObservations, ObservationSet, Trajectory};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::runner::{MleOutput, RunOutput};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn header_comment(out: &mut String, cfg: &ExperimentConfig) {
    let _ = writeln!(out, "# itofit {VERSION}");
    for line in cfg.to_toml().lines() {
        let _ = writeln!(out, "# {line}");
    }
}

fn one_line(msg: &str) -> String {
    msg.replace(['\n', '\r'], " ")
}

/// Results CSV: `t,rel_error,theta_hat_1..n,residual,eff_rank,cond`.
/// Failed sweep points appear as `# t=…: error` comment lines.
pub fn results_csv(cfg: &ExperimentConfig, out: &RunOutput, n_params: usize) -> String {
    let mut s = String::new();
    header_comment(&mut s, cfg);
    s.push_str("t,rel_error");
    for j in 1..=n_params {
        let _ = write!(s, ",theta_hat_{j}");
    }
    s.push_str(",residual,eff_rank,cond\n");
    for p in &out.sweep {
        match &p.outcome {
            Ok(e) => {
                let _ = write!(s, "{},", p.t);
                if let Some(r) = e.relative_error {
                    let _ = write!(s, "{r}");
                }
                for th in &e.estimate.theta_hat {
                    let _ = write!(s, ",{th}");
                }
                let _ = writeln!(
                    s,
                    ",{},{},{}",
                    e.estimate.residual_norm, e.estimate.effective_rank, e.condition
                );
            }
            Err(err) => {
                let _ = writeln!(s, "# t={}: {}", p.t, one_line(&err.to_string()));
            }
        }
    }
    s
}

#[derive(Serialize)]
struct DiagnosticsRow<'a> {
    t: f64,
    theta_hat: Option<&'a [f64]>,
    relative_error: Option<f64>,
    singular_values: Option<&'a [f64]>,
    effective_rank: Option<usize>,
    residual_norm: Option<f64>,
    condition: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    version: &'a str,
    config: &'a ExperimentConfig,
    seed: u64,
    trial_point_seed: u64,
    trial_points: &'a [Vec<f64>],
    theta_true: Option<&'a [f64]>,
    bandwidth: Option<f64>,
    rows: Vec<DiagnosticsRow<'a>>,
}

/// JSON sidecar with singular values, the configuration and seeds.
pub fn diagnostics_json(cfg: &ExperimentConfig, out: &RunOutput) -> String {
    let rows = out
        .sweep
        .iter()
        .map(|p| match &p.outcome {
            Ok(e) => DiagnosticsRow {
                t: p.t,
                theta_hat: Some(&e.estimate.theta_hat),
                relative_error: e.relative_error,
                singular_values: Some(&e.estimate.singular_values),
                effective_rank: Some(e.estimate.effective_rank),
                residual_norm: Some(e.estimate.residual_norm),
                condition: Some(e.condition),
                error: None,
            },
            Err(err) => DiagnosticsRow {
                t: p.t,
                theta_hat: None,
                relative_error: None,
                singular_values: None,
                effective_rank: None,
                residual_norm: None,
                condition: None,
                error: Some(err.to_string()),
            },
        })
        .collect();
    let diag = Diagnostics {
        version: VERSION,
        config: cfg,
        seed: cfg.seed,
        trial_point_seed: out.trial_points.seed(),
        trial_points: out.trial_points.points(),
        theta_true: out.theta_true.as_deref(),
        bandwidth: out.bandwidth,
        rows,
    };
    let mut s = serde_json::to_string_pretty(&diag).expect("diagnostics serialize");
    s.push('\n');
    s
}

/// Moment curves at one trial point: `s,phi,L1phi,…,Lnphi`.
pub fn moments_csv(table: &MomentTable) -> String {
    let mut s = String::new();
    let xi: Vec<String> = table.xi.iter().map(f64::to_string).collect();
    let _ = writeln!(s, "# xi={}", xi.join(" "));
    s.push_str("s,phi");
    for j in 1..=table.n_params() {
        let _ = write!(s, ",L{j}phi");
    }
    s.push('\n');
    for q in 0..table.n_nodes() {
        let _ = write!(s, "{}", q as f64 * table.delta);
        for c in &table.curves {
            let _ = write!(s, ",{}", c[q]);
        }
        s.push('\n');
    }
    s
}

/// Observation file. Ensembles: `trial,member,step,x1..xd`; series:
/// `step,x1..xd`. The first line records the layout.
pub fn observations_csv(obs: &ObservationSet) -> String {
    let mut s = String::new();
    match obs {
        ObservationSet::Ensemble(e) => {
            let _ = writeln!(
                s,
                "# kind=ensemble dim={} h={} n_steps={} members={} trials={}",
                e.dim(),
                e.h(),
                e.n_steps(),
                e.members(),
                e.trial_points().len()
            );
            s.push_str("trial,member,step");
            coordinate_header(&mut s, e.dim());
            for i in 0..e.trial_points().len() {
                for k in 0..e.members() {
                    for step in 0..=e.n_steps() {
                        let _ = write!(s, "{i},{k},{step}");
                        push_state(&mut s, e.state(i, k, step));
                    }
                }
            }
        }
        ObservationSet::SingleSeries(t) => {
            let _ = writeln!(
                s,
                "# kind=series dim={} h={} t0={} len={}",
                t.dim(),
                t.h(),
                t.t0(),
                t.len()
            );
            s.push_str("step");
            coordinate_header(&mut s, t.dim());
            for (k, x) in t.iter().enumerate() {
                let _ = write!(s, "{k}");
                push_state(&mut s, x);
            }
        }
    }
    s
}

fn coordinate_header(s: &mut String, d: usize) {
    for c in 1..=d {
        let _ = write!(s, ",x{c}");
    }
    s.push('\n');
}

fn push_state(s: &mut String, x: &[f64]) {
    for v in x {
        let _ = write!(s, ",{v}");
    }
    s.push('\n');
}

fn layout_field<'a>(fields: &'a [(&'a str, &'a str)], key: &str) -> Result<&'a str, CliError> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| CliError::Parse(format!("observation file lacks `{key}`")))
}

fn parse_num<T: std::str::FromStr>(v: &str, what: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Parse(format!("bad {what} `{v}` in observation file")))
}

/// Reads a file written by [`observations_csv`].
pub fn parse_observations(text: &str) -> Result<ObservationSet, CliError> {
    let mut lines = text.lines();
    let layout = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| CliError::Parse("observation file lacks its layout line".into()))?;
    let fields: Vec<(&str, &str)> = layout.split_whitespace().filter_map(|f| f.split_once('=')).collect();
    let kind = layout_field(&fields, "kind")?;
    let dim: usize = parse_num(layout_field(&fields, "dim")?, "dim")?;
    let h: f64 = parse_num(layout_field(&fields, "h")?, "h")?;
    lines.next();
    let skip = if kind == "ensemble" { 3 } else { 1 };
    let mut data = Vec::new();
    for line in lines.filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != skip + dim {
            return Err(CliError::Parse(format!("malformed observation row `{line}`")));
        }
        for c in &cells[skip..] {
            data.push(parse_num::<f64>(c, "value")?);
        }
    }
    match kind {
        "ensemble" => {
            let n_steps: usize = parse_num(layout_field(&fields, "n_steps")?, "n_steps")?;
            let members: usize = parse_num(layout_field(&fields, "members")?, "members")?;
            let trials: usize = parse_num(layout_field(&fields, "trials")?, "trials")?;
            let per_trial = members * (n_steps + 1) * dim;
            if data.len() != trials * per_trial {
                return Err(CliError::Parse("observation file has the wrong number of rows".into()));
            }
            let xi = (0..trials)
                .map(|i| data[i * per_trial..i * per_trial + dim].to_vec())
                .collect();
            Ok(ObservationSet::Ensemble(EnsembleObservations::new(
                h, dim, n_steps, members, xi, data,
            )?))
        }
        "series" => {
            let t0: f64 = parse_num(layout_field(&fields, "t0")?, "t0")?;
            Ok(ObservationSet::SingleSeries(Trajectory::new(t0, h, dim, data)?))
        }
        other => Err(CliError::Parse(format!("unknown observation kind `{other}`"))),
    }
}

/// MLE sweep CSV: `stride,H,estimate,high_variance`.
pub fn mle_csv(cfg: &ExperimentConfig, out: &MleOutput) -> String {
    let mut s = String::new();
    header_comment(&mut s, cfg);
    if let Some(a) = out.alpha {
        let _ = writeln!(s, "# alpha={a}");
    }
    if let Some(a) = out.coarse {
        let _ = writeln!(s, "# coarse_drift={a}");
    }
    s.push_str("stride,H,estimate,high_variance\n");
    for r in &out.rows {
        match &r.result {
            Ok(m) => {
                let _ = writeln!(s, "{},{},{},{}", r.stride, r.step, m.estimate, r.high_variance);
            }
            Err(e) => {
                let _ = writeln!(s, "# stride={}: {}", r.stride, one_line(&e.to_string()));
            }
        }
    }
    s
}

/// Paths of the files written for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct WrittenFiles {
    pub results: PathBuf,
    pub diagnostics: PathBuf,
    pub observations: Option<PathBuf>,
    pub moments: Vec<PathBuf>,
}

/// Writes results, diagnostics and the requested dumps into `dir`, in a
/// fixed order.
pub fn write_run(
    dir: &Path,
    cfg: &ExperimentConfig,
    out: &RunOutput,
    n_params: usize,
    dump_moments: bool,
) -> Result<WrittenFiles, CliError> {
    let results = dir.join(format!("{}.csv", cfg.name));
    write_file(&results, &results_csv(cfg, out, n_params))?;
    let diagnostics = dir.join(format!("{}.json", cfg.name));
    write_file(&diagnostics, &diagnostics_json(cfg, out))?;
    let observations = match &out.observations {
        Some(obs) => {
            let p = dir.join(format!("{}_observations.csv", cfg.name));
            write_file(&p, &observations_csv(obs))?;
            Some(p)
        }
        None => None,
    };
    let mut moments = Vec::new();
    if dump_moments {
        let sub = dir.join(format!("{}_moments", cfg.name));
        for (i, tab) in out.tables.iter().enumerate() {
            let p = sub.join(format!("xi_{i:03}.csv"));
            write_file(&p, &moments_csv(tab))?;
            moments.push(p);
        }
    }
    Ok(WrittenFiles {
        results,
        diagnostics,
        observations,
        moments,
    })
}

pub fn write_mle(dir: &Path, cfg: &ExperimentConfig, out: &MleOutput) -> Result<PathBuf, CliError> {
    let p = dir.join(format!("{}_mle.csv", cfg.name));
    write_file(&p, &mle_csv(cfg, out))?;
    Ok(p)
}
