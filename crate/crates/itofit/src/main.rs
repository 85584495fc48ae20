use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use itofit::config::{validate_config, ExperimentConfig, SYSTEM_KINDS};
use itofit::error::CliError;
use itofit::runner::{run_experiment, run_mle_demo, RunOptions};
use itofit::{io, BUNDLED_CONFIGS};
use itofit_core::model::{phi_registry_names, ParametrizedModel};

/// Parameter inference for SDEs from weakly perturbed data.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write the error-sweep CSV and diagnostics.
    Run(RunArgs),
    /// Evaluate the maximum likelihood estimator over a stride sweep.
    MleDemo(CommonArgs),
    /// Check a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List systems, bases, test functions and bundled configurations.
    ListRegistries,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also write the simulated observations.
    #[arg(long)]
    save_observations: bool,
    /// Also write the moment curves of every trial point.
    #[arg(long)]
    dump_moments: bool,
}

fn load(common: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    if let Some(n) = common.threads {
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let cfg = load(&args.common)?;
    let n_params = cfg.model()?.n_params();
    let opts = RunOptions {
        keep_observations: args.save_observations,
    };
    let out = run_experiment(&cfg, opts)?;
    let files = io::write_run(&args.common.out, &cfg, &out, n_params, args.dump_moments)?;
    println!("{}", files.results.display());
    println!("{}", files.diagnostics.display());
    if let Some(p) = &files.observations {
        println!("{}", p.display());
    }
    if !files.moments.is_empty() {
        println!("{} moment files", files.moments.len());
    }
    Ok(())
}

fn mle_demo(args: CommonArgs) -> Result<(), CliError> {
    let cfg = load(&args)?;
    let out = run_mle_demo(&cfg)?;
    let p = io::write_mle(&args.out, &cfg, &out)?;
    println!("{}", p.display());
    Ok(())
}

fn validate(path: PathBuf) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let report = validate_config(&text);
    print!("{}", report.render());
    Ok(report.is_valid())
}

fn list_registries() {
    println!("systems: {}", SYSTEM_KINDS.join(", "));
    println!("bases: {}", ParametrizedModel::registry_names().join(", "));
    println!("test functions: {}", phi_registry_names().join(", "));
    let names: Vec<&str> = BUNDLED_CONFIGS.iter().map(|(n, _)| *n).collect();
    println!("bundled configs: {}", names.join(", "));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::MleDemo(a) => mle_demo(a),
        Command::Validate { config } => match validate(config) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(2),
            Err(e) => Err(e),
        },
        Command::ListRegistries => {
            list_registries();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
