//! Experiment runner binary. Thin shell: parse arguments, load the
//! configuration, dispatch to the library, write artifacts.
//!
//! Exit codes: 0 success, 1 infrastructure failure (I/O, solver), 2
//! invalid configuration or arguments.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use reslab_cli::commands::{self, Artifacts};
use reslab_cli::config::{load_config, ExperimentConfig, Overrides};
use reslab_cli::ConfigInvalid;

#[derive(Parser)]
#[command(
    name = "reslab",
    about = "Residual-network loss-landscape experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to a flat key-value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the experiment seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write artifacts into this directory instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of training restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Override the gradient-norm convergence tolerance.
    #[arg(long)]
    grad_tol: Option<f64>,
    /// Output format; only `csv` is supported.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form global minima of the fixed and augmented linear bases.
    Oracle(CommonArgs),
    /// Train with restarts, certify endpoints, compare against oracles.
    TrainVerify(CommonArgs),
    /// Build the dead-unit network separating plain nets from the linear fit.
    Counterexample(CommonArgs),
    /// Cartesian sweep over `sweep.*` config lists, aggregated per cell.
    Sweep(CommonArgs),
    /// Run the built-in invariant smoke suite.
    Check,
}

fn overrides_of(args: &CommonArgs) -> Result<Overrides> {
    if args.format != "csv" {
        return Err(anyhow::Error::new(ConfigInvalid(format!(
            "unsupported output format {:?}; only csv is available",
            args.format
        ))));
    }
    Ok(Overrides {
        seed: args.seed,
        out_dir: args.out.clone(),
        restarts: args.restarts,
        grad_tol: args.grad_tol,
    })
}

fn read_config_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))
}

fn load(args: &CommonArgs) -> Result<(String, ExperimentConfig, Overrides)> {
    let over = overrides_of(args)?;
    let text = read_config_text(&args.config)?;
    let cfg = load_config(&text, &over)
        .map_err(|e| anyhow::Error::new(ConfigInvalid(format!("{e:#}"))))?;
    Ok((text, cfg, over))
}

fn write_artifacts(artifacts: &Artifacts, out_dir: Option<&Path>) -> Result<()> {
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating output directory {}", dir.display()))?;
            for (name, contents) in &artifacts.files {
                let path = dir.join(name);
                fs::write(&path, contents)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(timing) = &artifacts.timing {
                fs::write(dir.join("timing.txt"), timing).context("writing timing.txt")?;
            }
        }
        None => {
            for (name, contents) in &artifacts.files {
                println!("# file: {name}");
                print!("{contents}");
            }
        }
    }
    Ok(())
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Oracle(args) => {
            let (_, cfg, _) = load(&args)?;
            write_artifacts(&commands::cmd_oracle(&cfg)?, cfg.out_dir.as_deref())?;
            Ok(true)
        }
        Command::TrainVerify(args) => {
            let (_, cfg, _) = load(&args)?;
            write_artifacts(&commands::cmd_train_verify(&cfg)?, cfg.out_dir.as_deref())?;
            Ok(true)
        }
        Command::Counterexample(args) => {
            let (_, cfg, _) = load(&args)?;
            write_artifacts(&commands::cmd_counterexample(&cfg)?, cfg.out_dir.as_deref())?;
            Ok(true)
        }
        Command::Sweep(args) => {
            let (text, cfg, over) = load(&args)?;
            write_artifacts(&commands::cmd_sweep(&text, &over)?, cfg.out_dir.as_deref())?;
            Ok(true)
        }
        Command::Check => {
            let (report, all_pass) = commands::cmd_check();
            print!("{report}");
            Ok(all_pass)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigInvalid>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
