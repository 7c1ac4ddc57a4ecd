use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fso_geoloss::config::{ExperimentConfig, OutputFormat};
use fso_geoloss::experiments::{cmd_average_loss, cmd_bounds, cmd_pdf, cmd_validate, RunError, RunResult};

/// Geometric loss of a drone-mounted free-space-optical link.
#[derive(Parser)]
#[command(name = "fso-geoloss", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact loss, bounds and approximations versus the angle alpha.
    Bounds(Common),
    /// Monte Carlo average loss versus the stability parameter.
    AverageLoss(Common),
    /// Loss histogram, analytic density and chi-square test.
    Pdf(Common),
    /// Run the invariant suite; exit status 1 if any check fails.
    Validate(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Configuration file (flat `key = value`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Master seed of the Monte Carlo streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per configuration.
    #[arg(long)]
    trials: Option<u64>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

fn load(c: &Common) -> RunResult<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            ExperimentConfig::parse_str(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(n) = c.trials {
        cfg.n_trials = n;
    }
    if let Some(t) = c.tol {
        cfg.rel_tol = t;
    }
    if let Some(f) = c.format {
        cfg.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    if let Some(o) = &c.out {
        cfg.output_path = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> RunResult<bool> {
    let (common, f): (&Common, fn(&ExperimentConfig) -> RunResult<_>) = match &cli.command {
        Command::Bounds(c) => (c, cmd_bounds),
        Command::AverageLoss(c) => (c, cmd_average_loss),
        Command::Pdf(c) => (c, cmd_pdf),
        Command::Validate(c) => (c, cmd_validate),
    };
    let cfg = load(common)?;
    let report = f(&cfg)?;
    let text = report.render(&cfg, cfg.format);
    match &cfg.output_path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    if report.passed == Some(false) {
        for (k, v) in &report.metadata {
            if k == "failed" {
                eprintln!("validation failed: {v}");
            }
        }
        return Ok(false);
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                RunError::Config(_) | RunError::Io(_) | RunError::Numerical(_) => e.exit_code() as u8,
            })
        }
    }
}
