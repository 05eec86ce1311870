use std::path::PathBuf;
use std::process::ExitCode;

use ahs_experiments::{execute, ExperimentConfig, ExperimentError, ExperimentKind};
use clap::{Args, Parser, Subcommand};

/// Rydberg AHS crosstalk experiments.
#[derive(Parser)]
#[command(name = "ahs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expected per-qubit counts of the noiseless program.
    Control(Common),
    /// Translate the program over a grid and report rf per cell.
    Heatmap(Common),
    /// Victim rf versus attacker separation.
    Sweep(Common),
    /// Fixed worst-case placement versus moving target defense.
    Mtd(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure_threads() -> Result<(), ExperimentError> {
    let Ok(raw) = std::env::var("AHS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        ExperimentError::Config(format!(
            "AHS_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ExperimentError::Config(e.to_string()))
}

fn run(kind: ExperimentKind, args: Common) -> Result<Vec<PathBuf>, ExperimentError> {
    configure_threads()?;
    let (mut cfg, base) = ExperimentConfig::load(&args.config)?;
    if cfg.experiment != kind {
        return Err(ExperimentError::Config(format!(
            "config selects experiment {:?} but the {:?} subcommand was given",
            cfg.experiment.name(),
            kind.name()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output.path = Some(out);
    }
    execute(&cfg.resolve(&base)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Control(a) => (ExperimentKind::Control, a),
        Command::Heatmap(a) => (ExperimentKind::Heatmap, a),
        Command::Sweep(a) => (ExperimentKind::Sweep, a),
        Command::Mtd(a) => (ExperimentKind::Mtd, a),
    };
    match run(kind, args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ahs {}: {e}", kind.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
