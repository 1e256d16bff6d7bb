use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use dmvc::io::{cmd_evaluate, cmd_fit, cmd_report, cmd_simulate};

#[derive(Parser)]
#[command(name = "dmvc", version, about = "Directional multi-view clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a two-view copula scenario and fit configs for it.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: $DMVC_OUTPUT_ROOT/<config name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Gibbs sampler and write traces.
    Fit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Similarity matrices, consensus labels and optional truth comparison.
    Evaluate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Output directory (default: <trace>/evaluation).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a summary of a fit.
    Report {
        #[arg(long)]
        trace: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate { config, out } => {
            let dir = cmd_simulate(&config, out.as_deref())
                .with_context(|| format!("simulating from {}", config.display()))?;
            println!("{}", dir.display());
        }
        Command::Fit { config } => {
            let dir = cmd_fit(&config).with_context(|| format!("fitting {}", config.display()))?;
            println!("{}", dir.display());
        }
        Command::Evaluate { trace, truth, out } => {
            let report = cmd_evaluate(&trace, truth.as_deref(), out.as_deref())
                .with_context(|| format!("evaluating {}", trace.display()))?;
            for v in &report.views {
                println!("{}: {} consensus clusters", v.name, v.consensus_clusters);
            }
            if let Some(t) = &report.truth {
                println!("accuracy {:.4}, rand index {:.4}", t.accuracy, t.rand_index);
            }
        }
        Command::Report { trace } => {
            print!("{}", cmd_report(&trace).with_context(|| format!("reading {}", trace.display()))?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
