use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use fisheye_tec::pipeline::experiment::{format_report, Report};
use fisheye_tec::pipeline::{run_experiment, write_synthetic, ExperimentConfig, FrameRange};
use fisheye_tec::EngineRegistry;

/// Temporal error concealment for equisolid fisheye video.
#[derive(Debug, Parser)]
#[command(name = "conceal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Inject losses, conceal them and write a JSON report plus images.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// dmve | etec | hybrid
        #[arg(long)]
        engine: Option<String>,
        /// Loss placement seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Tested frames, e.g. `1..10` (exclusive) or `1..=10`.
        #[arg(long)]
        frames: Option<FrameRange>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the configured synthetic sequence to a YUV 4:2:0 file.
    Synth {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the summary table of a finished run.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            engine,
            seed,
            frames,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(e) = engine {
                cfg.engine = e;
            }
            if let Some(s) = seed {
                cfg.loss.seed = s;
            }
            if let Some(f) = frames {
                cfg.frames = f;
            }
            if let Some(o) = out {
                cfg.output.dir = o;
            }
            let report = run_experiment(&cfg, &EngineRegistry::with_builtins(), true)?;
            print!("{}", format_report(&report));
            println!("report written to {}", cfg.output.dir.join("report.json").display());
        }
        Command::Synth { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let path = write_synthetic(&cfg)?;
            println!("{}", path.display());
        }
        Command::Report { input } => {
            let report = Report::load(&input)
                .with_context(|| format!("reading report from {}", input.display()))?;
            print!("{}", format_report(&report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("conceal: {e:#}");
            ExitCode::FAILURE
        }
    }
}
