use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use widecal::app::{self, Overrides};
use widecal::refine::Strategy;
use widecal::Result;

/// Iterative wide-angle and fisheye camera calibration.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate from a dataset directory or a synthetic scene.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides pipeline.iterations.
        #[arg(long)]
        iterations: Option<usize>,
        /// Overrides refine.strategy: adaptive or symmetry.
        #[arg(long)]
        strategy: Option<Strategy>,
        /// Overrides output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the synthetic scene of a config to PGM frames and gt.jsonl.
    Render {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute the coverage table and RMS from result.json and a detections file.
    Report {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        /// Where coverage.csv goes; defaults to the directory of the result file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    app::init_threads()?;
    match cli.command {
        Command::Calibrate { config, iterations, strategy, out } => {
            let dir = app::cmd_calibrate(&config, &Overrides { iterations, strategy, output_dir: out })?;
            println!("wrote {}", dir.display());
        }
        Command::Render { config } => {
            let dir = app::cmd_render(&config)?;
            println!("wrote {}", dir.display());
        }
        Command::Report { result, detections, out } => {
            let out = out.unwrap_or_else(|| result.parent().map(PathBuf::from).unwrap_or_default());
            print!("{}", app::cmd_report(&result, &detections, &out)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors share the configuration exit code.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
