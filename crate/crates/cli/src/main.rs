//! `xraypipe`: corpus generation, splitting, preprocessing, evaluation and
//! timing from the command line.
//!
//! Exit status is 0 on success, 1 on a runtime failure and 2 on a usage
//! error. Log verbosity is read from `XRAYPIPE_LOG` (default `warn`).

mod commands;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "xraypipe", version, about = "Dual-energy X-ray preprocessing and evaluation")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Args, Clone)]
pub struct ConfigArgs {
    /// TOML (or `.json`) run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the effective configuration as TOML to this path.
    #[arg(long, global = true)]
    pub dump_config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic corpus with known ground truth.
    Gen(commands::GenArgs),
    /// Assign imagegroups to train and test, or verify an assignment.
    Split(commands::SplitArgs),
    /// Crop every image to the corpus mean response window.
    Preprocess(commands::PreprocessArgs),
    /// Score predictions, or fit and score the histogram baseline.
    Eval(commands::EvalArgs),
    /// Time a stub classifier under the inference protocol.
    Bench(commands::BenchArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("XRAYPIPE_LOG", "warn")).init();
    let cli = Cli::parse();
    let cfg = &cli.config;
    let result = match cli.command {
        Command::Gen(a) => commands::gen(cfg, a),
        Command::Split(a) => commands::split(cfg, a),
        Command::Preprocess(a) => commands::preprocess(cfg, a),
        Command::Eval(a) => commands::eval(cfg, a),
        Command::Bench(a) => commands::bench(cfg, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
