use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use padforge::pipeline::{run_all, run_stage, PipelineConfig, Stage, StageReport};
use padforge::Error;

/// Synthetic-data iris PAD pipeline.
#[derive(Parser, Debug)]
#[command(name = "padforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render gallery, candidate and test images.
    Synth(Common),
    /// Encode iris templates for the gallery and all candidates.
    Enroll(Common),
    /// Drop candidates that match the gallery or fail to enroll.
    Filter(Common),
    /// Balance classes and brands, crop PAD inputs, split train/val.
    Curate(Common),
    /// Train one PAD model per derived seed.
    Train(Common),
    /// Score test sets and aggregate metrics across seeds.
    Eval(Common),
    /// Merge evaluation reports into a BPCER table.
    Report(Common),
    /// Every stage in order.
    Run(Common),
}

#[derive(clap::Args, Debug)]
struct Common {
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Overrides `master_seed` from the config.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Overrides `work_dir` from the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (Option<Stage>, Common) {
        match self {
            Command::Synth(c) => (Some(Stage::Synth), c),
            Command::Enroll(c) => (Some(Stage::Enroll), c),
            Command::Filter(c) => (Some(Stage::Filter), c),
            Command::Curate(c) => (Some(Stage::Curate), c),
            Command::Train(c) => (Some(Stage::Train), c),
            Command::Eval(c) => (Some(Stage::Eval), c),
            Command::Report(c) => (Some(Stage::Report), c),
            Command::Run(c) => (None, c),
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::VerificationFailed(_) => 3,
        Error::InsufficientSurvivors { .. } | Error::InsufficientData(_) => 4,
        _ => 1,
    }
}

fn execute(cmd: Command) -> padforge::Result<Vec<StageReport>> {
    let (stage, common) = cmd.split();
    let mut cfg = PipelineConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = common.out {
        // Relative to the invocation directory, not the config file.
        cfg.work_dir = std::env::current_dir().map(|d| d.join(&out)).unwrap_or(out);
    }
    match stage {
        Some(s) => run_stage(&cfg, s).map(|r| vec![r]),
        None => run_all(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(reports) => {
            for r in &reports {
                println!("{} {} {}", r.stage, r.digest, r.summary);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("padforge: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
