//! `dbd` — train, evaluate, replay, serve, and watch driving-behavior
//! detection pipelines from the terminal.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/model error,
//! 3 transport error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

mod commands;
mod endpoint;

use endpoint::Endpoint;

#[derive(Parser)]
#[command(
    name = "dbd",
    version,
    about = "Driving-behavior detection: train models, score datasets, and stream predictions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a sensor CSV and save a checkpoint.
    Train(TrainArgs),
    /// Score a saved checkpoint against a sensor CSV.
    Evaluate(EvaluateArgs),
    /// Publish a recorded CSV as a live frame stream.
    Replay(ReplayArgs),
    /// Run online inference over a frame stream.
    Serve(ServeArgs),
    /// Print a message stream as human-readable lines.
    Tail(TailArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Sensor CSV (last column is the driver tag).
    #[arg(long)]
    data: PathBuf,
    /// Channel subset: A, B, C, or `full` for every column.
    #[arg(long, default_value = "A")]
    subset: String,
    /// TOML file overriding any subset of the model configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write the checkpoint.
    #[arg(long)]
    out: PathBuf,
    /// Also write the experiment report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write the test-set ROC points as CSV.
    #[arg(long)]
    roc: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Checkpoint produced by `dbd train`.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Sensor CSV to score.
    #[arg(long)]
    data: PathBuf,
    /// Also write the report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write the ROC points as CSV.
    #[arg(long)]
    roc: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Sensor CSV to replay.
    #[arg(long)]
    data: PathBuf,
    /// Channel subset: A, B, C, or `full`.
    #[arg(long, default_value = "A")]
    subset: String,
    /// Replay speed: 1 = real time, 10 = ten times faster, 0 = flat out.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Destination: `tcp:host:port` (connects) or `file:path`.
    #[arg(long)]
    out: Endpoint,
}

#[derive(Args)]
struct ServeArgs {
    /// Checkpoint produced by `dbd train`.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Frame source: `tcp:host:port` (listens) or `file:path`.
    #[arg(long = "in")]
    input: Endpoint,
    /// Event destination: `tcp:host:port` (connects) or `file:path`.
    #[arg(long)]
    out: Endpoint,
    /// Emit a daily report after this many predictions.
    #[arg(long, default_value_t = 60)]
    report_every: u64,
    /// Suppress alerts closer than this many stream-seconds together.
    #[arg(long)]
    alert_min_gap: Option<u64>,
}

#[derive(Args)]
struct TailArgs {
    /// Message source: `tcp:host:port` (listens) or `file:path`.
    #[arg(long = "in")]
    input: Endpoint,
    /// Comma-separated kinds to show (default: everything):
    /// frame, prediction, alert, daily_report, status.
    #[arg(long)]
    kinds: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are successful outcomes, not usage errors.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let result = match cli.command {
        Command::Train(args) => commands::train(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Replay(args) => commands::replay(args),
        Command::Serve(args) => commands::serve(args),
        Command::Tail(args) => commands::tail(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
