use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use qlink_cli::scenario::key_help;
use qlink_cli::{parse_scenario, run, write_outputs, Command, ConfigError, RunError};

#[derive(Parser)]
#[command(name = "qlink", version, about = "Jamming-protected quantum link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Dual traces and the decoded payload (text, or image if no text).
    Simulate(Common),
    /// Classical and quantum SNR against jamming ratio.
    SweepSnr(Common),
    /// Send payload.text; reference bits and Alice/Eve decodes.
    SendMessage(Common),
    /// Scan payload.image; Alice/Eve reconstructions and correlation audit.
    SendImage(Common),
    /// Eye diagram of an alternating pattern at payload.eye_bit_rate.
    Eye(Common),
    /// Security threshold, actual ratio, verdict and DFG check.
    SecurityCheck(Common),
    /// Print every scenario key with its unit and default.
    Keys,
}

#[derive(Args)]
struct Common {
    /// Scenario file of key=value lines.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (overrides outputs.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override (replaces sampling.seed).
    #[arg(long)]
    seed: Option<u64>,
}

fn workers() -> Result<(), ConfigError> {
    let Ok(value) = std::env::var("QLINK_WORKERS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError::Invalid(format!("QLINK_WORKERS = '{value}' is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError::Invalid(e.to_string()))
}

fn execute(command: Command, args: &Common) -> Result<String, RunError> {
    workers()?;
    let mut scenario = parse_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.sampling.seed = seed;
    }
    let output = run(command, &scenario)?;
    let dir = args.out.clone().unwrap_or_else(|| scenario.output_dir.clone());
    write_outputs(&dir, command, &scenario, &output)?;
    Ok(output.summary)
}

fn main() -> ExitCode {
    let help = format!(
        "{}\nSet QLINK_WORKERS to bound the worker threads (default: all processors).\n\
         Exit status: 0 ok, 2 configuration error, 3 runtime error.",
        key_help()
    );
    let matches = Cli::command().after_long_help(help).get_matches();
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    let (command, args) = match &cli.command {
        Sub::Simulate(a) => (Command::Simulate, a),
        Sub::SweepSnr(a) => (Command::SweepSnr, a),
        Sub::SendMessage(a) => (Command::SendMessage, a),
        Sub::SendImage(a) => (Command::SendImage, a),
        Sub::Eye(a) => (Command::Eye, a),
        Sub::SecurityCheck(a) => (Command::SecurityCheck, a),
        Sub::Keys => {
            print!("{}", key_help());
            return ExitCode::SUCCESS;
        }
    };
    match execute(command, args) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qlink {}: {e}", command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
