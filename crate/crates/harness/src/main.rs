use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use crng_core::Error;
use crng_harness::commands::{run, Command};
use crng_harness::output::write_outputs;
use crng_harness::spec::{validate_spec_with, Overrides};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Region,
    Simulate,
    Verify,
    Bounds,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Region => Command::Region,
            Cmd::Simulate => Command::Simulate,
            Cmd::Verify => Command::Verify,
            Cmd::Bounds => Command::Bounds,
        }
    }
}

/// Constrained-random-number coding experiments: rate regions, simulation,
/// structural checks and error bounds.
#[derive(Parser, Debug)]
#[command(name = "crng", version)]
struct Cli {
    command: Cmd,
    /// experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// output directory (default: output.dir from the config, else ./crng-out)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// write one line per simulated trial to trials.log
    #[arg(long)]
    trial_log: bool,
}

const EXIT_INPUT: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_INVARIANT: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let ov = Overrides { trials: cli.trials, seed: cli.seed, threads: cli.threads, out: cli.out.clone(), trial_log: cli.trial_log };
    let spec = match validate_spec_with(&text, &ov) {
        Ok(s) => s,
        Err(errors) => {
            for e in &errors {
                eprintln!("{}:{e}", cli.config.display());
            }
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let command = Command::from(cli.command);
    let record = match run(command, &spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                Error::Input(_) => EXIT_INPUT,
                Error::Resource(_) => EXIT_RESOURCE,
                Error::Invariant(_) => EXIT_INVARIANT,
            });
        }
    };
    let dir = spec.out_dir.clone().unwrap_or_else(|| PathBuf::from("crng-out"));
    match write_outputs(&record, &dir) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: cannot write results to {}: {e}", dir.display());
            return ExitCode::FAILURE;
        }
    }
    println!("{command} {} config {}", if record.failure.is_some() { "FAILED" } else { "ok" }, spec.config_hash);
    if let Some(f) = &record.failure {
        eprintln!("{f}");
        return ExitCode::from(EXIT_INVARIANT);
    }
    ExitCode::SUCCESS
}
