//! `memwave`: configuration-driven runs of the memory wave toolkit.
//!
//! Exit status: 0 success, 2 config error, 3 numerical guard, 4 I/O error.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use config::RunConfig;
use error::CliError;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Verb {
    /// Resolvent kernel and transformed-equation constants.
    Resolvent,
    /// Free modal evolution from initial data.
    Simulate,
    /// Minimum-norm boundary control with closed-loop check.
    Control,
    /// Direct and inverse inequality constants.
    Verify,
    /// Inverse constant over a list of parameter values.
    Sweep,
}

#[derive(Debug, Parser)]
#[command(name = "memwave", version, about = "Boundary control of wave equations with memory")]
struct Args {
    verb: Verb,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the `seed` key of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: rayon's choice).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: &Args) -> Result<Vec<String>, CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let mut cfg = RunConfig::load(&args.config)?;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    let out = match args.verb {
        Verb::Resolvent => commands::resolvent(&cfg)?,
        Verb::Simulate => commands::simulate(&cfg)?,
        Verb::Control => commands::control(&cfg)?,
        Verb::Verify => commands::verify(&cfg)?,
        Verb::Sweep => commands::sweep(&cfg)?,
    };
    let names = out.names().map(str::to_string).collect();
    out.commit(&args.out)?;
    Ok(names)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(names) => {
            for n in names {
                println!("{}", args.out.join(n).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("memwave: {e}");
            e.exit_code()
        }
    }
}
