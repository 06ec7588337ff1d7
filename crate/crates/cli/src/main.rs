//! `cq` — measure a language's compilation quotient from its grammar.
//!
//! Pipeline: `check` a grammar, `sample` programs from it, `measure` a full
//! campaign (sample, compile, report), or re-`report` an existing campaign.

mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cq", version, about = "Grammar-driven compilation-quotient measurement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, desugar, and validate a grammar; print its statistics.
    Check {
        /// Grammar file (.cqg)
        grammar: PathBuf,
    },
    /// Sample programs from a grammar into a directory.
    Sample(SampleArgs),
    /// Run a full campaign from a spec file: sample, compile, report.
    Measure {
        /// Campaign spec (JSON)
        #[arg(long)]
        spec: PathBuf,
        /// Compile workers (default: logical CPUs)
        #[arg(long)]
        workers: Option<usize>,
        /// Number of runs with consecutive seeds (default: from spec)
        #[arg(long)]
        runs: Option<u32>,
    },
    /// Recompute the report of an existing campaign directory.
    Report {
        /// Campaign directory written by `measure`
        #[arg(long)]
        campaign: PathBuf,
    },
}

#[derive(Args)]
struct SampleArgs {
    /// Grammar file (.cqg)
    #[arg(long)]
    grammar: PathBuf,
    /// Language config (JSON); supplies render rules and file extension
    #[arg(long)]
    config: PathBuf,
    /// Byte-size range `A:B` (half-open)
    #[arg(long)]
    range: String,
    /// Number of equal byte buckets
    #[arg(long)]
    buckets: usize,
    /// Sample target per bucket
    #[arg(long)]
    target: u64,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Oversampling factor
    #[arg(long, default_value_t = 8)]
    alpha: u64,
    /// Retry limit per bucket
    #[arg(long, default_value_t = 16)]
    max_tries: u32,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap's help/version output is not an error.
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Check { grammar } => pipeline::cmd_check(&grammar),
        Command::Sample(args) => pipeline::cmd_sample(&args.grammar, &args.config, &args.range, args.buckets, args.target, args.seed, &args.out, args.alpha, args.max_tries),
        Command::Measure { spec, workers, runs } => pipeline::cmd_measure(&spec, workers, runs),
        Command::Report { campaign } => pipeline::cmd_report(&campaign),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("cq: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
