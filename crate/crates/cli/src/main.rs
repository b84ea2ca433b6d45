//! `netclear`: clearing, compression and experiments on liability networks.
//!
//! Exit codes: 0 success, 2 invalid input, 3 the decision answered "no", 4 a search budget
//! ran out, 1 internal failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "netclear", version, about = "Clearing and portfolio compression for financial networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Proportional,
    Priority,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RestrictArg {
    None,
    Bilateral,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GadgetKindArg {
    Max2sat,
    Max2satCycle,
    Partition,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a market file and print a short report.
    Check {
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the maximal clearing vector.
    Clear {
        #[arg(long, value_enum, default_value = "priority")]
        model: Model,
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the regime of every round of the clearing algorithm.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Search for compressions.
    #[command(subcommand)]
    Compress(CompressCommand),
    /// Generate markets.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run the baseline / greedy / MILP experiment over Erdős–Rényi markets.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Directory receiving `summary.csv` and `instances.jsonl`.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum CompressCommand {
    /// Cancel cycles greedily by their bottleneck until none is left.
    Greedy {
        #[arg(long, value_enum, default_value = "priority")]
        model: Model,
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimise the number of defaulting banks exactly.
    Optimal {
        #[arg(long)]
        market: PathBuf,
        /// `auto` or a positive integer making every amount integral.
        #[arg(long, default_value = "auto")]
        scale: String,
        #[arg(long, value_enum, default_value = "none")]
        restrict: RestrictArg,
        #[arg(long)]
        node_limit: Option<u64>,
        /// Cap on simplex pivots and bound flips over the whole search.
        #[arg(long)]
        step_limit: Option<u64>,
        /// Seconds of wall time.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide whether some compression leaves at most one bank in default.
    SaveAllButOne {
        #[arg(long, value_enum, default_value = "priority")]
        model: Model,
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum GenCommand {
    /// Erdős–Rényi market with the simulation distributions.
    Er {
        /// Number of banks; required unless the config sets it.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        p: Option<f64>,
        /// Decimal places of liabilities and endowments.
        #[arg(long)]
        decimals: Option<u32>,
        /// Generator configuration (JSON); flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Snowball sample of a CSV edge list with header `from,to,amount`.
    Snowball {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduction gadget; its metadata is printed to standard output.
    Gadget {
        #[arg(long, value_enum)]
        kind: GadgetKindArg,
        /// `{"variables": n, "clauses": [[1, 2], [-1, -2]], "k": K}` or `{"values": [..]}`.
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
