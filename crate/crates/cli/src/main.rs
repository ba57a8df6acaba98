//! `archtrap`: parse, unfold and verify parametric component-based systems.

mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use report::{RunReport, Verdict};

#[derive(Parser, Debug)]
#[command(name = "archtrap", version, about = "Deadlock verification of parametric component-based systems")]
struct Cli {
    /// Print the report as JSON instead of a summary table.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Bounds {
    /// Largest rewriting tree to enumerate, in nodes.
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Number of instances of the first declared component type.
    #[arg(long)]
    size: Option<usize>,
    /// Cap on explored configurations per instance.
    #[arg(long, default_value_t = archtrap_core::oracle::DEFAULT_LIMIT)]
    limit: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Solver binary; defaults to `MONA_BIN`, then `mona` on `PATH`.
    #[arg(long)]
    mona_path: Option<PathBuf>,
    /// Solver time limit in seconds.
    #[arg(long, default_value_t = 60)]
    solver_timeout: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a specification.
    Check { spec: String },
    /// Print the normalized rewriting system.
    Normalize { spec: String },
    /// Stream rewriting trees and their ground architectures, one JSON object per line.
    Unfold {
        spec: String,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Check bounded instances by exhaustive reachability and trap invariants.
    VerifyGround {
        spec: String,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Print the marked traps of one instance.
    Traps {
        spec: String,
        /// Index of the tree in enumeration order.
        #[arg(long)]
        tree: Option<usize>,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Write the safety formula in solver syntax.
    Emit {
        spec: String,
        /// Output file; standard output when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Prove parametric safety with the solver, or gather bounded evidence without it.
    Verify {
        spec: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Cross-validate the symbolic encoding against explicit semantics.
    OracleCheck {
        spec: String,
        #[command(flatten)]
        bounds: Bounds,
        /// Run only the named suites.
        #[arg(long = "suite")]
        suites: Vec<String>,
    },
    /// Endpoints of a path automaton on one tree.
    Paths {
        spec: String,
        /// Index of the tree in enumeration order.
        #[arg(long)]
        tree: usize,
        /// Start occurrence, as `rule.variable` (for example `r2.x1`).
        #[arg(long)]
        from: String,
        /// End occurrence, as `rule.variable`.
        #[arg(long)]
        to: String,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Built-in benchmark specifications.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand, Debug)]
enum CorpusAction {
    /// List the built-in specifications.
    List,
}

fn run(command: Command, stream: bool) -> RunReport {
    match command {
        Command::Check { spec } => commands::check(&spec),
        Command::Normalize { spec } => commands::normalize(&spec),
        Command::Unfold { spec, bounds } => commands::unfold(&spec, &bounds, stream),
        Command::VerifyGround { spec, bounds } => commands::verify_ground(&spec, &bounds),
        Command::Traps { spec, tree, bounds } => commands::traps(&spec, tree, &bounds),
        Command::Emit { spec, output } => commands::emit(&spec, output.as_deref()),
        Command::Verify { spec, solver, bounds } => commands::verify(&spec, &solver, &bounds),
        Command::OracleCheck { spec, bounds, suites } => commands::oracle_check(&spec, &bounds, &suites),
        Command::Paths { spec, tree, from, to, bounds } => commands::paths(&spec, tree, &from, &to, &bounds),
        Command::Corpus { action: CorpusAction::List } => commands::corpus_list(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(Verdict::Error.exit_code() as u8);
        }
    };
    let start = Instant::now();
    let json = cli.json;
    let streaming = matches!(cli.command, Command::Unfold { .. }) && !json;
    let mut report = run(cli.command, streaming);
    report.timing.elapsed_ms = start.elapsed().as_millis() as u64;
    // a closed pipe downstream is not an error of ours
    let mut out = std::io::stdout().lock();
    if json {
        let _ = writeln!(out, "{}", report.to_json());
    } else {
        let _ = write!(out, "{}", report.text);
        if streaming {
            let _ = write!(std::io::stderr(), "{}", report.table());
        } else {
            let _ = write!(out, "{}", report.table());
        }
    }
    ExitCode::from(report.verdict.exit_code() as u8)
}
