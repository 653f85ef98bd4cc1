use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gkp_switch::runner::{execute, Command, Invocation, EXIT_CONFIG};

/// Simulate and optimize a GKP-qubit quantum switch.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rates of a single allocation (experiment kind `rate`).
    Simulate(RunArgs),
    /// Allocation or placement search (`optimize-two`, `placement`, `optimize-multi`).
    Optimize(RunArgs),
    /// Sweeps (`dominant-sweep`, `fairness-sweep`).
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output.path`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let (command, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Optimize(a) => (Command::Optimize, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    let code = execute(&Invocation {
        command,
        config_path: args.config,
        seed: args.seed,
        out_dir: args.out,
    });
    ExitCode::from(code as u8)
}
