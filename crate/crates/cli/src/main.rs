use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hjbex::exec::Exec;
use hjbex_cli::{execute_batch, Command};

#[derive(Parser)]
#[command(name = "hjbex", version, about = "Simulate and verify explicitly solvable infinite-dimensional control problems")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Simulate the closed loop; writes trajectory.csv and summary.json.
    Run(Common),
    /// Run the verification suite; writes report.json.
    Verify(Common),
    /// Bracket the value of a delay model by brute-force DP; writes report.json.
    Oracle(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML, or JSON such as a previous summary). Repeat for a batch.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Double the resolutions and halve the time step this many times.
    #[arg(long, default_value_t = 0)]
    refine: u32,
    /// Seed of the random test states used by `verify`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run without worker threads.
    #[arg(long)]
    sequential: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Run(a) => (Command::Run, a),
        Sub::Verify(a) => (Command::Verify, a),
        Sub::Oracle(a) => (Command::Oracle, a),
    };
    let exec = if args.sequential { Exec::Sequential } else { Exec::Parallel };
    let results = execute_batch(command, &args.configs, &args.out, args.refine, args.seed, exec);
    let mut code = 0;
    for (path, r) in args.configs.iter().zip(results) {
        if let Err(e) = r {
            eprintln!("{}: {e}", path.display());
            if code == 0 {
                code = e.exit_code();
            }
        }
    }
    ExitCode::from(code)
}
