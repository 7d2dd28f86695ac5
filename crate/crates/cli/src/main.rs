use clap::{Parser, Subcommand};
use neuron_lab::theory::battery::Suite;
use neuron_lab_cli::{cmd_report, cmd_run, cmd_sweep, cmd_verify, CliError, Exit, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "neuron-lab", version, about = "Gradient methods on a single ReLU neuron with bias")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Base seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output root; defaults to $NEURON_LAB_OUT, then ./results.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Multiplies every checker tolerance.
    #[arg(long, global = true)]
    tolerance_scale: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the checker battery.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Cross-product sweep over the grids in the config's [sweep] table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Pretty-print a stored result and re-derive its verdict.
    Report { path: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if workers == 0 {
        eprintln!("config error: --workers must be at least 1");
        return ExitCode::from(Exit::Config as u8);
    }
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    let o = Overrides { seed: cli.seed, out: cli.out, tolerance_scale: cli.tolerance_scale, workers };
    let mut out = std::io::stdout();
    let result: Result<Exit, CliError> = match &cli.command {
        Command::Run { config } => cmd_run(config, &o, &mut out).map(|r| r.0),
        Command::Verify { suite, inject_fault } => cmd_verify(*suite, &o, *inject_fault, &mut out),
        Command::Sweep { config } => cmd_sweep(config, &o, &mut out).map(|r| r.0),
        Command::Report { path } => cmd_report(path, &mut out),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(Exit::from_error(&e) as u8)
        }
    }
}
