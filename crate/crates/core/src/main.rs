use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use porofrac::cli_io::{load_config, run_benchmark, run_scenario, write_table, write_timeseries, RunOptions};

#[derive(Parser)]
#[command(name = "porofrac", version, about = "Peridynamic hydraulic-fracture simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for time series, tables and snapshots.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Override the number of steps.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Override the time step.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Write a field snapshot every N steps (0 disables).
    #[arg(long, global = true)]
    snapshot_every: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run { config: PathBuf },
    /// Run a named benchmark and report pass or fail.
    Bench { name: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions { out_dir: cli.out_dir.clone(), steps: cli.steps, dt: cli.dt, snapshot_every: cli.snapshot_every };
    let outcome = match &cli.command {
        Command::Run { config } => run(config, &opts),
        Command::Bench { name } => bench(name, &opts),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(config: &Path, opts: &RunOptions) -> porofrac::Result<bool> {
    let cfg = load_config(config)?;
    let rows = run_scenario(&cfg, opts)?;
    if let Some(last) = rows.last() {
        println!(
            "{} steps, t = {:e} s, monitor p = {:e} Pa, crack length = {} m",
            last.step, last.time, last.monitor_pressure, last.crack_length
        );
    }
    println!("outputs in {}", opts.out_dir.display());
    Ok(true)
}

fn bench(name: &str, opts: &RunOptions) -> porofrac::Result<bool> {
    if opts.steps.is_some() || opts.dt.is_some() || opts.snapshot_every.is_some() {
        eprintln!("note: --steps, --dt and --snapshot-every do not apply to benchmarks");
    }
    let report = run_benchmark(name)?;
    std::fs::create_dir_all(&opts.out_dir)?;
    if !report.rows.is_empty() {
        write_table(&report.rows, &opts.out_dir.join(format!("{name}_comparison.csv")))?;
    }
    if !report.records.is_empty() {
        write_timeseries(&report.records, &opts.out_dir.join(format!("{name}_timeseries.csv")))?;
    }
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.label, c.detail);
    }
    println!("{name}: {}", if report.passed() { "PASS" } else { "FAIL" });
    Ok(report.passed())
}
