//! Command-line interface.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use crate::config::{Estimator, ExperimentConfig};
use crate::exit;
use crate::figures::{emit_figure_data, BARS_FILE};
use crate::pipeline::run_pipeline;
use crate::report::{
    read_stored, write_json, Status, Stored, Timings, GRID_FILE, REPORT_FILE, TIMINGS_FILE,
};
use crate::selfcheck;
use crate::sweep::sweep_from_config;

#[derive(Debug, Parser)]
#[command(name = "photon-maxent", version, about = "Photon-number distributions from on/off detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print stage timings and solver details to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate, estimate and reconstruct; write report.json and fig_bars.csv.
    Run(RunArgs),
    /// Robustness grid over perturbed moments; write grid.json and fig_grid.csv.
    Sweep(SweepArgs),
    /// Emit figure data from a stored report or grid.
    Figures(FiguresArgs),
    /// Run the invariant suite on closed-form oracles.
    Selfcheck,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML experiment config.
    #[arg(short, long)]
    pub config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(short, long)]
    pub output_dir: Option<PathBuf>,
    /// Overrides the design seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use exact probabilities instead of simulated frequencies.
    #[arg(long)]
    pub noiseless: bool,
    /// Overrides the config's estimator.
    #[arg(long, value_enum)]
    pub estimator: Option<Estimator>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML experiment config; its state and `[sweep]` table are used.
    #[arg(short, long)]
    pub config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(short, long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    /// A report.json or grid.json.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Defaults to the directory holding the input.
    #[arg(short, long)]
    pub output_dir: Option<PathBuf>,
}

/// Execute a parsed command line and return the process exit status.
pub fn execute(cli: Cli) -> anyhow::Result<i32> {
    let verbose = cli.verbose;
    match cli.command {
        Command::Run(args) => run(args, verbose),
        Command::Sweep(args) => sweep(args, verbose),
        Command::Figures(args) => figures(args),
        Command::Selfcheck => Ok(selfcheck_cmd()),
    }
}

fn run(args: RunArgs, verbose: bool) -> anyhow::Result<i32> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(dir) = args.output_dir {
        config.output_dir = dir;
    }
    if let Some(seed) = args.seed {
        config.design.seed = seed;
    }
    if args.noiseless {
        config.noiseless = true;
    }
    if let Some(e) = args.estimator {
        config.estimator = e;
    }
    let run = run_pipeline(&config)?;
    let dir = &config.output_dir;
    let report_path = dir.join(REPORT_FILE);
    write_json(&report_path, &Stored::ExperimentReport(run.report.clone()))
        .with_context(|| format!("writing {}", report_path.display()))?;
    write_timings(dir, &run.timings)?;
    let r = &run.report;
    if r.inferred_distribution.is_some() {
        emit_figure_data(&Stored::ExperimentReport(r.clone()), dir)?;
    }
    if verbose {
        print_timings(&run.timings);
        if let Some(m) = &r.moment_estimate {
            eprintln!(
                "moments: N1 = {:.6}, N2 = {:.6}, Q = {:.4}, iterations {}",
                m.n1, m.n2, m.mandel_q, m.iterations
            );
        }
        if let Some(me) = &r.maxent {
            eprintln!(
                "maxent: {} cutoff {} iterations {} lambdas {:?}",
                me.observation_level, me.cutoff, me.iterations, me.lambdas
            );
        }
    }
    let status = match r.status {
        Status::Success => "success",
        Status::Unphysical => "unphysical",
        Status::NotConverged => "not converged",
    };
    match r.fidelity {
        Some(f) => println!("{status}: fidelity {f:.6}"),
        None => println!("{status}"),
    }
    if let Some(msg) = &r.message {
        println!("  {msg}");
    }
    println!("  report: {}", report_path.display());
    if r.inferred_distribution.is_some() {
        println!("  bars: {}", dir.join(BARS_FILE).display());
    }
    Ok(match r.status {
        Status::Success => exit::SUCCESS,
        Status::Unphysical => exit::UNPHYSICAL,
        Status::NotConverged => exit::NOT_CONVERGED,
    })
}

fn sweep(args: SweepArgs, verbose: bool) -> anyhow::Result<i32> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(dir) = args.output_dir {
        config.output_dir = dir;
    }
    let start = Instant::now();
    let grid = sweep_from_config(&config)?;
    let mut timings = Timings::default();
    timings.record("sweep", start.elapsed().as_secs_f64());
    let dir = &config.output_dir;
    let grid_path = dir.join(GRID_FILE);
    let stored = Stored::RobustnessGrid(grid);
    write_json(&grid_path, &stored).with_context(|| format!("writing {}", grid_path.display()))?;
    write_timings(dir, &timings)?;
    let csv = emit_figure_data(&stored, dir)?;
    if verbose {
        print_timings(&timings);
    }
    let Stored::RobustnessGrid(grid) = &stored else {
        unreachable!()
    };
    let masked = grid.cells.iter().filter(|c| !c.physical).count();
    let min = grid
        .cells
        .iter()
        .filter(|c| c.physical)
        .map(|c| c.fidelity)
        .fold(f64::INFINITY, f64::min);
    println!(
        "{} cells, {masked} unphysical, min physical fidelity {min:.6}",
        grid.cells.len()
    );
    println!("  grid: {}", grid_path.display());
    println!("  matrix: {}", csv.display());
    Ok(exit::SUCCESS)
}

fn figures(args: FiguresArgs) -> anyhow::Result<i32> {
    let stored = read_stored(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let dir = args.output_dir.unwrap_or_else(|| {
        args.input
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default()
    });
    let path = emit_figure_data(&stored, &dir)?;
    println!("{}", path.display());
    Ok(exit::SUCCESS)
}

fn selfcheck_cmd() -> i32 {
    let checks = selfcheck::run_all();
    for c in &checks {
        println!("{}", c.line());
    }
    if checks.iter().all(|c| c.passed) {
        exit::SUCCESS
    } else {
        exit::ERROR
    }
}

fn write_timings(dir: &Path, timings: &Timings) -> anyhow::Result<()> {
    let path = dir.join(TIMINGS_FILE);
    write_json(&path, timings).with_context(|| format!("writing {}", path.display()))
}

fn print_timings(timings: &Timings) {
    for (stage, secs) in &timings.stages {
        eprintln!("{stage:>10}: {:.3} ms", secs * 1e3);
    }
}
