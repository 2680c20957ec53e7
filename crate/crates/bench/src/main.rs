use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mogd_core::{ProblemRegistry, SolverConfig};
use mopbench::csv_io::{export_records, export_summaries};
use mopbench::{expand_names, parse_methods, run_benchmark, summarize, write_fronts, BenchError, Plan, Result};

/// Seeded benchmarks for multiobjective gradient descent methods.
#[derive(Parser)]
#[command(name = "mopbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run methods on problems and write records, summaries and fronts.
    Run(RunArgs),
    /// Print the problem registry.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Comma-separated problem names; `QPa..QPd` expands to a range.
    #[arg(long, default_value = "BK1,JOS1a..JOS1d,QPa..QPd")]
    problems: String,
    #[arg(long, default_value = "sdmo,vmmo,bbdmo,qnmo,bbdmo_vm")]
    methods: String,
    #[arg(long, default_value_t = 200)]
    runs: usize,
    /// Master seed; the MOPBENCH_SEED environment variable takes precedence.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-3)]
    alpha_min: f64,
    #[arg(long, default_value_t = 1e3)]
    alpha_max: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Per-run records CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per (problem, method) summary CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Directory for nondominated terminal points, one file per (problem, method).
    #[arg(long)]
    fronts: Option<PathBuf>,
    /// Generate a new random instance for every run.
    #[arg(long)]
    fresh_instance_per_run: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn master_seed(flag: u64) -> Result<u64> {
    match std::env::var("MOPBENCH_SEED") {
        Ok(raw) => raw
            .trim()
            .parse()
            .map_err(|_| BenchError::Config(format!("MOPBENCH_SEED must be an unsigned integer, got `{raw}`"))),
        Err(std::env::VarError::NotPresent) => Ok(flag),
        Err(e) => Err(BenchError::Config(format!("MOPBENCH_SEED: {e}"))),
    }
}

fn run_command(args: RunArgs) -> Result<()> {
    let registry = ProblemRegistry::with_builtins();
    let mut plan = Plan::new(expand_names(&args.problems)?, parse_methods(&args.methods)?, args.runs, master_seed(args.seed)?);
    plan.config = SolverConfig {
        sigma: args.sigma,
        gamma: args.gamma,
        alpha_min: args.alpha_min,
        alpha_max: args.alpha_max,
        tol: args.tol,
        max_iter: args.max_iter,
        ..SolverConfig::default()
    };
    plan.fresh_instance_per_run = args.fresh_instance_per_run;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(BenchError::Config("--jobs must be positive".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    let records = pool.install(|| run_benchmark(&registry, &plan))?;
    let summaries = summarize(&records)?;

    println!(
        "{:<8} {:<9} {:>10} {:>10} {:>12} {:>10}",
        "problem", "method", "mean_iter", "mean_feval", "mean_time_ms", "converged"
    );
    for s in &summaries {
        println!(
            "{:<8} {:<9} {:>10.2} {:>10.2} {:>12.3} {:>10.3}",
            s.problem, s.method, s.mean_iter, s.mean_feval, s.mean_time_ms, s.converged_fraction
        );
    }

    if let Some(path) = &args.out {
        export_records(&records, path)?;
    }
    if let Some(path) = &args.summary {
        export_summaries(&summaries, path)?;
    }
    if let Some(dir) = &args.fronts {
        write_fronts(&records, dir)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run_command(args),
        Command::List => {
            for line in ProblemRegistry::with_builtins().listing() {
                println!("{line}");
            }
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mopbench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
