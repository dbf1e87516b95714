use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use optabc_core::colony::{run_spec, ColonyConfig, Variant};
use optabc_core::objective::{external::encode_params, Benchmark, ObjectiveSpec};
use optabc_core::space::SearchSpace;
use optabc_harness::{parse_config, regenerate, run_experiment, summary_csv};

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(name = "optabc", version, about = "Bee colony hyperparameter optimisation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every cell and seed of an experiment config.
    Run { config: PathBuf },
    /// Parse and validate a config without running anything.
    Validate { config: PathBuf },
    /// Single run on a builtin benchmark; the trace goes to stdout.
    Bench(BenchArgs),
    /// Regenerate summary.csv of an experiment directory from its traces.
    Report { dir: PathBuf },
}

#[derive(Args)]
struct BenchArgs {
    /// sphere, rastrigin, rosenbrock or noisy-sphere
    function: Benchmark,
    #[arg(long)]
    variant: Variant,
    #[arg(long)]
    pn: usize,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = optabc_harness::config::DEFAULT_LIMIT)]
    limit: u32,
    #[arg(long)]
    budget: usize,
    #[arg(long)]
    seed: u64,
    /// Problem dimension.
    #[arg(long, default_value_t = 5)]
    dim: usize,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Disable the opposite-point scout candidate.
    #[arg(long)]
    no_opposition: bool,
    /// Omit the wall-clock column.
    #[arg(long)]
    no_wall_clock: bool,
}

fn bench(args: BenchArgs) -> ExitCode {
    let (lower, upper) = args.function.default_bounds();
    let space = match SearchSpace::uniform_box(args.dim, lower, upper) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let config = ColonyConfig {
        variant: args.variant,
        pn: args.pn,
        k_clusters: args.k,
        limit: args.limit,
        budget: Some(args.budget),
        max_iterations: args.max_iterations,
        target_objective: None,
        seed: args.seed,
        opposition: !args.no_opposition,
    };
    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    match run_spec(&config, &space, &ObjectiveSpec::builtin(args.function), 1) {
        Ok(outcome) => {
            print!("{}", outcome.trace.to_csv(!args.no_wall_clock));
            let params = encode_params(&space, &outcome.best.position);
            eprintln!(
                "best {:?} after {} evaluations at {}",
                outcome.best.objective().unwrap_or(f64::NAN),
                outcome.ledger.count(),
                serde_json::Value::Object(params)
            );
            ExitCode::SUCCESS
        }
        Err(failure) => {
            print!("{}", failure.trace.to_csv(!args.no_wall_clock));
            eprintln!("error: {failure}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match parse_config(&config) {
            Ok(c) => {
                let issues = c.cell_issues();
                for (i, e) in &issues {
                    let line = c.cells[*i].line.map(|l| format!("{l}: ")).unwrap_or_default();
                    eprintln!("{}:{line}cells[{i}]: {e}", config.display());
                }
                if issues.is_empty() {
                    println!(
                        "ok: {} cell(s) x {} seed(s), {} parameter(s), budget {}",
                        c.cells.len(),
                        c.seeds.len(),
                        c.space.dim(),
                        c.budget
                    );
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_VALIDATION)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_VALIDATION)
            }
        },
        Command::Run { config } => {
            let c = match parse_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_VALIDATION);
                }
            };
            match run_experiment(&c) {
                Ok(report) => {
                    print!("{}", summary_csv(&report.summary));
                    if report.failed_runs() > 0 {
                        ExitCode::from(EXIT_RUNTIME)
                    } else if report.invalid_cells() > 0 {
                        ExitCode::from(EXIT_VALIDATION)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
        Command::Bench(args) => bench(args),
        Command::Report { dir } => match regenerate(&dir) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_RUNTIME)
            }
        },
    }
}
