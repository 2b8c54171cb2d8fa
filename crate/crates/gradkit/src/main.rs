use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gradkit::commands::{
    cmd_range_test, cmd_run, cmd_schedule, cmd_solve, log_grid, write_solve_outputs, SolveMethod,
};
use gradkit::config::ExperimentConfig;
use gradkit::formats::{write_json, write_range_csv, write_schedule_csv};
use gradkit::matrix_file::read_matrix;
use gradkit::{CliError, CliResult};
use gradkit_core::cg::Recurrence;
use gradkit_core::schedule::ScheduleSpec;
use gradkit_core::Vector;

#[derive(Parser)]
#[command(name = "gradkit", version, about = "Gradient-method experiments on quadratics and small networks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment config (JSON). `run` accepts several.
    #[arg(long, global = true)]
    config: Vec<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed in the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel runs (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the configured optimizer and write the trajectory
    Run {
        /// Add the iterate coordinates to trajectory.csv
        #[arg(long)]
        with_x: bool,
    },
    /// Tabulate a learning-rate schedule
    Schedule {
        /// Schedule as inline JSON; otherwise read from the `schedule` key of --config
        #[arg(long)]
        spec: Option<String>,
        #[arg(long)]
        t_max: u64,
    },
    /// Final loss across a grid of constant learning rates
    RangeTest {
        /// Explicit comma-separated rates
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["min", "max", "points"])]
        rates: Option<Vec<f64>>,
        #[arg(long, requires_all = ["max", "points"])]
        min: Option<f64>,
        #[arg(long)]
        max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Overrides the step count of a quadratic config
        #[arg(long)]
        steps: Option<usize>,
        /// Overrides the epoch count of a network config
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Solve Ax = b for a symmetric positive definite A
    Solve {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_enum, default_value = "cg")]
        method: SolveMethod,
        /// Comma-separated right-hand side (default: all ones)
        #[arg(long, value_delimiter = ',')]
        rhs: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Keep CG vectors orthogonal against all earlier ones
        #[arg(long)]
        reorthogonalize: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("gradkit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn single_config(g: &Global) -> CliResult<ExperimentConfig> {
    match g.config.as_slice() {
        [path] => load_config(path, g.seed),
        [] => Err(CliError::config("--config is required")),
        _ => Err(CliError::config("this command takes exactly one --config")),
    }
}

fn thread_pool(jobs: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::config(e.to_string()))
}

fn output_file(out: &Option<PathBuf>, name: &str) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Box::new(io::BufWriter::new(fs::File::create(dir.join(name))?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn dispatch(cli: Cli) -> CliResult<ExitCode> {
    let g = cli.global;
    match cli.command {
        Command::Run { with_x } => {
            if g.config.is_empty() {
                return Err(CliError::config("--config is required"));
            }
            let configs = g
                .config
                .iter()
                .map(|p| load_config(p, g.seed).map(|c| (p, c)))
                .collect::<CliResult<Vec<_>>>()?;
            let many = configs.len() > 1;
            let pool = thread_pool(g.jobs)?;
            let summaries = pool.install(|| {
                use rayon::prelude::*;
                configs
                    .par_iter()
                    .map(|(path, cfg)| {
                        let base = g.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
                        let dir = if many {
                            base.join(path.file_stem().unwrap_or_default())
                        } else {
                            base
                        };
                        cmd_run(cfg, &dir, with_x)
                    })
                    .collect::<Vec<_>>()
            });
            let mut diverged = Vec::new();
            for ((path, _), summary) in configs.iter().zip(summaries) {
                let summary = summary?;
                write_json(io::stdout().lock(), &summary)?;
                if summary.diverged {
                    diverged.push(path.display().to_string());
                }
            }
            if diverged.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                let e = CliError::Diverged(diverged.join(", "));
                eprintln!("gradkit: {e}");
                Ok(ExitCode::from(e.exit_code()))
            }
        }
        Command::Schedule { spec, t_max } => {
            let spec: ScheduleSpec = match (spec, g.config.as_slice()) {
                (Some(text), []) => serde_json::from_str(&text).map_err(|e| CliError::config(format!("--spec: {e}")))?,
                (None, [_]) => single_config(&g)?.schedule,
                (Some(_), _) => return Err(CliError::config("give either --spec or --config, not both")),
                (None, _) => return Err(CliError::config("schedule needs --spec or a single --config")),
            };
            let table = cmd_schedule(&spec, t_max)?;
            write_schedule_csv(output_file(&g.out, "schedule.csv")?, &table)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::RangeTest { rates, min, max, points, steps, epochs } => {
            let mut cfg = single_config(&g)?;
            if steps.is_some() {
                cfg.steps = steps;
            }
            if epochs.is_some() {
                cfg.epochs = epochs;
            }
            let rates = match (rates, min, max, points) {
                (Some(r), ..) => r,
                (None, Some(lo), Some(hi), Some(n)) => log_grid(lo, hi, n)?,
                _ => return Err(CliError::config("range-test needs --rates or --min/--max/--points")),
            };
            let rows = thread_pool(g.jobs)?.install(|| cmd_range_test(&cfg, &rates))?;
            write_range_csv(output_file(&g.out, "range_test.csv")?, &rows)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve { matrix, method, rhs, tol, reorthogonalize } => {
            let a = read_matrix(&matrix)?;
            let recurrence = if reorthogonalize { Recurrence::Reorthogonalized } else { Recurrence::Short };
            let outcome = cmd_solve(a, rhs.map(Vector::new), method, tol, recurrence)?;
            write_json(io::stdout().lock(), &outcome.summary)?;
            if let Some(dir) = &g.out {
                write_solve_outputs(&outcome, dir)?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
