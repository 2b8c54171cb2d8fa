//! The four subcommands as library functions; `main` only parses flags and
//! maps errors to exit codes.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use gradkit_core::analysis::{momentum_rate, vanilla_gd_rate};
use gradkit_core::cg::{cg_with, pcg_untransformed_with, CgRun, Preconditioner, Recurrence};
use gradkit_core::linalg::{cholesky, spectral, Matrix, Vector};
use gradkit_core::optim::{train, train_stochastic, Batcher, OptimizerSpec, TrainTrajectory};
use gradkit_core::schedule::{schedule_table, ScheduleSpec};
use gradkit_core::second_order::newton_step;
use gradkit_core::QuadraticForm;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ObjectiveConfig, Problem};
use crate::error::{CliError, CliResult};
use crate::formats::{
    write_cg_csv, write_dataset_csv, write_json, write_trajectory_csv, RunSummary, SolveSummary, SCHEMA_VERSION,
};

/// Rates within this distance of 1 count as non-convergent.
const RATE_SLACK: f64 = 1e-12;

fn train_problem(problem: &Problem, spec: &OptimizerSpec, schedule: &ScheduleSpec, seed: u64) -> CliResult<TrainTrajectory> {
    Ok(match problem {
        Problem::Quadratic { q, x1, steps } => train(q, spec, schedule, x1, *steps)?,
        Problem::Network { task, x1, epochs, batch_size } => {
            let mut dropout = task.dropout_rng();
            let batcher = Batcher { batch_size: *batch_size, seed };
            train_stochastic(task, spec, schedule, x1, *epochs, batcher, &mut dropout)?
        }
    })
}

/// Spectral radius of plain or heavy-ball gradient descent at a constant rate.
fn predicted_rate(q: &QuadraticForm, spec: &OptimizerSpec, schedule: &ScheduleSpec) -> CliResult<Option<f64>> {
    let ScheduleSpec::Constant { eta } = schedule else {
        return Ok(None);
    };
    let lambdas = match spec {
        OptimizerSpec::Sgd | OptimizerSpec::Momentum { .. } => spectral(q.hessian_matrix())?.lambda,
        _ => return Ok(None),
    };
    Ok(match spec {
        OptimizerSpec::Momentum { rho } => Some(momentum_rate(*eta, *rho, &lambdas).overall_rate),
        _ => Some(vanilla_gd_rate(&lambdas, *eta).overall_rate),
    })
}

pub struct RunOutcome {
    pub summary: RunSummary,
    pub trajectory: TrainTrajectory,
}

/// Trains one configuration without touching the filesystem.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<RunOutcome> {
    let problem = cfg.problem()?;
    let trajectory = train_problem(&problem, &cfg.optimizer, &cfg.schedule, cfg.seed)?;
    let (objective, predicted) = match &problem {
        Problem::Quadratic { q, .. } => ("quadratic", predicted_rate(q, &cfg.optimizer, &cfg.schedule)?),
        Problem::Network { .. } => ("network", None),
    };
    let blew_up = trajectory.diverged || !trajectory.final_loss.is_finite();
    let summary = RunSummary {
        schema: SCHEMA_VERSION,
        objective: objective.into(),
        optimizer: cfg.optimizer.name().into(),
        iterations: trajectory.iterations(),
        initial_loss: trajectory.initial_loss(),
        final_loss: trajectory.final_loss,
        diverged: blew_up || predicted.is_some_and(|r| r >= 1.0 - RATE_SLACK),
        blew_up,
        predicted_rate: predicted,
        seed: cfg.seed,
        final_x: trajectory.final_x.as_slice().to_vec(),
    };
    Ok(RunOutcome { summary, trajectory })
}

/// Runs one configuration and writes `trajectory.csv`, `summary.json` and,
/// when asked for, `dataset.csv` into `out_dir`.
pub fn cmd_run(cfg: &ExperimentConfig, out_dir: &Path, with_x: bool) -> CliResult<RunSummary> {
    let outcome = run_experiment(cfg)?;
    fs::create_dir_all(out_dir)?;
    write_trajectory_csv(BufWriter::new(File::create(out_dir.join("trajectory.csv"))?), &outcome.trajectory, with_x)?;
    write_json(BufWriter::new(File::create(out_dir.join("summary.json"))?), &outcome.summary)?;
    if let ObjectiveConfig::Synthetic { export_dataset: true, .. } = &cfg.objective {
        if let Problem::Network { task, .. } = cfg.problem()? {
            write_dataset_csv(BufWriter::new(File::create(out_dir.join("dataset.csv"))?), &task.dataset)?;
        }
    }
    Ok(outcome.summary)
}

pub fn cmd_schedule(spec: &ScheduleSpec, t_max: u64) -> CliResult<Vec<(u64, f64)>> {
    spec.validate()?;
    Ok(schedule_table(spec, t_max))
}

/// `n` rates spaced evenly in log scale from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> CliResult<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && n > 0) {
        return Err(CliError::config("rate grid needs 0 < min <= max and at least one point"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
    grid[0] = lo;
    grid[n - 1] = hi;
    Ok(grid)
}

/// Final loss for each constant rate in `rates`, `None` where the run diverged.
pub fn cmd_range_test(cfg: &ExperimentConfig, rates: &[f64]) -> CliResult<Vec<(f64, Option<f64>)>> {
    if rates.is_empty() {
        return Err(CliError::config("rate grid is empty"));
    }
    if let Some(r) = rates.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(CliError::config(format!("rate {r} is not a nonnegative number")));
    }
    cfg.optimizer.validate()?;
    let problem = cfg.problem()?;
    rates
        .par_iter()
        .map(|&eta| {
            let traj = train_problem(&problem, &cfg.optimizer, &ScheduleSpec::Constant { eta }, cfg.seed)?;
            let ok = !traj.diverged && traj.final_loss.is_finite();
            Ok((eta, ok.then_some(traj.final_loss)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[derive(clap::ValueEnum)]
pub enum SolveMethod {
    Newton,
    Cg,
    PcgDiag,
    PcgPerfect,
}

impl SolveMethod {
    pub fn name(self) -> &'static str {
        match self {
            SolveMethod::Newton => "newton",
            SolveMethod::Cg => "cg",
            SolveMethod::PcgDiag => "pcg-diag",
            SolveMethod::PcgPerfect => "pcg-perfect",
        }
    }
}

pub struct SolveOutcome {
    pub summary: SolveSummary,
    pub run: Option<CgRun>,
    pub q: QuadraticForm,
}

/// Solves `Ax = b` from `x₁ = 0`; `b` defaults to all ones.
pub fn cmd_solve(
    a: Matrix,
    b: Option<Vector>,
    method: SolveMethod,
    tol: f64,
    recurrence: Recurrence,
) -> CliResult<SolveOutcome> {
    if !(tol > 0.0) {
        return Err(CliError::config("tolerance must be positive"));
    }
    let d = a.rows();
    if !a.is_square() {
        return Err(CliError::config(format!("matrix is {}x{}, expected square", a.rows(), a.cols())));
    }
    cholesky(&a).map_err(|e| match e {
        gradkit_core::Error::NotPositiveDefinite | gradkit_core::Error::NonSymmetric => {
            CliError::Numerical(gradkit_core::Error::NotSpd)
        }
        other => other.into(),
    })?;
    let b = b.unwrap_or_else(|| Vector::filled(d, 1.0));
    if b.dim() != d {
        return Err(CliError::config(format!("right-hand side has {} entries, matrix has dimension {d}", b.dim())));
    }
    let q = QuadraticForm::new(a, b, 0.0)?;
    let x1 = Vector::zeros(d);
    let g1 = q.gradient(&x1)?.norm();
    let (x, iterations, run) = match method {
        SolveMethod::Newton => {
            let iterations = usize::from(g1 > 0.0);
            (x1.add(&newton_step(&q, &x1)?), iterations, None)
        }
        SolveMethod::Cg => {
            let run = cg_with(&q, &x1, tol, recurrence)?;
            (run.final_x().clone(), run.terminated_at, Some(run))
        }
        SolveMethod::PcgDiag | SolveMethod::PcgPerfect => {
            let m = if method == SolveMethod::PcgDiag {
                Preconditioner::diagonal(q.a())?
            } else {
                Preconditioner::perfect(q.a())?
            };
            let run = pcg_untransformed_with(&q, &x1, &m, tol, recurrence)?;
            (run.final_x().clone(), run.terminated_at, Some(run))
        }
    };
    let residual_norm = q.residual(&x)?.norm();
    let summary = SolveSummary {
        schema: SCHEMA_VERSION,
        method: method.name().into(),
        dim: d,
        iterations,
        residual_norm,
        converged: residual_norm <= tol * g1.max(1.0),
        x: x.as_slice().to_vec(),
    };
    Ok(SolveOutcome { summary, run, q })
}

pub fn write_solve_outputs(outcome: &SolveOutcome, out_dir: &Path) -> CliResult<()> {
    fs::create_dir_all(out_dir)?;
    write_json(BufWriter::new(File::create(out_dir.join("solve.json"))?), &outcome.summary)?;
    if let Some(run) = &outcome.run {
        write_cg_csv(BufWriter::new(File::create(out_dir.join("cg_run.csv"))?), run, &outcome.q)?;
    }
    Ok(())
}
