//! On-disk artifacts: trajectory, schedule, CG and range-test tables as CSV,
//! datasets as CSV, and versioned JSON summaries.
//!
//! Floats are written in Rust's shortest round-trip form, so identical runs
//! give byte-identical files.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use gradkit_core::cg::CgRun;
use gradkit_core::linalg::Vector;
use gradkit_core::optim::TrainTrajectory;
use gradkit_core::QuadraticForm;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

fn num(v: f64) -> String {
    v.to_string()
}

pub fn write_trajectory_csv<W: Write>(out: W, traj: &TrainTrajectory, with_x: bool) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = traj.final_x.dim();
    let mut header: Vec<String> = ["t", "loss", "grad_norm", "eta"].iter().map(|s| s.to_string()).collect();
    if with_x {
        header.extend((0..dim).map(|i| format!("x{i}")));
    }
    w.write_record(&header)?;
    for r in &traj.records {
        let mut row = vec![r.t.to_string(), num(r.loss), num(r.grad_norm), num(r.eta)];
        if with_x {
            row.extend(r.x.iter().map(|v| num(*v)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_schedule_csv<W: Write>(out: W, table: &[(u64, f64)]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "eta"])?;
    for (t, eta) in table {
        w.write_record([t.to_string(), num(*eta)])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per iterate `x_t`; `beta` and `eta` are those of the iteration
/// leaving `x_t` and are blank on the last row.
pub fn write_cg_csv<W: Write>(out: W, run: &CgRun, q: &QuadraticForm) -> CliResult<()> {
    let energy = run.energy_errors(q)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "grad_norm", "beta", "eta", "energy_norm"])?;
    for (i, g) in run.gradients.iter().enumerate() {
        let beta = run.betas.get(i).map(|v| num(*v)).unwrap_or_default();
        let eta = run.etas.get(i).map(|v| num(*v)).unwrap_or_default();
        w.write_record([(i + 1).to_string(), num(g.norm()), beta, eta, num(energy[i])])?;
    }
    w.flush()?;
    Ok(())
}

/// A range-test outcome; `None` marks a diverged or non-finite run.
pub fn write_range_csv<W: Write>(out: W, rows: &[(f64, Option<f64>)]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rate", "final_loss"])?;
    for (rate, loss) in rows {
        let loss = loss.map(num).unwrap_or_else(|| "diverged".to_string());
        w.write_record([num(*rate), loss])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset_csv<W: Write>(out: W, data: &[(Vector, usize)]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = data.first().map_or(0, |(x, _)| x.dim());
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (x, y) in data {
        let mut row: Vec<String> = x.iter().map(|v| num(*v)).collect();
        row.push(y.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads feature columns followed by an integer label column. The first row is a header.
pub fn read_dataset_csv(path: &Path) -> CliResult<Vec<(Vector, usize)>> {
    let file = File::open(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut r = csv::Reader::from_reader(file);
    let mut data = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        if rec.len() < 2 {
            return Err(CliError::config(format!("{} line {line}: need features and a label", path.display())));
        }
        let bad = |field: &str| CliError::config(format!("{} line {line}: cannot parse {field:?}", path.display()));
        let features = rec
            .iter()
            .take(rec.len() - 1)
            .map(|f| f.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad(f)))
            .collect::<CliResult<Vec<f64>>>()?;
        let label_field = &rec[rec.len() - 1];
        let label = label_field.trim().parse::<usize>().map_err(|_| bad(label_field))?;
        data.push((Vector::new(features), label));
    }
    if data.is_empty() {
        return Err(CliError::config(format!("{}: no samples", path.display())));
    }
    Ok(data)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub schema: u32,
    pub objective: String,
    pub optimizer: String,
    pub iterations: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// The loss blew up, or the spectral-radius oracle predicts no convergence.
    pub diverged: bool,
    /// The loss itself crossed the divergence threshold or became non-finite.
    pub blew_up: bool,
    /// Spectral radius of the iteration, when it has a closed form.
    pub predicted_rate: Option<f64>,
    pub seed: u64,
    pub final_x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub schema: u32,
    pub method: String,
    pub dim: usize,
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
    pub x: Vec<f64>,
}

pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Io(e.into()))?;
    out.write_all(b"\n")?;
    Ok(())
}
