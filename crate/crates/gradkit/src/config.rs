//! Experiment configuration, one JSON document per run. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use gradkit_core::linalg::{Matrix, Vector};
use gradkit_core::objective::{make_synthetic_dataset, MlpTask};
use gradkit_core::optim::OptimizerSpec;
use gradkit_core::schedule::ScheduleSpec;
use gradkit_core::QuadraticForm;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::formats::read_dataset_csv;
use crate::matrix_file::read_matrix;

fn default_hidden() -> usize {
    16
}

fn default_batch_size() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    /// `½xᵀAx − bᵀx + c`, with `A` given inline or as a matrix file; `b` defaults to zero.
    Quadratic {
        #[serde(default)]
        a: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        a_file: Option<PathBuf>,
        #[serde(default)]
        b: Option<Vec<f64>>,
        #[serde(default)]
        c: f64,
    },
    /// Gaussian class blobs fed to the one-hidden-layer network.
    Synthetic {
        num_classes: usize,
        per_class: usize,
        dim: usize,
        #[serde(default = "default_hidden")]
        hidden: usize,
        #[serde(default)]
        dropout: f64,
        /// Also write the generated samples to `dataset.csv`.
        #[serde(default)]
        export_dataset: bool,
    },
    /// The network on samples read from a CSV (features, then an integer label).
    Dataset {
        path: PathBuf,
        #[serde(default)]
        num_classes: Option<usize>,
        #[serde(default = "default_hidden")]
        hidden: usize,
        #[serde(default)]
        dropout: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub objective: ObjectiveConfig,
    #[serde(deserialize_with = "strict")]
    pub optimizer: OptimizerSpec,
    #[serde(deserialize_with = "strict")]
    pub schedule: ScheduleSpec,
    /// Starting point; required for quadratics, defaults to the initial weights for networks.
    #[serde(default)]
    pub x1: Option<Vec<f64>>,
    /// Iterations for quadratics.
    #[serde(default)]
    pub steps: Option<usize>,
    /// Passes over the data for networks.
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// A config resolved into something trainable. Relative file paths are
/// taken from the config's directory.
#[derive(Debug, Clone)]
pub enum Problem {
    Quadratic { q: QuadraticForm, x1: Vector, steps: usize },
    Network { task: MlpTask, x1: Vector, epochs: usize, batch_size: usize },
}

/// Tagged unit variants (`{"type": "sgd"}`) silently ignore extra keys, so
/// anything that does not survive a round trip is reported as unknown.
fn strict<'de, D, T>(de: D) -> Result<T, D::Error>
where
    D: serde::Deserializer<'de>,
    T: serde::de::DeserializeOwned + Serialize,
{
    use serde::de::Error;
    let raw = serde_json::Value::deserialize(de)?;
    let value: T = serde_json::from_value(raw.clone()).map_err(D::Error::custom)?;
    let echoed = serde_json::to_value(&value).map_err(D::Error::custom)?;
    if let (Some(given), Some(known)) = (raw.as_object(), echoed.as_object()) {
        if let Some(key) = given.keys().find(|k| !known.contains_key(*k)) {
            return Err(D::Error::custom(format!("unknown field `{key}`")));
        }
    }
    Ok(value)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let Some(dir) = path.parent() {
            cfg.rebase_paths(dir);
        }
        Ok(cfg)
    }

    fn rebase_paths(&mut self, dir: &Path) {
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        match &mut self.objective {
            ObjectiveConfig::Quadratic { a_file: Some(p), .. } | ObjectiveConfig::Dataset { path: p, .. } => rebase(p),
            _ => {}
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.optimizer.validate()?;
        self.schedule.validate()?;
        if self.batch_size == 0 {
            return Err(CliError::config("batch_size must be positive"));
        }
        Ok(())
    }

    pub fn problem(&self) -> CliResult<Problem> {
        self.validate()?;
        match &self.objective {
            ObjectiveConfig::Quadratic { a, a_file, b, c } => {
                let a = match (a, a_file) {
                    (Some(rows), None) => {
                        if rows.is_empty() {
                            return Err(CliError::config("objective.a is empty"));
                        }
                        Matrix::from_rows(rows)?
                    }
                    (None, Some(path)) => read_matrix(path)?,
                    _ => return Err(CliError::config("quadratic objective needs exactly one of `a` and `a_file`")),
                };
                let d = a.rows();
                let b = b.clone().map(Vector::new).unwrap_or_else(|| Vector::zeros(d));
                let q = QuadraticForm::new(a, b, *c)?;
                let x1 = self.x1.clone().ok_or_else(|| CliError::config("quadratic runs need `x1`"))?;
                let steps = self.steps.ok_or_else(|| CliError::config("quadratic runs need `steps`"))?;
                if self.epochs.is_some() {
                    return Err(CliError::config("`epochs` applies to network objectives; use `steps`"));
                }
                let x1 = Vector::new(x1);
                if x1.dim() != d {
                    return Err(CliError::config(format!("x1 has {} entries, objective has dimension {d}", x1.dim())));
                }
                Ok(Problem::Quadratic { q, x1, steps })
            }
            ObjectiveConfig::Synthetic { num_classes, per_class, dim, hidden, dropout, .. } => {
                if *num_classes == 0 || *per_class == 0 || *dim == 0 {
                    return Err(CliError::config("synthetic objective needs positive num_classes, per_class and dim"));
                }
                let data = make_synthetic_dataset(*num_classes, *per_class, *dim, self.seed);
                self.network(MlpTask::new(data, *num_classes, *hidden, *dropout, self.seed)?)
            }
            ObjectiveConfig::Dataset { path, num_classes, hidden, dropout } => {
                let data = read_dataset_csv(path)?;
                let k = num_classes.unwrap_or_else(|| data.iter().map(|(_, y)| y + 1).max().unwrap_or(0));
                self.network(MlpTask::new(data, k, *hidden, *dropout, self.seed)?)
            }
        }
    }

    fn network(&self, task: MlpTask) -> CliResult<Problem> {
        let epochs = self.epochs.ok_or_else(|| CliError::config("network runs need `epochs`"))?;
        if self.steps.is_some() {
            return Err(CliError::config("`steps` applies to quadratic objectives; use `epochs`"));
        }
        let x1 = match &self.x1 {
            Some(v) if v.len() != task.num_params() => {
                return Err(CliError::config(format!("x1 has {} entries, network has {} weights", v.len(), task.num_params())));
            }
            Some(v) => Vector::new(v.clone()),
            None => task.weights.clone(),
        };
        Ok(Problem::Network { task, x1, epochs, batch_size: self.batch_size })
    }
}
