//! Benchmarking harness: classifiers behind one interface, seeded split
//! protocols, cross-validation and parameter sweeps with plot-ready output.

mod crossval;
mod sweep;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bits::{BitMatrix, BitVector};
use crate::data::{self, Dataset, DatasetDescriptor};
use crate::depth_one::{subsample_rows, DepthOneBackend, DepthOneProblem, MAX_MODEL_ROWS};
use crate::error::{Error, Result};
use crate::formula::{Formula, OperatorKind};
use crate::local::{self, SolverConfig};
use crate::metrics::{score, ClassWeights, MetricKind};
use crate::nonlocal::{self, NonLocalConfig};

pub use crossval::{crossval, make_splits, CrossvalRecord, CrossvalReport, Evaluation, Splits};
pub use sweep::{sweep, Knob, SweepReport, SweepRow, SweepSpec};

/// Version of the JSON result files.
pub const SCHEMA: u32 = 1;

/// A way of training a rule on a data slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Classifier {
    /// Constant rule predicting the majority class.
    MostFrequent,
    /// Best rule made of one literal, found exhaustively.
    SingleFeature,
    /// Best depth-one rule with the given operator.
    DepthOne {
        operator: OperatorKind,
        max_literals: usize,
        #[serde(default)]
        lambda: f64,
        #[serde(default)]
        backend: DepthOneBackend,
    },
    /// Simulated annealing with local moves.
    Local {
        #[serde(default)]
        solver: SolverConfig,
    },
    /// Simulated annealing with local and non-local moves.
    NonLocal {
        #[serde(default)]
        solver: SolverConfig,
        #[serde(default)]
        nonlocal: NonLocalConfig,
    },
}

impl Classifier {
    pub fn name(&self) -> String {
        match self {
            Classifier::MostFrequent => "most-frequent".into(),
            Classifier::SingleFeature => "single-feature".into(),
            Classifier::DepthOne { operator, .. } => format!("depth-one-{}", operator.name().to_lowercase()),
            Classifier::Local { .. } => "local".into(),
            Classifier::NonLocal { .. } => "nonlocal".into(),
        }
    }

    /// Trains on `(x, y)`; `seed` overrides any seed in the configuration.
    pub fn train(&self, x: &BitMatrix, y: &BitVector, metric: MetricKind, seed: u64) -> Result<Formula> {
        match self {
            Classifier::MostFrequent => Ok(Formula::constant(y.count_ones() * 2 >= y.len())),
            Classifier::SingleFeature => {
                let problem = DepthOneProblem {
                    x,
                    y,
                    operator: OperatorKind::Or,
                    max_literals: 1,
                    min_literals: 1,
                    lambda: 0.0,
                    weights: error_weights(y, metric),
                };
                Ok(problem.brute_force(u128::MAX)?.to_formula())
            }
            Classifier::DepthOne {
                operator,
                max_literals,
                lambda,
                backend,
            } => {
                let (xs, ys);
                let (x, y, backend) = match backend {
                    DepthOneBackend::Qubo { mode, penalties, anneal } => {
                        (xs, ys) = subsample_rows(x, y, MAX_MODEL_ROWS, seed);
                        let anneal = crate::depth_one::AnnealConfig { seed, ..anneal.clone() };
                        (&xs, &ys, DepthOneBackend::Qubo { mode: *mode, penalties: penalties.clone(), anneal })
                    }
                    oracle => (x, y, oracle.clone()),
                };
                let problem = DepthOneProblem {
                    x,
                    y,
                    operator: *operator,
                    max_literals: *max_literals,
                    min_literals: 0,
                    lambda: lambda * y.len() as f64,
                    weights: error_weights(y, metric),
                };
                Ok(problem.solve(&backend)?.to_formula())
            }
            Classifier::Local { solver } => {
                let config = SolverConfig { seed, metric, ..solver.clone() };
                Ok(local::solve(x, y, &config)?.formula)
            }
            Classifier::NonLocal { solver, nonlocal } => {
                let config = SolverConfig { seed, metric, ..solver.clone() };
                Ok(nonlocal::solve_with_nonlocal(x, y, &config, nonlocal)?.formula)
            }
        }
    }

    /// Applies a sweep knob value: the complexity cap of annealed rules or
    /// the literal cap of depth-one rules. Baselines have no knob.
    pub fn with_max_complexity(&self, c: usize) -> Classifier {
        let mut out = self.clone();
        match &mut out {
            Classifier::DepthOne { max_literals, .. } => *max_literals = c,
            Classifier::Local { solver } | Classifier::NonLocal { solver, .. } => solver.max_complexity = Some(c),
            Classifier::MostFrequent | Classifier::SingleFeature => {}
        }
        out
    }
}

/// Per-class error weights whose weighted error count orders rules the same
/// way as `metric`.
pub fn error_weights(y: &BitVector, metric: MetricKind) -> ClassWeights {
    match metric {
        MetricKind::BalancedAccuracy => ClassWeights::balanced(y).unwrap_or(ClassWeights::UNIT),
        MetricKind::Accuracy => ClassWeights::UNIT,
    }
}

/// Score of a trained rule on a slice, and its complexity.
pub fn evaluate(rule: &Formula, x: &BitMatrix, y: &BitVector, metric: MetricKind) -> Result<(f64, usize)> {
    Ok((score(rule, x, y, metric)?, rule.complexity()))
}

/// Where a run's data comes from: a binarized matrix (with its sidecar) or
/// a CSV file binarized on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub path: PathBuf,
    /// Label column and positive label; required for CSV input.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub positive_label: Option<String>,
    #[serde(default = "default_bins")]
    pub num_bins: usize,
}

fn default_bins() -> usize {
    10
}

impl DataSource {
    pub fn is_csv(&self) -> bool {
        self.path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    }

    pub fn load(&self) -> Result<Dataset> {
        if !self.is_csv() {
            return Ok(data::load_dataset(&self.path)?.0);
        }
        let (Some(label), Some(positive)) = (&self.label, &self.positive_label) else {
            return Err(Error::config("CSV input needs a label column and a positive label"));
        };
        Ok(binarize_csv(&self.path, label, positive, self.num_bins)?.0)
    }
}

/// Loads and binarizes a CSV file; returns the dataset and its descriptor.
pub fn binarize_csv(path: &Path, label: &str, positive: &str, num_bins: usize) -> Result<(Dataset, DatasetDescriptor)> {
    let table = data::load_csv(path, label, positive)?;
    let bin = data::binarize(&table, num_bins)?;
    let dataset = Dataset::new(bin.bits, table.labels.clone(), bin.descriptors)?;
    let descriptor = DatasetDescriptor {
        label_column: table.label_column.clone(),
        positive_label: table.positive_label.clone(),
        dropped_rows: table.dropped_rows,
        warnings: bin.warnings,
        ..DatasetDescriptor::for_dataset(&dataset)
    };
    Ok((dataset, descriptor))
}

/// Train/test protocol: a stratified holdout, then repeated stratified
/// splits of the remaining rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitProtocol {
    pub holdout_fraction: f64,
    pub inner_splits: usize,
    pub inner_test_fraction: f64,
}

impl Default for SplitProtocol {
    fn default() -> Self {
        SplitProtocol {
            holdout_fraction: 0.2,
            inner_splits: 32,
            inner_test_fraction: 0.3,
        }
    }
}

/// Everything that determines a cross-validation or sweep run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataSource,
    #[serde(default)]
    pub protocol: SplitProtocol,
    pub classifiers: Vec<Classifier>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub seed: u64,
    /// Parallel jobs; defaults to one per inner split.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub metric: MetricKind,
}

impl RunConfig {
    /// Reads a TOML or (by `.json` extension) JSON file. A relative data
    /// path is taken relative to the file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str::<RunConfig>(&text).map_err(|e| Error::config(e.to_string()))?
        } else {
            RunConfig::from_toml(&text)?
        };
        if config.data.path.is_relative() {
            if let Some(dir) = path.parent() {
                config.data.path = dir.join(&config.data.path);
            }
        }
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.classifiers.is_empty() {
            return Err(Error::config("no classifiers configured"));
        }
        let p = &self.protocol;
        if p.inner_splits == 0 {
            return Err(Error::config("inner_splits must be at least 1"));
        }
        for (name, f) in [("holdout_fraction", p.holdout_fraction), ("inner_test_fraction", p.inner_test_fraction)] {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::config(format!("{name} {f} is not in [0, 1)")));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers must be at least 1"));
        }
        Ok(())
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(self.protocol.inner_splits).max(1)
    }
}

/// Runs `f` over `items` on up to `workers` threads, keeping input order.
pub(crate) fn run_jobs<T: Sync, R: Send>(workers: usize, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    if workers > 1 {
        use rayon::prelude::*;
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            return pool.install(|| items.par_iter().map(&f).collect());
        }
    }
    let _ = workers;
    items.iter().map(f).collect()
}

/// Rounds every float in `value` to six decimals.
pub fn round_floats(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) if n.is_f64() => {
            let v = n.as_f64().unwrap_or_default();
            let r = (v * 1e6).round() / 1e6;
            if let Some(num) = serde_json::Number::from_f64(if r == 0.0 { 0.0 } else { r }) {
                *n = num;
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_floats),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Pretty JSON of `value` with floats rounded to six decimals.
pub fn to_result_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_floats(&mut v);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
