//! Parameter sweeps: mean and spread of scores and complexity over the
//! inner splits for each knob value, ready to plot as Pareto points.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::crossval::{fit, make_splits};
use super::{mean_std, run_jobs, RunConfig, SCHEMA};
use crate::data::{stratified_subsample, Dataset};
use crate::error::{Error, Result};
use crate::metrics::MetricKind;
use crate::rng::derive_seed;
use crate::timing::Stopwatch;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Knob {
    /// Complexity cap of annealed rules; literal cap of depth-one rules.
    MaxComplexity,
    /// Fraction of each inner training slice actually used for training.
    TrainFraction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub knob: Knob,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub classifier: String,
    pub value: f64,
    pub splits: usize,
    pub train_mean: f64,
    pub train_std: f64,
    pub test_mean: f64,
    pub test_std: f64,
    pub complexity_mean: f64,
    pub complexity_std: f64,
    /// Total training wall-clock time; kept out of the JSON so results are
    /// reproducible byte for byte.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema: u32,
    pub seed: u64,
    pub metric: MetricKind,
    pub knob: Knob,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "classifier",
            "value",
            "splits",
            "train_mean",
            "train_std",
            "test_mean",
            "test_std",
            "complexity_mean",
            "complexity_std",
            "seconds",
        ])?;
        for r in &self.rows {
            let f = |v: f64| format!("{v:.6}");
            out.write_record([
                r.classifier.clone(),
                r.value.to_string(),
                r.splits.to_string(),
                f(r.train_mean),
                f(r.train_std),
                f(r.test_mean),
                f(r.test_std),
                f(r.complexity_mean),
                f(r.complexity_std),
                format!("{:.3}", r.seconds),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn sweep(data: &Dataset, config: &RunConfig) -> Result<SweepReport> {
    config.validate()?;
    data.require_both_classes()?;
    let spec = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("no sweep section in the configuration"))?;
    if spec.values.is_empty() {
        return Err(Error::config("sweep has no knob values"));
    }
    for &v in &spec.values {
        let ok = match spec.knob {
            Knob::MaxComplexity => v >= 1.0 && v.fract() == 0.0,
            Knob::TrainFraction => v > 0.0 && v <= 1.0,
        };
        if !ok {
            return Err(Error::config(format!("invalid {:?} value {v}", spec.knob)));
        }
    }
    let splits = make_splits(&data.y, &config.protocol, config.seed)?;
    let n = splits.inner.len();
    let jobs: Vec<(usize, usize, usize)> = (0..config.classifiers.len())
        .flat_map(|c| (0..spec.values.len()).flat_map(move |v| (0..n).map(move |s| (c, v, s))))
        .collect();
    let results = run_jobs(config.workers(), &jobs, |&(c, v, s)| {
        let watch = Stopwatch::start();
        let value = spec.values[v];
        let (train, test) = &splits.inner[s];
        let seed = derive_seed(derive_seed(config.seed, v as u64 + 1), s as u64);
        let (classifier, train) = match spec.knob {
            Knob::MaxComplexity => (config.classifiers[c].with_max_complexity(value as usize), train.clone()),
            Knob::TrainFraction => {
                let keep = ((train.len() as f64 * value).round() as usize).max(2);
                (config.classifiers[c].clone(), stratified_subsample(&data.y, train, keep, seed))
            }
        };
        let (tr, te, cx, _) = fit(&classifier, data, &train, test, config.metric, seed)?;
        Ok((tr, te, cx as f64, watch.seconds()))
    });
    let results: Vec<(f64, f64, f64, f64)> = results.into_iter().collect::<Result<_>>()?;

    let rows = results
        .chunks(n)
        .zip(&jobs.iter().step_by(n).collect::<Vec<_>>())
        .map(|(chunk, &&(c, v, _))| {
            let col = |i: usize| mean_std(&chunk.iter().map(|r| [r.0, r.1, r.2][i]).collect::<Vec<_>>());
            let ((train_mean, train_std), (test_mean, test_std), (complexity_mean, complexity_std)) = (col(0), col(1), col(2));
            SweepRow {
                classifier: config.classifiers[c].name(),
                value: spec.values[v],
                splits: chunk.len(),
                train_mean,
                train_std,
                test_mean,
                test_std,
                complexity_mean,
                complexity_std,
                seconds: chunk.iter().map(|r| r.3).sum(),
            }
        })
        .collect();
    Ok(SweepReport {
        schema: SCHEMA,
        seed: config.seed,
        metric: config.metric,
        knob: spec.knob,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitMatrix;
    use crate::formula::{FeatureNames, Formula};
    use crate::harness::{to_result_json, Classifier, DataSource, SplitProtocol};
    use crate::local::SolverConfig;

    fn planted() -> Dataset {
        let x = BitMatrix::truth_table(6);
        let y = Formula::parse("AtLeast3(f0,f1,f2,f3,f4)", &FeatureNames::Default).unwrap().evaluate(&x).unwrap();
        Dataset::unnamed(x, y).unwrap()
    }

    fn config(knob: Knob, values: Vec<f64>) -> RunConfig {
        RunConfig {
            data: DataSource {
                path: "unused.xbf".into(),
                label: None,
                positive_label: None,
                num_bins: 10,
            },
            protocol: SplitProtocol {
                inner_splits: 3,
                ..Default::default()
            },
            classifiers: vec![
                Classifier::MostFrequent,
                Classifier::Local {
                    solver: SolverConfig {
                        num_starts: 4,
                        num_iterations: 400,
                        ..Default::default()
                    },
                },
            ],
            sweep: Some(SweepSpec { knob, values }),
            seed: 1,
            workers: Some(1),
            metric: MetricKind::BalancedAccuracy,
        }
    }

    #[test]
    fn one_row_per_classifier_and_value() {
        let values: Vec<f64> = (3..=8).map(f64::from).collect();
        let r = sweep(&planted(), &config(Knob::MaxComplexity, values)).unwrap();
        assert_eq!(r.rows.len(), 12);
        let local: Vec<&SweepRow> = r.rows.iter().filter(|r| r.classifier == "local").collect();
        assert_eq!(local.len(), 6);
        for w in local.windows(2) {
            assert!(w[1].train_mean >= w[0].train_mean - 0.02, "{w:?}");
        }
        assert!(local.iter().all(|r| r.complexity_mean <= r.value));
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 13);
        assert!(!to_result_json(&r).unwrap().contains("seconds"));
    }

    #[test]
    fn train_fraction_mode() {
        let r = sweep(&planted(), &config(Knob::TrainFraction, vec![0.25, 1.0])).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert!(r.rows.iter().all(|r| r.splits == 3));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(sweep(&planted(), &config(Knob::MaxComplexity, vec![])).is_err());
        assert!(sweep(&planted(), &config(Knob::TrainFraction, vec![1.5])).is_err());
        assert!(sweep(&planted(), &RunConfig { sweep: None, ..config(Knob::MaxComplexity, vec![3.0]) }).is_err());
    }
}
