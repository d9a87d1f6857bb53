//! Cross-validation: a stratified holdout plus repeated stratified
//! train/validation splits of the remaining rows.

use serde::{Deserialize, Serialize};

use super::{evaluate, mean_std, run_jobs, Classifier, RunConfig, SplitProtocol, SCHEMA};
use crate::bits::BitVector;
use crate::data::{stratified_split, Dataset};
use crate::error::Result;
use crate::metrics::MetricKind;
use crate::rng::derive_seed;

/// Row indices of every slice used by a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Splits {
    pub holdout: Vec<usize>,
    pub in_sample: Vec<usize>,
    /// `(train, validation)` pairs, both subsets of `in_sample`.
    pub inner: Vec<(Vec<usize>, Vec<usize>)>,
}

/// Seed stream of the holdout split; inner split `s` uses stream `s + 1`.
const HOLDOUT_STREAM: u64 = 0;

/// Seed of the classifier trained on inner split `s` (or the holdout fit
/// when `s` is `None`).
fn train_seed(seed: u64, split: Option<usize>) -> u64 {
    derive_seed(derive_seed(seed, u64::MAX), split.map_or(0, |s| s as u64 + 1))
}

pub fn make_splits(y: &BitVector, protocol: &SplitProtocol, seed: u64) -> Result<Splits> {
    let (in_sample, holdout) = stratified_split(y, protocol.holdout_fraction, derive_seed(seed, HOLDOUT_STREAM))?;
    let y_in = y.select(&in_sample);
    let inner = (0..protocol.inner_splits)
        .map(|s| {
            let (tr, va) = stratified_split(&y_in, protocol.inner_test_fraction, derive_seed(seed, s as u64 + 1))?;
            Ok((tr.iter().map(|&i| in_sample[i]).collect(), va.iter().map(|&i| in_sample[i]).collect()))
        })
        .collect::<Result<_>>()?;
    Ok(Splits {
        holdout,
        in_sample,
        inner,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluation {
    /// Trained on an inner train slice, tested on its validation slice.
    Inner,
    /// Trained on all in-sample rows, tested on the holdout.
    Holdout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossvalRecord {
    pub classifier: String,
    pub evaluation: Evaluation,
    /// Inner split index; absent for the holdout fit.
    pub split: Option<usize>,
    pub train_rows: usize,
    pub test_rows: usize,
    pub train_score: f64,
    pub test_score: f64,
    pub complexity: usize,
    pub rule: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossvalSummary {
    pub classifier: String,
    pub splits: usize,
    pub train_mean: f64,
    pub train_std: f64,
    pub test_mean: f64,
    pub test_std: f64,
    pub complexity_mean: f64,
    pub complexity_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossvalReport {
    pub schema: u32,
    pub seed: u64,
    pub metric: MetricKind,
    pub rows: usize,
    pub features: usize,
    pub holdout_rows: usize,
    pub in_sample_rows: usize,
    pub inner_splits: usize,
    pub records: Vec<CrossvalRecord>,
    pub summary: Vec<CrossvalSummary>,
}

/// Trains `classifier` on `train` and scores it on `train` and `test`.
pub(crate) fn fit(
    classifier: &Classifier,
    data: &Dataset,
    train: &[usize],
    test: &[usize],
    metric: MetricKind,
    seed: u64,
) -> Result<(f64, f64, usize, String)> {
    let tr = data.subset(train);
    let te = data.subset(test);
    let rule = classifier.train(&tr.x, &tr.y, metric, seed)?;
    let (train_score, complexity) = evaluate(&rule, &tr.x, &tr.y, metric)?;
    let (test_score, _) = evaluate(&rule, &te.x, &te.y, metric)?;
    Ok((train_score, test_score, complexity, rule.to_text(&data.names())))
}

pub fn crossval(data: &Dataset, config: &RunConfig) -> Result<CrossvalReport> {
    config.validate()?;
    data.require_both_classes()?;
    let splits = make_splits(&data.y, &config.protocol, config.seed)?;
    let jobs: Vec<(usize, Option<usize>)> = (0..config.classifiers.len())
        .flat_map(|c| (0..splits.inner.len()).map(Some).chain([None]).map(move |s| (c, s)))
        .collect();
    let results = run_jobs(config.workers(), &jobs, |&(c, s)| {
        let (train, test) = match s {
            Some(s) => (&splits.inner[s].0, &splits.inner[s].1),
            None => (&splits.in_sample, &splits.holdout),
        };
        let classifier = &config.classifiers[c];
        let (train_score, test_score, complexity, rule) =
            fit(classifier, data, train, test, config.metric, train_seed(config.seed, s))?;
        Ok(CrossvalRecord {
            classifier: classifier.name(),
            evaluation: if s.is_some() { Evaluation::Inner } else { Evaluation::Holdout },
            split: s,
            train_rows: train.len(),
            test_rows: test.len(),
            train_score,
            test_score,
            complexity,
            rule,
        })
    });
    let records: Vec<CrossvalRecord> = results.into_iter().collect::<Result<_>>()?;

    let summary = config
        .classifiers
        .iter()
        .map(|c| {
            let name = c.name();
            let inner: Vec<&CrossvalRecord> =
                records.iter().filter(|r| r.classifier == name && r.evaluation == Evaluation::Inner).collect();
            let col = |f: fn(&CrossvalRecord) -> f64| mean_std(&inner.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (train_mean, train_std) = col(|r| r.train_score);
            let (test_mean, test_std) = col(|r| r.test_score);
            let (complexity_mean, complexity_std) = col(|r| r.complexity as f64);
            CrossvalSummary {
                classifier: name,
                splits: inner.len(),
                train_mean,
                train_std,
                test_mean,
                test_std,
                complexity_mean,
                complexity_std,
            }
        })
        .collect();

    Ok(CrossvalReport {
        schema: SCHEMA,
        seed: config.seed,
        metric: config.metric,
        rows: data.rows(),
        features: data.cols(),
        holdout_rows: splits.holdout.len(),
        in_sample_rows: splits.in_sample.len(),
        inner_splits: splits.inner.len(),
        records,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{to_result_json, DataSource};
    use crate::local::SolverConfig;
    use crate::rng::seeded;
    use rand::Rng;

    fn noisy(rows: usize, seed: u64) -> Dataset {
        let mut rng = seeded(seed);
        let x: Vec<Vec<bool>> = (0..rows).map(|_| (0..6).map(|_| rng.gen()).collect()).collect();
        let y: Vec<bool> = x.iter().map(|r| (r[0] && r[1]) || r[2] != rng.gen_bool(0.1)).collect();
        Dataset::unnamed(crate::BitMatrix::from_rows(&x), BitVector::from_bools(&y)).unwrap()
    }

    fn config(splits: usize) -> RunConfig {
        RunConfig {
            data: DataSource {
                path: "unused.xbf".into(),
                label: None,
                positive_label: None,
                num_bins: 10,
            },
            protocol: SplitProtocol {
                inner_splits: splits,
                ..Default::default()
            },
            classifiers: vec![
                Classifier::MostFrequent,
                Classifier::SingleFeature,
                Classifier::Local {
                    solver: SolverConfig {
                        num_starts: 2,
                        num_iterations: 100,
                        max_complexity: Some(5),
                        ..Default::default()
                    },
                },
            ],
            sweep: None,
            seed: 3,
            workers: Some(1),
            metric: MetricKind::BalancedAccuracy,
        }
    }

    #[test]
    fn splits_partition_and_stratify() {
        let data = noisy(157, 1);
        let splits = make_splits(&data.y, &SplitProtocol::default(), 9).unwrap();
        let mut all: Vec<usize> = splits.holdout.iter().chain(&splits.in_sample).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..157).collect::<Vec<_>>());
        assert_eq!(splits.inner.len(), 32);
        let ratio = data.y.count_ones() as f64 / 157.0;
        for (tr, va) in &splits.inner {
            assert!(tr.iter().chain(va).all(|i| splits.in_sample.binary_search(i).is_ok()));
            assert!(tr.iter().all(|i| va.binary_search(i).is_err()));
            assert_eq!(tr.len() + va.len(), splits.in_sample.len());
            for part in [tr, va] {
                let pos = part.iter().filter(|&&i| data.y.get(i)).count() as f64;
                assert!((pos - ratio * part.len() as f64).abs() <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn deterministic_and_worker_independent() {
        let data = noisy(120, 2);
        let a = to_result_json(&crossval(&data, &config(2)).unwrap()).unwrap();
        let b = to_result_json(&crossval(&data, &config(2)).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = to_result_json(&crossval(&data, &RunConfig { workers: Some(3), ..config(2) }).unwrap()).unwrap();
        assert_eq!(a, c);
        assert!(a.contains("\"schema\": 1"));
    }

    #[test]
    fn records_and_summary() {
        let data = noisy(120, 4);
        let r = crossval(&data, &config(3)).unwrap();
        assert_eq!(r.records.len(), 3 * 4);
        assert_eq!(r.summary.len(), 3);
        assert!(r.summary.iter().all(|s| s.splits == 3));
        let mf = r.records.iter().filter(|r| r.classifier == "most-frequent");
        assert!(mf.into_iter().all(|r| r.train_score == 0.5 && r.test_score == 0.5));
        assert_eq!(r.holdout_rows + r.in_sample_rows, 120);
    }
}
