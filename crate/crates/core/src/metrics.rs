//! Scores, the regularized objective, and class weights.

use serde::{Deserialize, Serialize};

use crate::bits::{BitMatrix, BitVector};
use crate::error::{Error, Result};
use crate::formula::Formula;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    #[default]
    BalancedAccuracy,
    Accuracy,
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balanced-accuracy" | "balanced_accuracy" => Ok(MetricKind::BalancedAccuracy),
            "accuracy" => Ok(MetricKind::Accuracy),
            other => Err(Error::config(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl Confusion {
    pub fn new(predictions: &BitVector, labels: &BitVector) -> Self {
        let tp = predictions.count_and(labels);
        let positives = labels.count_ones();
        let predicted = predictions.count_ones();
        let fp = predicted - tp;
        let fn_ = positives - tp;
        let tn = labels.len() - positives - fp;
        Confusion { tp, fn_, tn, fp }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.tn + self.fp
    }

    /// Mean of the two per-class recalls. A class with no samples counts
    /// as recall 1.
    pub fn balanced_accuracy(&self) -> f64 {
        let recall = |hit: usize, miss: usize| {
            if hit + miss == 0 {
                1.0
            } else {
                hit as f64 / (hit + miss) as f64
            }
        };
        0.5 * (recall(self.tp, self.fn_) + recall(self.tn, self.fp))
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    pub fn metric(&self, metric: MetricKind) -> f64 {
        match metric {
            MetricKind::BalancedAccuracy => self.balanced_accuracy(),
            MetricKind::Accuracy => self.accuracy(),
        }
    }

    pub fn weighted_errors(&self, weights: ClassWeights) -> f64 {
        weights.positive * self.fn_ as f64 + weights.negative * self.fp as f64
    }
}

/// Score of `predictions` against `labels`.
pub fn score_predictions(predictions: &BitVector, labels: &BitVector, metric: MetricKind) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            rows: predictions.len(),
            labels: labels.len(),
        });
    }
    Ok(Confusion::new(predictions, labels).metric(metric))
}

/// Score of `formula` on the data `(x, y)`.
pub fn score(formula: &Formula, x: &BitMatrix, y: &BitVector, metric: MetricKind) -> Result<f64> {
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    score_predictions(&formula.evaluate(x)?, y, metric)
}

/// The regularized objective `score - lambda * complexity` (maximized).
pub fn objective(score: f64, complexity: usize, lambda: f64) -> f64 {
    score - lambda * complexity as f64
}

/// Per-class error weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub positive: f64,
    pub negative: f64,
}

impl ClassWeights {
    pub const UNIT: ClassWeights = ClassWeights {
        positive: 1.0,
        negative: 1.0,
    };

    /// Balanced weights `n / (2 n_P)` and `n / (2 n_N)`.
    pub fn balanced(y: &BitVector) -> Result<ClassWeights> {
        let n = y.len();
        let n_pos = y.count_ones();
        let n_neg = n - n_pos;
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if n_pos == 0 || n_neg == 0 {
            return Err(Error::SingleClass);
        }
        Ok(ClassWeights {
            positive: n as f64 / (2.0 * n_pos as f64),
            negative: n as f64 / (2.0 * n_neg as f64),
        })
    }

    pub fn max(&self) -> f64 {
        self.positive.max(self.negative)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Literal, Node, Operator};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bv(bits: &[u8]) -> BitVector {
        BitVector::from_bools(&bits.iter().map(|&b| b == 1).collect::<Vec<_>>())
    }

    #[test]
    fn perfect_predictions() {
        let y = bv(&[1, 0, 1, 1, 0]);
        assert_eq!(score_predictions(&y, &y, MetricKind::BalancedAccuracy).unwrap(), 1.0);
    }

    #[test]
    fn one_of_each() {
        let y = bv(&[1, 1, 0, 0]);
        let p = bv(&[1, 0, 0, 1]);
        let c = Confusion::new(&p, &y);
        assert_eq!((c.tp, c.fn_, c.tn, c.fp), (1, 1, 1, 1));
        assert_eq!(c.balanced_accuracy(), 0.5);
    }

    #[test]
    fn constant_rule_scores_half() {
        let x = BitMatrix::zeros(7, 1);
        let y = bv(&[1, 0, 0, 1, 0, 0, 0]);
        let s = score(&Formula::constant(true), &x, &y, MetricKind::BalancedAccuracy).unwrap();
        assert_eq!(s, 0.5);
    }

    #[test]
    fn absent_class_counts_as_perfect_recall() {
        let y = bv(&[1, 1, 1]);
        assert_eq!(score_predictions(&y, &y, MetricKind::BalancedAccuracy).unwrap(), 1.0);
        let p = bv(&[1, 0, 1]);
        assert_relative_eq!(
            score_predictions(&p, &y, MetricKind::BalancedAccuracy).unwrap(),
            0.5 * (2.0 / 3.0 + 1.0)
        );
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let e = BitVector::zeros(0);
        assert!(matches!(
            score_predictions(&e, &e, MetricKind::Accuracy),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn objective_arithmetic() {
        assert_eq!(objective(0.9, 8, 0.0), 0.9);
        assert_relative_eq!(objective(0.9, 8, 0.01), 0.82, epsilon = 1e-12);
        assert!(objective(0.9, 3, 0.01) > objective(0.9, 4, 0.01));
    }

    #[test]
    fn class_weight_values() {
        let w = ClassWeights::balanced(&bv(&[1, 0, 1, 0])).unwrap();
        assert_eq!((w.positive, w.negative), (1.0, 1.0));
        let w = ClassWeights::balanced(&bv(&[1, 1, 0, 0, 0, 0, 0, 0])).unwrap();
        assert_eq!(w.positive, 2.0);
        assert_relative_eq!(w.negative, 8.0 / 12.0);
        assert!(matches!(ClassWeights::balanced(&bv(&[0, 0])), Err(Error::SingleClass)));
    }

    #[test]
    fn accuracy_metric() {
        let f = Formula::new(Node::over_literals(
            Operator::Or,
            &[Literal::positive(0), Literal::positive(1)],
        ));
        let x = BitMatrix::truth_table(2);
        let y = bv(&[0, 1, 1, 0]);
        assert_eq!(score(&f, &x, &y, MetricKind::Accuracy).unwrap(), 0.75);
    }

    proptest! {
        #[test]
        fn weighted_errors_track_balanced_accuracy(
            pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 2..200)
        ) {
            let y = BitVector::from_bools(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
            let p = BitVector::from_bools(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
            prop_assume!(y.count_ones() > 0 && y.count_zeros() > 0);
            let w = ClassWeights::balanced(&y).unwrap();
            let c = Confusion::new(&p, &y);
            let n = y.len() as f64;
            prop_assert!((c.weighted_errors(w) - n * (1.0 - c.balanced_accuracy())).abs() < 1e-9);
        }

        #[test]
        fn negation_mirrors_score(
            pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..100)
        ) {
            let y = BitVector::from_bools(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
            let p = BitVector::from_bools(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
            prop_assume!(y.count_ones() > 0 && y.count_zeros() > 0);
            let s = Confusion::new(&p, &y).balanced_accuracy();
            let s_neg = Confusion::new(&p.not(), &y).balanced_accuracy();
            prop_assert!((s + s_neg - 1.0).abs() < 1e-12);
        }
    }
}
