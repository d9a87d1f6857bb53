//! Interpretable binary classifiers expressed as Boolean formulas over
//! binary features, trained by simulated annealing with optional
//! non-local subtree moves solved as small optimization problems.
//!
//! ```
//! use exprule::{BitMatrix, BitVector, Formula, FeatureNames, MetricKind};
//!
//! let f = Formula::parse("AtLeast2(f0,f1,f2)", &FeatureNames::Default).unwrap();
//! let x = BitMatrix::truth_table(3);
//! let y = f.evaluate(&x).unwrap();
//! assert_eq!(exprule::score(&f, &x, &y, MetricKind::BalancedAccuracy).unwrap(), 1.0);
//! ```

pub mod bits;
pub mod data;
pub mod depth_one;
pub mod error;
pub mod formula;
pub mod harness;
pub mod local;
pub mod metrics;
pub mod nonlocal;
pub mod rng;
pub mod timing;

pub use bits::{BitMatrix, BitVector};
pub use error::{Error, Result};
pub use formula::{FeatureNames, Formula, Literal, Node, Operator, OperatorKind, OperatorNode};
pub use metrics::{objective, score, ClassWeights, Confusion, MetricKind};
