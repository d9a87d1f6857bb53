//! Optimal depth-one rules: an operator applied directly to literals.
//!
//! Three routes to the same optimum: an exhaustive oracle
//! ([`brute_force_depth_one`]), an ILP ([`build_ilp`], exportable as an LP
//! file), and a QUBO compiled from the ILP ([`ilp_to_qubo`]) and solved by
//! simulated annealing ([`qubo_anneal`]).
//!
//! The objective minimized everywhere is `w_P·FN + w_N·FP + λ·L`, where `L`
//! is the number of literals.

mod anneal;
mod brute;
mod ilp;
mod lp;
mod qubo;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::bits::{BitMatrix, BitVector, RowCounter};
use crate::data::split::stratified_subsample;
use crate::error::{Error, Result};
use crate::formula::{Formula, Literal, Node, Operator, OperatorKind};
use crate::metrics::{ClassWeights, Confusion};

pub use anneal::{beta_range, qubo_anneal, AnnealConfig, AnnealOutcome, AnnealRead};
pub use brute::{brute_force_depth_one, count_candidates, DEFAULT_ENUMERATION_CAP};
pub use ilp::{build_ilp, solve_ilp_exhaustive, Constraint, ConstraintRole, IlpModel, Sense, VarKind};
pub use lp::{export_lp, parse_lp};
pub use qubo::{ilp_to_qubo, Penalties, Penalty, Qubo, QuboMode, QuboModel, QuboVar, SlackSide};

/// Rows kept when building a model; larger slices are subsampled.
pub const MAX_MODEL_ROWS: usize = 3000;

/// Predictions of `op` applied to `literals` on every row of `x`.
pub fn depth_one_predictions(x: &BitMatrix, op: Operator, literals: &[Literal]) -> BitVector {
    let mut counter = RowCounter::new(x.rows());
    for l in literals {
        let col = x.column(l.feature);
        if l.negated {
            counter.add(&col.not());
        } else {
            counter.add(col);
        }
    }
    let n = literals.len();
    match op {
        Operator::And => counter.exactly(n),
        Operator::Or => counter.at_least(1),
        Operator::AtLeast(k) => counter.at_least(k),
        Operator::AtMost(k) => counter.at_most(k),
        Operator::Choose(k) => counter.exactly(k),
    }
}

/// A depth-one rule with its training objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthOneSolution {
    pub operator: Operator,
    /// Sorted by (feature, polarity).
    pub literals: Vec<Literal>,
    /// `weighted_errors + λ·L`.
    pub objective: f64,
    pub weighted_errors: f64,
    /// False when some hard constraint (cardinality, `k <= L`, or a
    /// feature included with both polarities) is violated.
    pub feasible: bool,
    /// A feature was included with both polarities.
    pub conflict: bool,
}

impl DepthOneSolution {
    /// Scores `op(literals)` on `(x, y)`.
    pub fn evaluate(
        x: &BitMatrix,
        y: &BitVector,
        op: Operator,
        mut literals: Vec<Literal>,
        weights: ClassWeights,
        lambda: f64,
    ) -> Self {
        literals.sort();
        let conflict = literals.windows(2).any(|w| w[0].feature == w[1].feature);
        let pred = depth_one_predictions(x, op, &literals);
        let weighted_errors = Confusion::new(&pred, y).weighted_errors(weights);
        DepthOneSolution {
            operator: op,
            objective: weighted_errors + lambda * literals.len() as f64,
            weighted_errors,
            feasible: !conflict && op.is_valid_for(literals.len()),
            conflict,
            literals,
        }
    }

    pub fn num_literals(&self) -> usize {
        self.literals.len()
    }

    /// The rule as a tree. One- and zero-literal rules collapse to the
    /// literal, its negation, or a constant with the same truth table.
    pub fn to_node(&self) -> Node {
        let op = self.operator;
        match self.literals.as_slice() {
            [] => Node::Constant(op.holds(0, 0)),
            [l] => match (op.holds(0, 1), op.holds(1, 1)) {
                (false, true) => Node::Literal(*l),
                (true, false) => Node::Literal(l.flipped()),
                (v, _) => Node::Constant(v),
            },
            lits => Node::over_literals(op, lits),
        }
    }

    pub fn to_formula(&self) -> Formula {
        Formula::new(self.to_node())
    }
}

/// Which solver a depth-one problem is handed to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum DepthOneBackend {
    /// Exhaustive enumeration, failing when the candidate count exceeds `cap`.
    Oracle {
        #[serde(with = "cap_serde")]
        cap: u128,
    },
    /// QUBO compiled from the ILP and solved by annealing.
    Qubo {
        mode: QuboMode,
        penalties: Penalties,
        anneal: AnnealConfig,
    },
}

impl Default for DepthOneBackend {
    fn default() -> Self {
        DepthOneBackend::Oracle {
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// Enumeration caps travel as `u64` (saturating), which every config
/// format supports.
pub(crate) mod cap_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(cap: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(u64::try_from(*cap).unwrap_or(u64::MAX))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        u64::deserialize(d).map(u128::from)
    }
}

/// A depth-one optimization problem on a data slice.
#[derive(Clone, Copy, Debug)]
pub struct DepthOneProblem<'a> {
    pub x: &'a BitMatrix,
    pub y: &'a BitVector,
    pub operator: OperatorKind,
    pub max_literals: usize,
    pub min_literals: usize,
    pub lambda: f64,
    pub weights: ClassWeights,
}

impl<'a> DepthOneProblem<'a> {
    /// Problem with balanced class weights.
    pub fn balanced(
        x: &'a BitMatrix,
        y: &'a BitVector,
        operator: OperatorKind,
        max_literals: usize,
        lambda: f64,
    ) -> Result<Self> {
        Ok(DepthOneProblem {
            x,
            y,
            operator,
            max_literals,
            min_literals: 0,
            lambda,
            weights: ClassWeights::balanced(y)?,
        })
    }

    pub fn build_ilp(&self) -> Result<IlpModel> {
        build_ilp(
            self.x,
            self.y,
            self.operator,
            self.max_literals,
            self.lambda,
            self.weights,
            self.min_literals,
        )
    }

    pub fn brute_force(&self, cap: u128) -> Result<DepthOneSolution> {
        brute_force_depth_one(self, cap)
    }

    pub fn evaluate(&self, op: Operator, literals: Vec<Literal>) -> DepthOneSolution {
        let mut s = DepthOneSolution::evaluate(self.x, self.y, op, literals, self.weights, self.lambda);
        let l = s.literals.len();
        s.feasible &= l <= self.max_literals && l >= self.min_literals;
        s
    }

    /// Compiles to a QUBO, anneals, and returns the feasible decoded read
    /// with the lowest true objective (earliest read on ties).
    pub fn solve_qubo(
        &self,
        mode: QuboMode,
        penalties: &Penalties,
        anneal: &AnnealConfig,
    ) -> Result<DepthOneSolution> {
        let model = self.build_ilp()?;
        let qubo = ilp_to_qubo(&model, mode, penalties)?;
        let outcome = qubo_anneal(&qubo.qubo, anneal);
        let mut best: Option<DepthOneSolution> = None;
        for read in &outcome.reads {
            let s = qubo.decode(&read.bits, self);
            if s.feasible && best.as_ref().is_none_or(|b| s.objective < b.objective - 1e-12) {
                best = Some(s);
            }
        }
        best.ok_or_else(|| Error::NoFeasibleSolution(format!("none of {} reads decoded to a feasible rule", outcome.reads.len())))
    }

    pub fn solve(&self, backend: &DepthOneBackend) -> Result<DepthOneSolution> {
        match backend {
            DepthOneBackend::Oracle { cap } => self.brute_force(*cap),
            DepthOneBackend::Qubo {
                mode,
                penalties,
                anneal,
            } => self.solve_qubo(*mode, penalties, anneal),
        }
    }
}

/// Stratified, seeded subsample of `(x, y)` to at most `max_rows` rows;
/// returns the inputs unchanged when already small enough.
pub fn subsample_rows(x: &BitMatrix, y: &BitVector, max_rows: usize, seed: u64) -> (BitMatrix, BitVector) {
    if x.rows() <= max_rows {
        return (x.clone(), y.clone());
    }
    let all: Vec<usize> = (0..x.rows()).collect();
    let keep = stratified_subsample(y, &all, max_rows, seed);
    (x.select_rows(&keep), y.select(&keep))
}

/// Number of binary variables of the QUBO built from a model with `m`
/// features, `n` rows (`n_pos` positive), cap `m′ = max_literals` and no
/// lower literal bound.
pub fn count_qubo_variables(
    m: usize,
    n: usize,
    n_pos: usize,
    max_literals: usize,
    mode: QuboMode,
    operator: OperatorKind,
) -> usize {
    // Bits needed to encode an integer in 0..=range.
    let bits = |range: usize| (usize::BITS - range.leading_zeros()) as usize;
    let mm = max_literals;
    let n_neg = n - n_pos;
    let globals = if operator.is_parameterized() { 3 * bits(mm) } else { bits(mm) };
    let rows = match (mode, operator) {
        (QuboMode::WithEta, OperatorKind::Or | OperatorKind::And) => n + n * bits(mm),
        (QuboMode::WithEta, OperatorKind::AtLeast | OperatorKind::AtMost) => n + n * bits(2 * mm),
        (QuboMode::WithEta, OperatorKind::Choose) => {
            n + n_neg + 2 * n_pos * bits(2 * mm) + 2 * n_neg * bits(3 * mm + 1)
        }
        (QuboMode::WithoutEta, OperatorKind::Or) => n_pos * bits(mm - 1),
        (QuboMode::WithoutEta, OperatorKind::And) => n_neg * bits(mm - 1),
        (QuboMode::WithoutEta, OperatorKind::AtLeast) => n_pos * bits(mm) + n_neg * bits(mm - 1),
        (QuboMode::WithoutEta, OperatorKind::AtMost) => n_pos * bits(mm) + n_neg * bits(mm - 1),
        // The two negative-row constraints share a left-hand side once eta is
        // gone and merge into one range constraint.
        (QuboMode::WithoutEta, OperatorKind::Choose) => n_neg * (1 + bits(mm - 1)),
    };
    2 * m + globals + rows
}

/// Number of literal sets with at most `max_literals` literals drawn from
/// `2m` literals: `Σ_{l=0}^{m′} C(2m, l)`.
pub fn count_feasible(m: usize, max_literals: usize) -> BigUint {
    let n = 2 * m;
    let mut total = BigUint::from(0u32);
    let mut binom = BigUint::from(1u32);
    for l in 0..=max_literals.min(n) {
        total += &binom;
        binom = binom * BigUint::from(n - l) / BigUint::from(l + 1);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::score_predictions;
    use crate::MetricKind;

    #[test]
    fn table_counts() {
        let (m, n, np) = (300, 569, 212);
        use OperatorKind::*;
        assert_eq!(count_qubo_variables(m, n, np, 4, QuboMode::WithEta, Or), 2879);
        assert_eq!(count_qubo_variables(m, n, np, 4, QuboMode::WithEta, And), 2879);
        assert_eq!(count_qubo_variables(m, n, np, 4, QuboMode::WithoutEta, Or), 1027);
        assert_eq!(count_qubo_variables(m, n, np, 4, QuboMode::WithoutEta, And), 1317);
        assert_eq!(count_qubo_variables(m, n, np, 4, QuboMode::WithoutEta, AtLeast), 1959);
        assert_eq!(count_qubo_variables(m, n, np, 4, QuboMode::WithoutEta, AtMost), 1959);
        // m′ = 1: one slack bit per row plus the cardinality bit.
        assert_eq!(count_qubo_variables(7, 10, 4, 1, QuboMode::WithEta, Or), 14 + 10 + 11);
    }

    #[test]
    fn feasible_counts() {
        assert_eq!(count_feasible(1, 1), BigUint::from(3u32));
        assert_eq!(count_feasible(2, 2), BigUint::from(11u32));
        assert_eq!(count_feasible(300, 2), BigUint::from(180301u32));
        assert_eq!(count_feasible(1, 5), BigUint::from(4u32));
    }

    #[test]
    fn degenerate_rules_collapse() {
        let s = |op, lits: Vec<Literal>| DepthOneSolution {
            operator: op,
            literals: lits,
            objective: 0.0,
            weighted_errors: 0.0,
            feasible: true,
            conflict: false,
        };
        let f0 = Literal::positive(0);
        assert_eq!(s(Operator::Or, vec![f0]).to_node(), Node::Literal(f0));
        assert_eq!(s(Operator::And, vec![f0]).to_node(), Node::Literal(f0));
        assert_eq!(s(Operator::AtMost(0), vec![f0]).to_node(), Node::Literal(f0.flipped()));
        assert_eq!(s(Operator::AtMost(1), vec![f0]).to_node(), Node::Constant(true));
        assert_eq!(s(Operator::Choose(1), vec![f0]).to_node(), Node::Literal(f0));
        assert_eq!(s(Operator::Or, vec![]).to_node(), Node::Constant(false));
        assert_eq!(s(Operator::And, vec![]).to_node(), Node::Constant(true));
        assert_eq!(s(Operator::AtLeast(1), vec![]).to_node(), Node::Constant(false));
    }

    #[test]
    fn predictions_match_formula_evaluation() {
        let x = BitMatrix::truth_table(4);
        let lits = vec![Literal::positive(0), Literal::negative(2), Literal::positive(3)];
        for op in OperatorKind::ALL.iter().flat_map(|k| k.instances(3)) {
            let s = DepthOneSolution::evaluate(&x, &BitVector::zeros(16), op, lits.clone(), ClassWeights::UNIT, 0.0);
            assert_eq!(depth_one_predictions(&x, op, &lits), s.to_formula().evaluate(&x).unwrap(), "{op}");
        }
    }

    #[test]
    fn weighted_errors_agree_with_scoring() {
        let x = BitMatrix::truth_table(3);
        let y = BitVector::from_bools(&[true, false, false, true, true, false, false, false]);
        let w = ClassWeights::balanced(&y).unwrap();
        let s = DepthOneSolution::evaluate(&x, &y, Operator::Or, vec![Literal::positive(0)], w, 0.0);
        let ba = score_predictions(&s.to_formula().evaluate(&x).unwrap(), &y, MetricKind::BalancedAccuracy).unwrap();
        // Balanced weights turn weighted errors into n·(1 − BA).
        assert!((s.weighted_errors - 8.0 * (1.0 - ba)).abs() < 1e-12);
    }
}
