use super::{Formula, Node, Operator};
use crate::bits::{BitMatrix, BitVector, RowCounter};
use crate::error::{Error, Result};

impl Node {
    /// Row-wise output over `x`. Feature indices are not checked here; use
    /// [`Formula::evaluate`] for validated evaluation.
    pub fn evaluate(&self, x: &BitMatrix) -> BitVector {
        match self {
            Node::Constant(c) => BitVector::constant(x.rows(), *c),
            Node::Literal(l) => {
                let col = x.column(l.feature);
                if l.negated {
                    col.not()
                } else {
                    col.clone()
                }
            }
            Node::Operator(o) => {
                let mut out = match o.op {
                    Operator::And => {
                        let mut acc = BitVector::ones(x.rows());
                        for c in &o.children {
                            acc.and_assign(&c.evaluate(x));
                        }
                        acc
                    }
                    Operator::Or => {
                        let mut acc = BitVector::zeros(x.rows());
                        for c in &o.children {
                            acc.or_assign(&c.evaluate(x));
                        }
                        acc
                    }
                    Operator::AtLeast(k) | Operator::AtMost(k) | Operator::Choose(k) => {
                        let mut counter = RowCounter::new(x.rows());
                        for c in &o.children {
                            counter.add(&c.evaluate(x));
                        }
                        match o.op {
                            Operator::AtLeast(_) => counter.at_least(k),
                            Operator::AtMost(_) => counter.at_most(k),
                            _ => counter.exactly(k),
                        }
                    }
                };
                if o.negated {
                    out.negate_in_place();
                }
                out
            }
        }
    }

    /// Output for a single row of booleans, by direct recursion.
    pub fn evaluate_row(&self, row: &[bool]) -> bool {
        match self {
            Node::Constant(c) => *c,
            Node::Literal(l) => row[l.feature] != l.negated,
            Node::Operator(o) => {
                let count = o.children.iter().filter(|c| c.evaluate_row(row)).count();
                o.op.holds(count, o.children.len()) != o.negated
            }
        }
    }
}

impl Formula {
    /// One output bit per row of `x`.
    pub fn evaluate(&self, x: &BitMatrix) -> Result<BitVector> {
        if let Some(max) = self.root().max_feature() {
            if max >= x.cols() {
                return Err(Error::FeatureOutOfRange {
                    index: max,
                    num_features: x.cols(),
                });
            }
        }
        Ok(self.root().evaluate(x))
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{arb_node, example_rule};
    use super::super::{Literal, Node, Operator};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn at_least_two_of_three() {
        let r = Formula::new(Node::over_literals(
            Operator::AtLeast(2),
            &[0, 1, 2].map(Literal::positive),
        ));
        let x = BitMatrix::from_rows(&[vec![true, false, true]]);
        assert!(r.evaluate(&x).unwrap().get(0));
    }

    #[test]
    fn example_rule_row() {
        let x = BitMatrix::from_rows(&[vec![true, true, false, false, false, true]]);
        assert!(example_rule().evaluate(&x).unwrap().get(0));
    }

    #[test]
    fn constant_rule() {
        let x = BitMatrix::zeros(5, 2);
        assert_eq!(
            Formula::constant(true).evaluate(&x).unwrap(),
            BitVector::ones(5)
        );
    }

    #[test]
    fn out_of_range_feature_is_named() {
        let x = BitMatrix::zeros(3, 2);
        let err = Formula::literal(7, false).evaluate(&x).unwrap_err();
        assert!(matches!(err, Error::FeatureOutOfRange { index: 7, num_features: 2 }));
    }

    #[test]
    fn parameter_edges_are_constant() {
        let x = BitMatrix::truth_table(3);
        let lits = [0, 1, 2].map(Literal::positive);
        let at_least0 = Formula::new(Node::over_literals(Operator::AtLeast(0), &lits));
        let at_most3 = Formula::new(Node::over_literals(Operator::AtMost(3), &lits));
        assert_eq!(at_least0.evaluate(&x).unwrap(), BitVector::ones(8));
        assert_eq!(at_most3.evaluate(&x).unwrap(), BitVector::ones(8));
    }

    fn lits(n: usize, negated: bool) -> Vec<Literal> {
        (0..n).map(|f| Literal::new(f, negated)).collect()
    }

    #[test]
    fn de_morgan_exhaustive() {
        for n in 2..=6 {
            let x = BitMatrix::truth_table(n);
            let not_and = Formula::new(Node::negated_operator(Operator::And, lits(n, false).iter().map(|&l| Node::Literal(l)).collect()));
            let or_neg = Formula::new(Node::over_literals(Operator::Or, &lits(n, true)));
            assert_eq!(not_and.evaluate(&x).unwrap(), or_neg.evaluate(&x).unwrap());
        }
    }

    #[test]
    fn at_least_at_most_duality_exhaustive() {
        for n in 2..=6 {
            let x = BitMatrix::truth_table(n);
            for k in 0..=n {
                let a = Formula::new(Node::over_literals(Operator::AtLeast(k), &lits(n, false)));
                let b = Formula::new(Node::over_literals(Operator::AtMost(n - k), &lits(n, true)));
                assert_eq!(a.evaluate(&x).unwrap(), b.evaluate(&x).unwrap(), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn choose_is_at_least_and_at_most() {
        for n in 2..=6 {
            let x = BitMatrix::truth_table(n);
            for k in 0..=n {
                let choose = Formula::new(Node::over_literals(Operator::Choose(k), &lits(n, false)));
                let mut both = Formula::new(Node::over_literals(Operator::AtLeast(k), &lits(n, false)))
                    .evaluate(&x)
                    .unwrap();
                both.and_assign(
                    &Formula::new(Node::over_literals(Operator::AtMost(k), &lits(n, false)))
                        .evaluate(&x)
                        .unwrap(),
                );
                assert_eq!(choose.evaluate(&x).unwrap(), both, "n={n} k={k}");
            }
        }
    }

    proptest! {
        #[test]
        fn vectorized_matches_row_recursion(node in arb_node(5)) {
            let x = BitMatrix::truth_table(5);
            let v = node.evaluate(&x);
            for i in 0..x.rows() {
                prop_assert_eq!(v.get(i), node.evaluate_row(&x.row(i)));
            }
        }

        #[test]
        fn negation_complements(node in arb_node(5)) {
            let x = BitMatrix::truth_table(5);
            let f = Formula::new(node);
            prop_assert_eq!(f.negated().evaluate(&x).unwrap(), f.evaluate(&x).unwrap().not());
        }
    }
}
