//! Exhaustive search over depth-one rules.

use std::cmp::Ordering;

use super::{DepthOneProblem, DepthOneSolution};
use crate::bits::{BitVector, RowCounter};
use crate::error::{Error, Result};
use crate::formula::{Literal, Operator, OperatorKind};
use crate::metrics::Confusion;

pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000_000;

/// Objectives closer than this are ties.
const TIE: f64 = 1e-9;

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    c
}

/// Rules the oracle evaluates: literal sets over distinct features with
/// `min..=max` literals, both polarities, times every valid `k`.
pub fn count_candidates(num_features: usize, operator: OperatorKind, min_literals: usize, max_literals: usize) -> u128 {
    (min_literals..=max_literals.min(num_features))
        .map(|l| {
            let ks = if operator.is_parameterized() { l as u128 + 1 } else { 1 };
            binomial(num_features, l)
                .saturating_mul(1u128.checked_shl(l as u32).unwrap_or(u128::MAX))
                .saturating_mul(ks)
        })
        .fold(0u128, |a, b| a.saturating_add(b))
}

/// Ordering of candidates with equal objective: fewer literals, then the
/// lexicographically smaller literal list, then smaller `k`.
fn tie_order(a: &DepthOneSolution, b: &DepthOneSolution) -> Ordering {
    a.literals
        .len()
        .cmp(&b.literals.len())
        .then_with(|| a.literals.cmp(&b.literals))
        .then_with(|| a.operator.k().cmp(&b.operator.k()))
}

/// The optimal depth-one rule, found by enumerating every candidate.
/// Fails with [`Error::EnumerationCap`] when there are more than `cap`.
pub fn brute_force_depth_one(problem: &DepthOneProblem<'_>, cap: u128) -> Result<DepthOneSolution> {
    let (x, y) = (problem.x, problem.y);
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if problem.min_literals > problem.max_literals {
        return Err(Error::config(format!(
            "min_literals {} exceeds max_literals {}",
            problem.min_literals, problem.max_literals
        )));
    }
    let m = x.cols();
    if problem.min_literals > m {
        return Err(Error::config(format!(
            "min_literals {} exceeds the {m} available features",
            problem.min_literals
        )));
    }
    let needed = count_candidates(m, problem.operator, problem.min_literals, problem.max_literals);
    if needed > cap {
        return Err(Error::EnumerationCap { needed, cap });
    }

    let negated: Vec<BitVector> = x.columns().iter().map(BitVector::not).collect();
    let mut best: Option<DepthOneSolution> = None;
    let mut consider = |op: Operator, literals: &[Literal], pred: &BitVector| {
        let weighted_errors = Confusion::new(pred, y).weighted_errors(problem.weights);
        let objective = weighted_errors + problem.lambda * literals.len() as f64;
        if let Some(b) = &best {
            if objective > b.objective + TIE {
                return;
            }
        }
        let cand = DepthOneSolution {
            operator: op,
            literals: literals.to_vec(),
            objective,
            weighted_errors,
            feasible: true,
            conflict: false,
        };
        let better = match &best {
            None => true,
            Some(b) => objective < b.objective - TIE || tie_order(&cand, b) == Ordering::Less,
        };
        if better {
            best = Some(cand);
        }
    };

    let mut features: Vec<usize> = Vec::new();
    let mut literals: Vec<Literal> = Vec::new();
    for l in problem.min_literals..=problem.max_literals.min(m) {
        features.clear();
        features.extend(0..l);
        loop {
            for mask in 0..1u64 << l {
                literals.clear();
                let mut counter = RowCounter::new(x.rows());
                for (j, &f) in features.iter().enumerate() {
                    let neg = mask >> (l - 1 - j) & 1 == 1;
                    literals.push(Literal::new(f, neg));
                    counter.add(if neg { &negated[f] } else { x.column(f) });
                }
                match problem.operator {
                    OperatorKind::And => consider(Operator::And, &literals, &counter.exactly(l)),
                    OperatorKind::Or => consider(Operator::Or, &literals, &counter.at_least(1)),
                    OperatorKind::AtLeast => {
                        for k in 0..=l {
                            consider(Operator::AtLeast(k), &literals, &counter.at_least(k));
                        }
                    }
                    OperatorKind::AtMost => {
                        for k in 0..=l {
                            consider(Operator::AtMost(k), &literals, &counter.at_most(k));
                        }
                    }
                    OperatorKind::Choose => {
                        for k in 0..=l {
                            consider(Operator::Choose(k), &literals, &counter.exactly(k));
                        }
                    }
                }
            }
            if !next_combination(&mut features, m) {
                break;
            }
        }
    }
    best.ok_or_else(|| Error::NoFeasibleSolution("no candidate rules to enumerate".into()))
}

/// Advances `c` (strictly increasing, values below `n`) to the next
/// combination in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
