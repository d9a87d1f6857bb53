//! Non-local moves: replace a randomly chosen subtree with an optimized
//! depth-one subtree.
//!
//! For a target node `T` of rule `R`, every row is evaluated twice, with `T`
//! forced to false and to true. Rows where both evaluations agree are
//! *predetermined* and dropped; on the rest exactly one value of `T` makes
//! `R` classify the row correctly, which becomes the row's effective label.
//! The depth-one problem on those rows is solved within the complexity left
//! over by the rest of the rule and spliced back in.

use std::time::Duration;

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::bits::{BitMatrix, BitVector};
use crate::depth_one::{
    count_candidates, AnnealConfig, DepthOneProblem, DepthOneSolution, Penalties, QuboMode,
};
use crate::error::{Error, Result};
use crate::formula::{Formula, Literal, Node, OperatorKind, Path};
use crate::local::{self, Move, NonLocalOutcome, SolveResult, SolverConfig};
use crate::metrics::ClassWeights;
use crate::rng::Rng;
use crate::timing::Stopwatch;

/// Rows of a non-local subproblem.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveSubproblem {
    pub x: BitMatrix,
    /// Value the target must take for the rule to be correct on each row.
    pub y: BitVector,
    /// Rows whose output does not depend on the target.
    pub predetermined: usize,
    /// Index in the full data of each retained row.
    pub rows: Vec<usize>,
}

impl EffectiveSubproblem {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Builds the subproblem for the node at `target`, keeping a uniform random
/// subset of at most `max_samples` of the non-predetermined rows.
pub fn effective_subproblem(
    rule: &Formula,
    target: &[usize],
    x: &BitMatrix,
    y: &BitVector,
    max_samples: usize,
    rng: &mut Rng,
) -> Result<EffectiveSubproblem> {
    let low = rule.replaced(target, Node::Constant(false))?.root().evaluate(x);
    let high = rule.replaced(target, Node::Constant(true))?.root().evaluate(x);
    let mut rows = low.xor(&high).ones_indices();
    let predetermined = x.rows() - rows.len();
    if rows.len() > max_samples {
        let mut picked: Vec<usize> = sample(rng, rows.len(), max_samples).into_iter().map(|i| rows[i]).collect();
        picked.sort_unstable();
        rows = picked;
    }
    // T = 1 is right exactly when the rule with T = 1 matches the label.
    let labels: Vec<bool> = rows.iter().map(|&i| high.get(i) == y.get(i)).collect();
    Ok(EffectiveSubproblem {
        x: x.select_rows(&rows),
        y: BitVector::from_bools(&labels),
        predetermined,
        rows,
    })
}

/// Literal bounds `(max, min)` for a depth-one subtree replacing the node at
/// `target` so that the rule stays within `max_complexity`, or `None` when
/// the budget cannot fit the smallest allowed subtree. Replacing the root
/// needs at least two literals (otherwise the rule would be trivial);
/// anywhere else one suffices.
pub fn subtree_budget(rule: &Formula, target: &[usize], max_complexity: usize) -> Option<(usize, usize)> {
    let node = rule.node_at(target)?;
    let rest = rule.complexity() - node.complexity();
    let budget = max_complexity.checked_sub(rest)?;
    let min = if target.is_empty() { 2 } else { 1 };
    (budget > min).then(|| (budget - 1, min))
}

/// Which solver handles subproblems.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubproblemBackend {
    /// Exhaustive search while the candidate count is within the cap,
    /// annealing otherwise.
    #[default]
    Oracle,
    /// Always anneal the QUBO.
    Qubo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NonLocalConfig {
    /// Iterations at the start of each run without non-local proposals;
    /// `None` means a third of the iterations.
    pub burn_in: Option<usize>,
    /// Iterations without improvement of the best objective that trigger a
    /// non-local proposal.
    pub patience: usize,
    pub max_samples: usize,
    /// Operators the new subtree root is drawn from.
    pub operators: Vec<OperatorKind>,
    pub backend: SubproblemBackend,
    /// Largest candidate count the oracle backend enumerates.
    #[serde(with = "crate::depth_one::cap_serde")]
    pub oracle_cap: u128,
    /// Time limit for one annealed subproblem, in seconds.
    pub timeout: f64,
    pub qubo_mode: QuboMode,
    pub penalties: Penalties,
    /// Reads and sweeps of the annealer; seed and timeout are set per call.
    pub anneal: AnnealConfig,
}

impl Default for NonLocalConfig {
    fn default() -> Self {
        NonLocalConfig {
            burn_in: None,
            patience: 10,
            max_samples: 100,
            operators: OperatorKind::ALL.to_vec(),
            backend: SubproblemBackend::Oracle,
            oracle_cap: 1_000_000,
            timeout: 1.0,
            qubo_mode: QuboMode::WithEta,
            penalties: Penalties::default(),
            anneal: AnnealConfig::default(),
        }
    }
}

impl NonLocalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patience == 0 {
            return Err(Error::config("patience must be at least 1"));
        }
        if self.max_samples == 0 {
            return Err(Error::config("max_samples must be at least 1"));
        }
        if self.operators.is_empty() {
            return Err(Error::config("at least one subtree operator is needed"));
        }
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return Err(Error::config(format!("timeout must be positive (got {})", self.timeout)));
        }
        Ok(())
    }

    pub fn burn_in_for(&self, num_iterations: usize) -> usize {
        self.burn_in.unwrap_or(num_iterations / 3)
    }
}

/// Everything about one non-local proposal, for tracing and checking.
#[derive(Clone, Debug)]
pub struct NonLocalAttempt {
    pub target: Path,
    pub operator: OperatorKind,
    pub max_literals: usize,
    pub min_literals: usize,
    pub subproblem: EffectiveSubproblem,
    /// Columns of the subproblem that are not constant; the subtree is
    /// built from these features only.
    pub features: Vec<usize>,
    /// Best depth-one subtree found, over the full feature indices.
    pub solution: Option<DepthOneSolution>,
    /// The splice, when the solution yields a valid rule.
    pub mv: Option<Move>,
    pub seconds: f64,
}

/// Class weights for a subproblem; unit weights when it has a single class.
pub fn subproblem_weights(y: &BitVector) -> ClassWeights {
    ClassWeights::balanced(y).unwrap_or(ClassWeights::UNIT)
}

/// Proposes a non-local move: picks a uniform random target and subtree
/// operator, builds the effective subproblem and solves it. Returns `None`
/// when the target's budget cannot fit a subtree (nothing is solved).
///
/// `lambda` is the complexity penalty of the full objective; the subproblem
/// minimizes weighted errors plus `lambda · rows` per literal, which puts
/// both on the scale of balanced accuracy.
pub fn propose_non_local_move(
    rule: &Formula,
    x: &BitMatrix,
    y: &BitVector,
    max_complexity: Option<usize>,
    lambda: f64,
    config: &NonLocalConfig,
    rng: &mut Rng,
) -> Option<NonLocalAttempt> {
    let watch = Stopwatch::start();
    let paths = rule.paths();
    let target = paths[rng.gen_range(0..paths.len())].clone();
    let operator = config.operators[rng.gen_range(0..config.operators.len())];
    let (max_literals, min_literals) = match max_complexity {
        Some(c) => subtree_budget(rule, &target, c)?,
        None => (x.cols(), if target.is_empty() { 2 } else { 1 }),
    };
    let subproblem = effective_subproblem(rule, &target, x, y, config.max_samples, rng).ok()?;
    let features: Vec<usize> = (0..x.cols())
        .filter(|&j| {
            let ones = subproblem.x.column(j).count_ones();
            ones > 0 && ones < subproblem.rows.len()
        })
        .collect();
    let mut attempt = NonLocalAttempt {
        target,
        operator,
        max_literals: max_literals.min(features.len()),
        min_literals,
        subproblem,
        features,
        solution: None,
        mv: None,
        seconds: 0.0,
    };
    if !attempt.subproblem.is_empty() && attempt.min_literals <= attempt.max_literals {
        attempt.solution = solve_subproblem(&attempt, lambda, config, rng);
        attempt.mv = attempt.solution.as_ref().and_then(|s| splice(rule, &attempt.target, s));
    }
    attempt.seconds = watch.seconds();
    Some(attempt)
}

fn solve_subproblem(
    attempt: &NonLocalAttempt,
    lambda: f64,
    config: &NonLocalConfig,
    rng: &mut Rng,
) -> Option<DepthOneSolution> {
    let sub = &attempt.subproblem;
    let x = sub.x.select_columns(&attempt.features);
    let problem = DepthOneProblem {
        x: &x,
        y: &sub.y,
        operator: attempt.operator,
        max_literals: attempt.max_literals,
        min_literals: attempt.min_literals,
        lambda: lambda * sub.rows.len() as f64,
        weights: subproblem_weights(&sub.y),
    };
    let candidates = count_candidates(x.cols(), attempt.operator, attempt.min_literals, attempt.max_literals);
    let solution = if config.backend == SubproblemBackend::Oracle && candidates <= config.oracle_cap {
        problem.brute_force(config.oracle_cap)
    } else {
        let anneal = AnnealConfig {
            seed: rng.gen(),
            timeout: Some(Duration::from_secs_f64(config.timeout)),
            ..config.anneal.clone()
        };
        problem.solve_qubo(config.qubo_mode, &config.penalties, &anneal)
    };
    let mut s = solution.ok()?;
    for l in &mut s.literals {
        *l = Literal::new(attempt.features[l.feature], l.negated);
    }
    s.literals.sort_unstable();
    Some(s)
}

/// The move installing `solution` at `target`, unless that would leave a
/// constant or a literal repeating a sibling's feature.
fn splice(rule: &Formula, target: &[usize], solution: &DepthOneSolution) -> Option<Move> {
    let node = solution.to_node();
    match &node {
        Node::Constant(_) => return None,
        Node::Literal(l) => {
            let (&idx, parent) = target.split_last()?;
            let clash = rule.node_at(parent)?.children().iter().enumerate().any(|(i, c)| {
                i != idx && matches!(c, Node::Literal(s) if s.feature == l.feature)
            });
            if clash {
                return None;
            }
        }
        Node::Operator(_) => {}
    }
    Some(Move::ReplaceSubtree {
        path: target.to_vec(),
        node,
    })
}

/// Simulated annealing with non-local proposals: after the burn-in, once the
/// best objective of a start has not improved for `patience` iterations,
/// the next proposal is non-local. Proposals that yield nothing fall back to
/// a local move.
pub fn solve_with_nonlocal(
    x: &BitMatrix,
    y: &BitVector,
    solver: &SolverConfig,
    config: &NonLocalConfig,
) -> Result<SolveResult> {
    config.validate()?;
    let burn_in = config.burn_in_for(solver.num_iterations);
    let hook = |rule: &Formula, iteration: usize, stalled: usize, rng: &mut Rng| {
        if iteration <= burn_in || stalled < config.patience {
            return NonLocalOutcome::Skipped;
        }
        match propose_non_local_move(rule, x, y, solver.max_complexity, solver.lambda, config, rng) {
            None => NonLocalOutcome::Skipped,
            Some(a) => NonLocalOutcome::Attempted {
                mv: a.mv,
                rows: a.subproblem.rows.len(),
                seconds: a.seconds,
            },
        }
    };
    local::solve_with_hook(x, y, solver, &hook)
}
