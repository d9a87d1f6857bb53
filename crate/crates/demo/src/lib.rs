//! Browser bindings: evaluate a rule on its truth table, recover a planted
//! rule by annealing, and size the depth-one search space and QUBO.
//!
//! Every export returns a JSON string; the plain-Rust functions behind them
//! are public so they can be tested natively.

use exprule::depth_one::{count_feasible, count_qubo_variables, QuboMode};
use exprule::local::{self, ProposalKind, SolverConfig};
use exprule::nonlocal::{self, NonLocalConfig};
use exprule::{BitMatrix, FeatureNames, Formula, MetricKind, OperatorKind};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest truth table the demo builds.
pub const MAX_VARIABLES: usize = 10;

fn parse(text: &str) -> Result<(Formula, usize), String> {
    let rule = Formula::parse(text, &FeatureNames::Default).map_err(|e| e.to_string())?;
    let vars = rule.root().max_feature().map_or(1, |f| f + 1);
    if vars > MAX_VARIABLES {
        return Err(format!("use features f0..f{} (at most {MAX_VARIABLES})", MAX_VARIABLES - 1));
    }
    Ok((rule, vars))
}

/// Complexity, depth and output of `text` on every assignment of its
/// features.
pub fn truth_table_json(text: &str) -> Result<Value, String> {
    let (rule, vars) = parse(text)?;
    let x = BitMatrix::truth_table(vars);
    let out = rule.root().evaluate(&x);
    let rows: Vec<Value> = (0..x.rows())
        .map(|i| {
            let bits: String = (0..vars).map(|j| if x.get(i, j) { '1' } else { '0' }).collect();
            json!([bits, out.get(i)])
        })
        .collect();
    Ok(json!({
        "rule": rule.to_string(),
        "variables": vars,
        "complexity": rule.complexity(),
        "depth": rule.depth(),
        "positives": out.count_ones(),
        "rows": rows,
    }))
}

/// Plants `text` as the label of its truth table (over at least `vars`
/// features) and anneals four starts for a rule within `max_complexity`.
/// The trace lists every start's iterations in turn.
pub fn anneal_json(
    text: &str,
    vars: usize,
    max_complexity: usize,
    iterations: usize,
    seed: u64,
    non_local: bool,
) -> Result<Value, String> {
    let (planted, needed) = parse(text)?;
    let vars = vars.max(needed).max(2);
    if vars > MAX_VARIABLES {
        return Err(format!("at most {MAX_VARIABLES} variables"));
    }
    let x = BitMatrix::truth_table(vars);
    let y = planted.root().evaluate(&x);
    let config = SolverConfig {
        num_starts: 4,
        num_iterations: iterations,
        max_complexity: Some(max_complexity),
        metric: MetricKind::BalancedAccuracy,
        seed,
        ..Default::default()
    };
    let result = if non_local {
        nonlocal::solve_with_nonlocal(&x, &y, &config, &NonLocalConfig::default())
    } else {
        local::solve(&x, &y, &config)
    }
    .map_err(|e| e.to_string())?;
    let trace: Vec<Value> = result
        .trace
        .records
        .iter()
        .map(|r| json!([r.objective, r.best, r.proposal == ProposalKind::NonLocal]))
        .collect();
    Ok(json!({
        "rule": result.formula.to_string(),
        "score": result.score,
        "complexity": result.formula.complexity(),
        "trace": trace,
    }))
}

/// Size of the depth-one search space over `m` features with at most
/// `max_literals` literals, and QUBO sizes for `n` rows (`n_pos` positive).
pub fn counts_json(m: usize, max_literals: usize, n: usize, n_pos: usize) -> Result<Value, String> {
    if max_literals == 0 || max_literals > m || n_pos > n {
        return Err("need 1 ≤ max literals ≤ features and positives ≤ rows".into());
    }
    let qubo: Vec<Value> = OperatorKind::ALL
        .iter()
        .map(|&op| {
            json!({
                "operator": op.name(),
                "with_eta": count_qubo_variables(m, n, n_pos, max_literals, QuboMode::WithEta, op),
                "without_eta": count_qubo_variables(m, n, n_pos, max_literals, QuboMode::WithoutEta, op),
            })
        })
        .collect();
    Ok(json!({
        "feasible_literal_sets": count_feasible(m, max_literals).to_string(),
        "qubo_variables": qubo,
    }))
}

fn to_js(v: Result<Value, String>) -> Result<String, JsValue> {
    v.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn truth_table(text: &str) -> Result<String, JsValue> {
    to_js(truth_table_json(text))
}

#[wasm_bindgen]
pub fn anneal(
    text: &str,
    vars: usize,
    max_complexity: usize,
    iterations: usize,
    seed: u32,
    non_local: bool,
) -> Result<String, JsValue> {
    to_js(anneal_json(text, vars, max_complexity, iterations, seed.into(), non_local))
}

#[wasm_bindgen]
pub fn counts(m: usize, max_literals: usize, n: usize, n_pos: usize) -> Result<String, JsValue> {
    to_js(counts_json(m, max_literals, n, n_pos))
}
