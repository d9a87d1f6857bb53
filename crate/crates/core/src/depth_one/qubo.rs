//! Compiling a depth-one ILP into a QUBO.
//!
//! Each constraint is first brought into the two-sided form
//! `l <= aᵀx <= u`, where the stated bound is intersected with the range the
//! left-hand side can actually take (literal blocks hold at most `m′` ones,
//! `k` lies in `0..=m′`, `eta`/`q` are binary). An equality becomes
//! `P (aᵀx - l)²`; an inequality gets an integer slack `s ∈ [0, u - l]` and
//! becomes `P (aᵀx - l - s)²` or `P (aᵀx - u + s)²`, whichever bound is
//! smaller in magnitude. Integers (`k` and slacks) use the bounded binary
//! encoding: weights `1, 2, 4, …` with the last weight trimmed so the
//! maximum is exactly the range.
//!
//! Sample constraints are weighted `w_P·L1` / `w_N·L1`; the cardinality,
//! `k <= L` and minimum-literal constraints get `L2`.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ilp::{ConstraintRole, IlpModel, Sense, VarKind};
use super::{DepthOneProblem, DepthOneSolution};
use crate::error::{Error, Result};
use crate::formula::{Literal, Operator, OperatorKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuboMode {
    /// Keep the error indicators; misclassification is paid through the
    /// objective.
    #[default]
    WithEta,
    /// Drop the error indicators; misclassification is paid through the
    /// (class-weighted) constraint penalties.
    WithoutEta,
}

impl std::str::FromStr for QuboMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "with_eta" | "with-eta" => Ok(QuboMode::WithEta),
            "without_eta" | "without-eta" => Ok(QuboMode::WithoutEta),
            _ => Err(Error::config(format!("unknown QUBO mode `{s}` (expected with_eta or without_eta)"))),
        }
    }
}

/// Penalty strengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Penalties {
    /// Scale of the per-sample penalties.
    pub l1: f64,
    /// Penalty of the global constraints; `None` means
    /// `100 · l1 · max(w_P, w_N) · n`.
    pub l2: Option<f64>,
}

impl Default for Penalties {
    fn default() -> Self {
        Penalties { l1: 1.0, l2: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuboVar {
    /// A binary variable of the ILP.
    Decision(VarKind),
    /// One bit of the encoded `k`.
    KBit { weight: i64 },
    /// One bit of the slack of penalty `penalty`.
    SlackBit { penalty: usize, weight: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlackSide {
    /// `l == u`: no slack.
    Equality,
    /// Penalty `(aᵀx - l - s)²`.
    Lower,
    /// Penalty `(aᵀx - u + s)²`.
    Upper,
}

/// One squared penalty `weight · (Σ coef·x + constant)²` over QUBO variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    pub name: String,
    pub role: ConstraintRole,
    pub weight: f64,
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
    pub lower: i64,
    pub upper: i64,
    pub side: SlackSide,
}

impl Penalty {
    pub fn value(&self, bits: &[bool]) -> f64 {
        let r: f64 = self.constant + self.terms.iter().filter(|t| bits[t.0]).map(|t| t.1).sum::<f64>();
        self.weight * r * r
    }
}

/// `E(x) = offset + Σ linear_i x_i + Σ_{i<j} J_ij x_i x_j` over binary `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Qubo {
    pub linear: Vec<f64>,
    /// Dense symmetric `N × N` couplings with a zero diagonal.
    coupling: Vec<f64>,
    pub offset: f64,
}

impl Qubo {
    pub fn zeros(n: usize) -> Self {
        Qubo {
            linear: vec![0.0; n],
            coupling: vec![0.0; n * n],
            offset: 0.0,
        }
    }

    /// Builds from linear terms and `(i, j, J_ij)` couplings (`i != j`;
    /// repeated pairs add up).
    pub fn from_parts(linear: Vec<f64>, couplings: &[(usize, usize, f64)], offset: f64) -> Self {
        let mut q = Qubo::zeros(linear.len());
        q.linear = linear;
        q.offset = offset;
        for &(i, j, v) in couplings {
            assert_ne!(i, j, "diagonal entries belong in the linear terms");
            q.add_coupling(i, j, v);
        }
        q
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn add_coupling(&mut self, i: usize, j: usize, v: f64) {
        let n = self.num_vars();
        self.coupling[i * n + j] += v;
        self.coupling[j * n + i] += v;
    }

    /// Row `i` of the coupling matrix.
    pub fn coupling_row(&self, i: usize) -> &[f64] {
        let n = self.num_vars();
        &self.coupling[i * n..(i + 1) * n]
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.num_vars() + j]
    }

    pub fn energy(&self, bits: &[bool]) -> f64 {
        assert_eq!(bits.len(), self.num_vars(), "assignment length mismatch");
        let ones: Vec<usize> = (0..bits.len()).filter(|&i| bits[i]).collect();
        let mut e = self.offset;
        for (a, &i) in ones.iter().enumerate() {
            e += self.linear[i];
            let row = self.coupling_row(i);
            for &j in &ones[a + 1..] {
                e += row[j];
            }
        }
        e
    }

    /// Sparse coordinate text: a header `N offset`, then `i j value` for
    /// every nonzero upper-triangular entry (the diagonal holds the linear
    /// terms).
    pub fn to_coordinate_text(&self) -> String {
        let n = self.num_vars();
        let mut out = format!("{n} {}\n", self.offset);
        for i in 0..n {
            if self.linear[i] != 0.0 {
                let _ = writeln!(out, "{i} {i} {}", self.linear[i]);
            }
            let row = self.coupling_row(i);
            for (j, &v) in row.iter().enumerate().skip(i + 1) {
                if v != 0.0 {
                    let _ = writeln!(out, "{i} {j} {v}");
                }
            }
        }
        out
    }

    /// Parses [`Qubo::to_coordinate_text`] output.
    pub fn from_coordinate_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse {
            position: line,
            message: msg.to_string(),
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
        let mut h = header.split_whitespace();
        let n: usize = h
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(1, "header must be `N offset`"))?;
        let offset: f64 = h
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(1, "header must be `N offset`"))?;
        let mut q = Qubo::zeros(n);
        q.offset = offset;
        for (idx, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                [i, j, v] => i.parse::<usize>().ok().zip(j.parse::<usize>().ok()).zip(v.parse::<f64>().ok()),
                _ => None,
            };
            let ((i, j), v) = parsed.ok_or_else(|| bad(idx + 1, "expected `i j value`"))?;
            if i >= n || j >= n {
                return Err(bad(idx + 1, "index out of range"));
            }
            if i == j {
                q.linear[i] += v;
            } else {
                q.add_coupling(i, j, v);
            }
        }
        Ok(q)
    }
}

/// A QUBO compiled from a depth-one ILP, with the meaning of each variable.
#[derive(Clone, Debug)]
pub struct QuboModel {
    pub mode: QuboMode,
    pub operator: OperatorKind,
    pub max_literals: usize,
    pub vars: Vec<QuboVar>,
    pub qubo: Qubo,
    /// Linear objective terms carried over from the ILP.
    pub cost: Vec<(usize, f64)>,
    pub penalties: Vec<Penalty>,
}

/// Bounded binary encoding of an integer in `0..=range`.
fn encoding_weights(range: i64) -> Vec<i64> {
    let mut weights = Vec::new();
    let mut covered = 0;
    let mut w = 1;
    while covered < range {
        let take = w.min(range - covered);
        weights.push(take);
        covered += take;
        w *= 2;
    }
    weights
}

/// Range the literal block (terms on `b`/`nb`) of a constraint can take.
fn literal_block_range(model: &IlpModel, terms: &[(usize, i64)], role: ConstraintRole) -> (i64, i64) {
    let coefs: Vec<i64> = terms
        .iter()
        .filter(|(v, _)| model.variables[*v].is_literal())
        .map(|&(_, c)| c)
        .collect();
    let naive = (
        coefs.iter().filter(|&&c| c < 0).sum::<i64>(),
        coefs.iter().filter(|&&c| c > 0).sum::<i64>(),
    );
    if role == ConstraintRole::MaxLiterals || coefs.is_empty() || coefs.iter().any(|&c| c != coefs[0]) {
        return naive;
    }
    // Uniform coefficient c: at most m′ literals are on.
    let c = coefs[0];
    let reach = c * (model.max_literals.min(coefs.len()) as i64);
    (reach.min(0), reach.max(0))
}

fn analytic_range(model: &IlpModel, terms: &[(usize, i64)], role: ConstraintRole) -> (i64, i64) {
    let (mut lo, mut hi) = literal_block_range(model, terms, role);
    for &(v, c) in terms {
        if model.variables[v].is_literal() {
            continue;
        }
        let reach = c * model.upper_bound(v);
        lo += reach.min(0);
        hi += reach.max(0);
    }
    (lo, hi)
}

pub fn ilp_to_qubo(model: &IlpModel, mode: QuboMode, penalties: &Penalties) -> Result<QuboModel> {
    let keep = |v: usize| mode == QuboMode::WithEta || !model.variables[v].is_eta();

    // Bring every constraint into two-sided form, merging constraints of
    // the same row whose left-hand sides coincide once eta is gone.
    struct Bounded {
        name: String,
        role: ConstraintRole,
        terms: Vec<(usize, i64)>,
        lower: i64,
        upper: i64,
    }
    let mut bounded: Vec<Bounded> = Vec::new();
    let mut seen: HashMap<(ConstraintRole, Vec<(usize, i64)>), usize> = HashMap::new();
    for c in &model.constraints {
        let mut terms: Vec<(usize, i64)> = c.terms.iter().copied().filter(|&(v, _)| keep(v)).collect();
        terms.sort_unstable();
        let (lo, hi) = analytic_range(model, &terms, c.role);
        let (lower, upper) = match c.sense {
            Sense::Le => (lo, hi.min(c.rhs)),
            Sense::Ge => (lo.max(c.rhs), hi),
            Sense::Eq => (lo.max(c.rhs), hi.min(c.rhs)),
        };
        match seen.get(&(c.role, terms.clone())) {
            Some(&i) => {
                let b = &mut bounded[i];
                b.lower = b.lower.max(lower);
                b.upper = b.upper.min(upper);
                b.name = format!("{}+{}", b.name, c.name);
            }
            None => {
                seen.insert((c.role, terms.clone()), bounded.len());
                bounded.push(Bounded {
                    name: c.name.clone(),
                    role: c.role,
                    terms,
                    lower,
                    upper,
                });
            }
        }
    }
    if let Some(b) = bounded.iter().find(|b| b.lower > b.upper) {
        return Err(Error::config(format!(
            "constraint {} has an empty range [{}, {}]",
            b.name, b.lower, b.upper
        )));
    }

    // Variables: kept binaries of the ILP, then k bits, then slack bits.
    let mut vars = Vec::new();
    let mut ilp_to_qubo: Vec<Option<usize>> = vec![None; model.num_vars()];
    for (v, &kind) in model.variables.iter().enumerate() {
        if kind != VarKind::K && keep(v) {
            ilp_to_qubo[v] = Some(vars.len());
            vars.push(QuboVar::Decision(kind));
        }
    }
    let k_bits: Vec<(usize, i64)> = if model.var_index(VarKind::K).is_some() {
        encoding_weights(model.max_literals as i64)
            .into_iter()
            .map(|w| {
                vars.push(QuboVar::KBit { weight: w });
                (vars.len() - 1, w)
            })
            .collect()
    } else {
        Vec::new()
    };

    let n_rows = model
        .variables
        .iter()
        .filter(|v| v.is_eta())
        .count();
    let l2 = penalties
        .l2
        .unwrap_or(100.0 * penalties.l1 * model.weights.max() * n_rows as f64);

    let mut out_penalties = Vec::with_capacity(bounded.len());
    for b in bounded {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for &(v, c) in &b.terms {
            match ilp_to_qubo[v] {
                Some(q) => terms.push((q, c as f64)),
                None => terms.extend(k_bits.iter().map(|&(q, w)| (q, (c * w) as f64))),
            }
        }
        let (side, bound) = if b.lower == b.upper {
            (SlackSide::Equality, b.lower)
        } else if b.lower.abs() <= b.upper.abs() {
            (SlackSide::Lower, b.lower)
        } else {
            (SlackSide::Upper, b.upper)
        };
        let penalty_index = out_penalties.len();
        // Lower side: aᵀx - l - s; upper side: aᵀx - u + s.
        let slack_sign = match side {
            SlackSide::Lower => -1.0,
            _ => 1.0,
        };
        if side != SlackSide::Equality {
            for w in encoding_weights(b.upper - b.lower) {
                vars.push(QuboVar::SlackBit {
                    penalty: penalty_index,
                    weight: w,
                });
                terms.push((vars.len() - 1, slack_sign * w as f64));
            }
        }
        let weight = match b.role {
            ConstraintRole::PositiveRow(_) => model.weights.positive * penalties.l1,
            ConstraintRole::NegativeRow(_) => model.weights.negative * penalties.l1,
            _ => l2,
        };
        out_penalties.push(Penalty {
            name: b.name,
            role: b.role,
            weight,
            terms,
            constant: -(bound as f64),
            lower: b.lower,
            upper: b.upper,
            side,
        });
    }

    let cost: Vec<(usize, f64)> = model
        .objective
        .iter()
        .filter_map(|&(v, c)| ilp_to_qubo[v].map(|q| (q, c)))
        .collect();

    let mut qubo = Qubo::zeros(vars.len());
    for &(q, c) in &cost {
        qubo.linear[q] += c;
    }
    for p in &out_penalties {
        // weight · (Σ a_i x_i + c)², using x_i² = x_i.
        let w = p.weight;
        qubo.offset += w * p.constant * p.constant;
        for (idx, &(i, a)) in p.terms.iter().enumerate() {
            qubo.linear[i] += w * (a * a + 2.0 * p.constant * a);
            for &(j, b) in &p.terms[idx + 1..] {
                qubo.add_coupling(i, j, 2.0 * w * a * b);
            }
        }
    }

    Ok(QuboModel {
        mode,
        operator: model.operator,
        max_literals: model.max_literals,
        vars,
        qubo,
        cost,
        penalties: out_penalties,
    })
}

impl QuboModel {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn energy(&self, bits: &[bool]) -> f64 {
        self.qubo.energy(bits)
    }

    /// The same energy computed from the objective and penalty terms
    /// directly rather than from the matrix.
    pub fn penalized_energy(&self, bits: &[bool]) -> f64 {
        let cost: f64 = self.cost.iter().filter(|t| bits[t.0]).map(|t| t.1).sum();
        cost + self.penalties.iter().map(|p| p.value(bits)).sum::<f64>()
    }

    /// Literals and `k` encoded by an assignment.
    pub fn decode_parts(&self, bits: &[bool]) -> (Vec<Literal>, usize) {
        let mut literals = Vec::new();
        let mut k = 0usize;
        for (var, &on) in self.vars.iter().zip(bits) {
            if !on {
                continue;
            }
            match *var {
                QuboVar::Decision(VarKind::Include(i)) => literals.push(Literal::positive(i)),
                QuboVar::Decision(VarKind::IncludeNegated(i)) => literals.push(Literal::negative(i)),
                QuboVar::KBit { weight } => k += weight as usize,
                _ => {}
            }
        }
        literals.sort();
        (literals, k)
    }

    /// Decodes an assignment and scores the rule on the problem's data.
    /// Infeasible assignments are flagged, not rejected.
    pub fn decode(&self, bits: &[bool], problem: &DepthOneProblem<'_>) -> DepthOneSolution {
        let (literals, k) = self.decode_parts(bits);
        problem.evaluate(Operator::new(self.operator, k), literals)
    }
}

impl QuboModel {
    /// Lowest-energy assignment that encodes the rule `(literals, k)`: the
    /// decision bits are fixed by the rule and every auxiliary bit
    /// (`eta`, `q`, slack) is chosen optimally, row by row.
    pub fn embed(&self, literals: &[Literal], k: usize) -> Vec<bool> {
        let mut bits = vec![false; self.num_vars()];
        let mut k_left = k as i64;
        let mut k_bits: Vec<(usize, i64)> = Vec::new();
        for (i, var) in self.vars.iter().enumerate() {
            match *var {
                QuboVar::Decision(VarKind::Include(f)) => bits[i] = literals.contains(&Literal::positive(f)),
                QuboVar::Decision(VarKind::IncludeNegated(f)) => bits[i] = literals.contains(&Literal::negative(f)),
                QuboVar::KBit { weight } => k_bits.push((i, weight)),
                _ => {}
            }
        }
        set_greedy(&mut bits, &mut k_bits, &mut k_left);

        // Row-local decision variables, grouped by the penalties using them.
        let is_local = |q: usize| matches!(self.vars[q], QuboVar::Decision(v) if !v.is_literal());
        let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for (pi, p) in self.penalties.iter().enumerate() {
            let mut locals: Vec<usize> = p.terms.iter().map(|t| t.0).filter(|&q| is_local(q)).collect();
            locals.sort_unstable();
            match groups.iter_mut().find(|g| g.0.iter().any(|q| locals.contains(q))) {
                Some(g) => {
                    for q in locals {
                        if !g.0.contains(&q) {
                            g.0.push(q);
                        }
                    }
                    g.1.push(pi);
                }
                None => groups.push((locals, vec![pi])),
            }
        }
        let slack_of = |pi: usize| -> Vec<(usize, i64)> {
            self.vars
                .iter()
                .enumerate()
                .filter_map(|(q, v)| match *v {
                    QuboVar::SlackBit { penalty, weight } if penalty == pi => Some((q, weight)),
                    _ => None,
                })
                .collect()
        };
        for (locals, members) in groups {
            let mut best: Option<(f64, usize)> = None;
            for mask in 0..1usize << locals.len() {
                for (j, &q) in locals.iter().enumerate() {
                    bits[q] = mask >> j & 1 == 1;
                }
                let mut e: f64 = self.cost.iter().filter(|t| locals.contains(&t.0) && bits[t.0]).map(|t| t.1).sum();
                for &pi in &members {
                    let (r, _) = self.best_slack(pi, &bits);
                    e += self.penalties[pi].weight * r * r;
                }
                if best.is_none_or(|(b, _)| e < b) {
                    best = Some((e, mask));
                }
            }
            let (_, mask) = best.expect("at least one local assignment");
            for (j, &q) in locals.iter().enumerate() {
                bits[q] = mask >> j & 1 == 1;
            }
            for &pi in &members {
                let (_, mut s) = self.best_slack(pi, &bits);
                let mut slack = slack_of(pi);
                set_greedy(&mut bits, &mut slack, &mut s);
            }
        }
        bits
    }

    /// Residual after the best slack value, and that value, for penalty
    /// `pi` given all non-slack bits.
    fn best_slack(&self, pi: usize, bits: &[bool]) -> (f64, i64) {
        let p = &self.penalties[pi];
        let r: f64 = p.constant
            + p.terms
                .iter()
                .filter(|t| bits[t.0] && !matches!(self.vars[t.0], QuboVar::SlackBit { .. }))
                .map(|t| t.1)
                .sum::<f64>();
        let range = (p.upper - p.lower) as f64;
        match p.side {
            SlackSide::Equality => (r, 0),
            // r - s with s in [0, range].
            SlackSide::Lower => {
                let s = r.clamp(0.0, range);
                (r - s, s as i64)
            }
            SlackSide::Upper => {
                let s = (-r).clamp(0.0, range);
                (r + s, s as i64)
            }
        }
    }
}

/// Sets bits of a bounded encoding (largest weight first) to represent
/// `value`.
fn set_greedy(bits: &mut [bool], weights: &mut [(usize, i64)], value: &mut i64) {
    weights.sort_by_key(|w| std::cmp::Reverse(w.1));
    for &(q, w) in weights.iter() {
        bits[q] = w <= *value;
        if bits[q] {
            *value -= w;
        }
    }
    debug_assert_eq!(*value, 0, "value outside the encodable range");
}

impl IlpModel {
    /// Decodes an ILP assignment and scores the rule on the problem's data.
    pub fn decode(&self, values: &[i64], problem: &DepthOneProblem<'_>) -> DepthOneSolution {
        let k = self.var_index(VarKind::K).map_or(0, |v| values[v].max(0) as usize);
        problem.evaluate(Operator::new(self.operator, k), self.literals_of(values))
    }
}
