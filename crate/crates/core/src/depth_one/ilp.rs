//! Integer linear programs whose optima are the best depth-one rules.
//!
//! Notation: for a data row, `t` counts the included literals that are true
//! (coefficient `x_i` on `b_i`, `1 - x_i` on `nb_i`), `L = Σb + Σnb` is the
//! literal count, `M` is the literal cap and `k` the operator parameter.
//! Error indicators `etaP_r`/`etaN_r` switch off the constraint of a
//! misclassified row through a big-M term.
//!
//! * Or: positive rows `t + etaP >= 1`, negative rows `t - M etaN <= 0`.
//! * And: the same with `t` replaced by the false-literal count, classes
//!   swapped (De Morgan).
//! * AtLeast: `t - k + M etaP >= 0`, `t - k - (M+1) etaN <= -1`.
//! * AtMost: `t - k - M etaP <= 0`, `t - k + (M+1) etaN >= 1`.
//! * Choose: both positive-row constraints of AtLeast and AtMost, and an
//!   either-or pair on negative rows: `q_r = 0` demands `t <= k - 1`,
//!   `q_r = 1` demands `t >= k + 1`.
//!
//! Every model also has `L <= M`; parameterized models have `k <= L`, and an
//! optional `L >= min_literals`.

use serde::{Deserialize, Serialize};

use crate::bits::{BitMatrix, BitVector};
use crate::error::{Error, Result};
use crate::formula::{Literal, OperatorKind};
use crate::metrics::ClassWeights;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarKind {
    /// `b_i`: feature `i` included.
    Include(usize),
    /// `nb_i`: negated feature `i` included.
    IncludeNegated(usize),
    /// Error indicator of the `r`-th positive row.
    EtaP(usize),
    /// Error indicator of the `r`-th negative row.
    EtaN(usize),
    /// Either-or selector of the `r`-th negative row (Choose only).
    Q(usize),
    /// The operator parameter, an integer in `0..=max_literals`.
    K,
}

impl VarKind {
    pub fn name(self) -> String {
        match self {
            VarKind::Include(i) => format!("b_{i}"),
            VarKind::IncludeNegated(i) => format!("nb_{i}"),
            VarKind::EtaP(r) => format!("etaP_{r}"),
            VarKind::EtaN(r) => format!("etaN_{r}"),
            VarKind::Q(r) => format!("q_{r}"),
            VarKind::K => "k".to_string(),
        }
    }

    pub fn from_name(name: &str) -> Option<VarKind> {
        if name == "k" {
            return Some(VarKind::K);
        }
        let (prefix, idx) = name.rsplit_once('_')?;
        let idx: usize = idx.parse().ok()?;
        Some(match prefix {
            "b" => VarKind::Include(idx),
            "nb" => VarKind::IncludeNegated(idx),
            "etaP" => VarKind::EtaP(idx),
            "etaN" => VarKind::EtaN(idx),
            "q" => VarKind::Q(idx),
            _ => return None,
        })
    }

    pub fn is_literal(self) -> bool {
        matches!(self, VarKind::Include(_) | VarKind::IncludeNegated(_))
    }

    pub fn is_eta(self) -> bool {
        matches!(self, VarKind::EtaP(_) | VarKind::EtaN(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }

    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Sense::Le => lhs <= rhs,
            Sense::Ge => lhs >= rhs,
            Sense::Eq => lhs == rhs,
        }
    }
}

/// What a constraint is for; determines its penalty weight in a QUBO.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintRole {
    /// Sample constraint of the `r`-th positive row.
    PositiveRow(usize),
    /// Sample constraint of the `r`-th negative row.
    NegativeRow(usize),
    MaxLiterals,
    MinLiterals,
    /// `k <= L`.
    KBound,
}

impl ConstraintRole {
    pub fn is_sample(self) -> bool {
        matches!(self, ConstraintRole::PositiveRow(_) | ConstraintRole::NegativeRow(_))
    }
}

/// `Σ coef * var  sense  rhs`, with integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub role: ConstraintRole,
    pub terms: Vec<(usize, i64)>,
    pub sense: Sense,
    pub rhs: i64,
}

impl Constraint {
    pub fn lhs(&self, values: &[i64]) -> i64 {
        self.terms.iter().map(|&(v, c)| c * values[v]).sum()
    }

    pub fn is_satisfied(&self, values: &[i64]) -> bool {
        self.sense.holds(self.lhs(values), self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IlpModel {
    pub operator: OperatorKind,
    pub num_features: usize,
    pub max_literals: usize,
    pub min_literals: usize,
    pub lambda: f64,
    pub weights: ClassWeights,
    pub variables: Vec<VarKind>,
    pub constraints: Vec<Constraint>,
    /// Linear objective to minimize; zero coefficients are omitted.
    pub objective: Vec<(usize, f64)>,
}

impl IlpModel {
    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var_index(&self, kind: VarKind) -> Option<usize> {
        self.variables.iter().position(|&v| v == kind)
    }

    /// Upper bound of each variable (1 for binaries, `max_literals` for k).
    pub fn upper_bound(&self, var: usize) -> i64 {
        match self.variables[var] {
            VarKind::K => self.max_literals as i64,
            _ => 1,
        }
    }

    pub fn objective_value(&self, values: &[i64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * values[v] as f64).sum()
    }

    pub fn is_feasible(&self, values: &[i64]) -> bool {
        values.len() == self.variables.len()
            && values
                .iter()
                .enumerate()
                .all(|(v, &x)| (0..=self.upper_bound(v)).contains(&x))
            && self.constraints.iter().all(|c| c.is_satisfied(values))
    }

    /// Included literals of an assignment, in feature order; a feature
    /// with both `b_i` and `nb_i` set contributes both.
    pub fn literals_of(&self, values: &[i64]) -> Vec<Literal> {
        let mut out: Vec<Literal> = self
            .variables
            .iter()
            .zip(values)
            .filter(|(_, &x)| x == 1)
            .filter_map(|(v, _)| match *v {
                VarKind::Include(i) => Some(Literal::positive(i)),
                VarKind::IncludeNegated(i) => Some(Literal::negative(i)),
                _ => None,
            })
            .collect();
        out.sort();
        out
    }
}

/// Builds the depth-one ILP for `operator` on `(x, y)`.
pub fn build_ilp(
    x: &BitMatrix,
    y: &BitVector,
    operator: OperatorKind,
    max_literals: usize,
    lambda: f64,
    weights: ClassWeights,
    min_literals: usize,
) -> Result<IlpModel> {
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    let n_pos = y.count_ones();
    if n_pos == 0 || n_pos == y.len() {
        return Err(Error::SingleClass);
    }
    if max_literals == 0 {
        return Err(Error::config("max_literals must be at least 1"));
    }
    if min_literals > max_literals {
        return Err(Error::config(format!(
            "min_literals {min_literals} exceeds max_literals {max_literals}"
        )));
    }
    let m = x.cols();
    let big_m = max_literals as i64;
    let positives: Vec<usize> = y.ones_indices();
    let negatives: Vec<usize> = (0..y.len()).filter(|&i| !y.get(i)).collect();
    let parameterized = operator.is_parameterized();

    let mut variables: Vec<VarKind> = (0..m).map(VarKind::Include).collect();
    variables.extend((0..m).map(VarKind::IncludeNegated));
    variables.extend((0..positives.len()).map(VarKind::EtaP));
    variables.extend((0..negatives.len()).map(VarKind::EtaN));
    if operator == OperatorKind::Choose {
        variables.extend((0..negatives.len()).map(VarKind::Q));
    }
    if parameterized {
        variables.push(VarKind::K);
    }
    let b = |i: usize| i;
    let nb = |i: usize| m + i;
    let eta_p = |r: usize| 2 * m + r;
    let eta_n = |r: usize| 2 * m + positives.len() + r;
    let q = |r: usize| 2 * m + y.len() + r;
    let k = variables.len() - 1;

    // Literal block of a row: count of true literals, or of false literals
    // for And.
    let block = |row: usize| -> Vec<(usize, i64)> {
        let count_false = operator == OperatorKind::And;
        (0..m)
            .map(|i| if x.get(row, i) != count_false { (b(i), 1) } else { (nb(i), 1) })
            .collect()
    };
    let with = |mut terms: Vec<(usize, i64)>, extra: &[(usize, i64)]| {
        terms.extend_from_slice(extra);
        terms
    };

    let mut constraints = Vec::new();
    let mut push = |name: String, role, terms, sense, rhs| {
        constraints.push(Constraint {
            name,
            role,
            terms,
            sense,
            rhs,
        })
    };
    for (r, &row) in positives.iter().enumerate() {
        let t = block(row);
        let role = ConstraintRole::PositiveRow(r);
        let e = eta_p(r);
        match operator {
            OperatorKind::Or => push(format!("p{r}"), role, with(t, &[(e, 1)]), Sense::Ge, 1),
            OperatorKind::And => push(format!("p{r}"), role, with(t, &[(e, -big_m)]), Sense::Le, 0),
            OperatorKind::AtLeast => {
                push(format!("p{r}"), role, with(t, &[(k, -1), (e, big_m)]), Sense::Ge, 0)
            }
            OperatorKind::AtMost => {
                push(format!("p{r}"), role, with(t, &[(k, -1), (e, -big_m)]), Sense::Le, 0)
            }
            OperatorKind::Choose => {
                push(format!("p{r}_lo"), role, with(t.clone(), &[(k, -1), (e, big_m)]), Sense::Ge, 0);
                push(format!("p{r}_hi"), role, with(t, &[(k, -1), (e, -big_m)]), Sense::Le, 0);
            }
        }
    }
    for (r, &row) in negatives.iter().enumerate() {
        let t = block(row);
        let role = ConstraintRole::NegativeRow(r);
        let e = eta_n(r);
        let m1 = big_m + 1;
        match operator {
            OperatorKind::Or => push(format!("n{r}"), role, with(t, &[(e, -big_m)]), Sense::Le, 0),
            OperatorKind::And => push(format!("n{r}"), role, with(t, &[(e, 1)]), Sense::Ge, 1),
            OperatorKind::AtLeast => {
                push(format!("n{r}"), role, with(t, &[(k, -1), (e, -m1)]), Sense::Le, -1)
            }
            OperatorKind::AtMost => {
                push(format!("n{r}"), role, with(t, &[(k, -1), (e, m1)]), Sense::Ge, 1)
            }
            OperatorKind::Choose => {
                // q = 0 enforces t <= k - 1 (the AtLeast row); q = 1
                // enforces t >= k + 1 (the AtMost row).
                push(
                    format!("n{r}_lo"),
                    role,
                    with(t.clone(), &[(k, -1), (e, m1), (q(r), -m1)]),
                    Sense::Ge,
                    -big_m,
                );
                push(
                    format!("n{r}_hi"),
                    role,
                    with(t, &[(k, -1), (e, -m1), (q(r), -m1)]),
                    Sense::Le,
                    -1,
                );
            }
        }
    }
    let all_literals: Vec<(usize, i64)> = (0..2 * m).map(|v| (v, 1)).collect();
    push(
        "max_literals".into(),
        ConstraintRole::MaxLiterals,
        all_literals.clone(),
        Sense::Le,
        big_m,
    );
    if parameterized {
        let terms = std::iter::once((k, 1)).chain((0..2 * m).map(|v| (v, -1))).collect();
        push("k_le_literals".into(), ConstraintRole::KBound, terms, Sense::Le, 0);
    }
    if min_literals > 0 {
        push(
            "min_literals".into(),
            ConstraintRole::MinLiterals,
            all_literals,
            Sense::Ge,
            min_literals as i64,
        );
    }

    let mut objective = Vec::new();
    for r in 0..positives.len() {
        objective.push((eta_p(r), weights.positive));
    }
    for r in 0..negatives.len() {
        objective.push((eta_n(r), weights.negative));
    }
    if lambda != 0.0 {
        objective.extend((0..2 * m).map(|v| (v, lambda)));
    }
    objective.sort_by_key(|&(v, _)| v);

    Ok(IlpModel {
        operator,
        num_features: m,
        max_literals,
        min_literals,
        lambda,
        weights,
        variables,
        constraints,
        objective,
    })
}

/// Optimal objective and an optimal assignment of `model`, found by
/// enumerating every literal selection with at most `max_literals` literals
/// and every `k`, and choosing the cheapest feasible values of the
/// row-local variables (`eta`, `q`) separately per row. Exponential in the
/// number of features; meant as a reference on tiny models.
pub fn solve_ilp_exhaustive(model: &IlpModel) -> Option<(f64, Vec<i64>)> {
    let nv = model.num_vars();
    let literal_vars: Vec<usize> = (0..nv).filter(|&v| model.variables[v].is_literal()).collect();
    let k_var = model.var_index(VarKind::K);
    let is_local = |v: usize| matches!(model.variables[v], VarKind::EtaP(_) | VarKind::EtaN(_) | VarKind::Q(_));

    // Group constraints by the row-local variables they mention.
    let mut groups: Vec<(Vec<usize>, Vec<&Constraint>)> = Vec::new();
    let mut global: Vec<&Constraint> = Vec::new();
    for c in &model.constraints {
        let mut locals: Vec<usize> = c.terms.iter().map(|&(v, _)| v).filter(|&v| is_local(v)).collect();
        locals.sort_unstable();
        if locals.is_empty() {
            global.push(c);
        } else if let Some(g) = groups.iter_mut().find(|g| g.0.iter().any(|v| locals.contains(v))) {
            for v in locals {
                if !g.0.contains(&v) {
                    g.0.push(v);
                }
            }
            g.1.push(c);
        } else {
            groups.push((locals, vec![c]));
        }
    }
    let cost = |v: usize| -> f64 {
        model
            .objective
            .iter()
            .find(|&&(w, _)| w == v)
            .map_or(0.0, |&(_, c)| c)
    };

    let k_max = if k_var.is_some() { model.max_literals as i64 } else { 0 };
    let mut best: Option<(f64, Vec<i64>)> = None;
    let mut values = vec![0i64; nv];
    let mut selection: Vec<usize> = Vec::new();
    // Enumerate subsets of literal variables of size <= max_literals.
    fn subsets(n: usize, max: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        f(cur);
        if cur.len() == max {
            return;
        }
        for i in start..n {
            cur.push(i);
            subsets(n, max, i + 1, cur, f);
            cur.pop();
        }
    }
    subsets(literal_vars.len(), model.max_literals, 0, &mut selection, &mut |sel: &[usize]| {
        for v in values.iter_mut() {
            *v = 0;
        }
        for &s in sel {
            values[literal_vars[s]] = 1;
        }
        for kv in 0..=k_max {
            if let Some(kv_idx) = k_var {
                values[kv_idx] = kv;
            }
            if !global.iter().all(|c| c.is_satisfied(&values)) {
                continue;
            }
            let mut total: f64 = sel.iter().map(|&s| cost(literal_vars[s])).sum();
            let mut feasible = true;
            for (locals, cons) in &groups {
                let mut group_best: Option<(f64, usize)> = None;
                for mask in 0..(1usize << locals.len()) {
                    for (j, &v) in locals.iter().enumerate() {
                        values[v] = (mask >> j & 1) as i64;
                    }
                    if cons.iter().all(|c| c.is_satisfied(&values)) {
                        let c: f64 = locals.iter().filter(|&&v| values[v] == 1).map(|&v| cost(v)).sum();
                        if group_best.is_none_or(|(b, _)| c < b) {
                            group_best = Some((c, mask));
                        }
                    }
                }
                match group_best {
                    Some((c, mask)) => {
                        total += c;
                        for (j, &v) in locals.iter().enumerate() {
                            values[v] = (mask >> j & 1) as i64;
                        }
                    }
                    None => {
                        feasible = false;
                        break;
                    }
                }
            }
            if feasible && best.as_ref().is_none_or(|(b, _)| total < *b - 1e-12) {
                best = Some((total, values.clone()));
            }
        }
    });
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(rows: &[&[u8]], labels: &[u8]) -> (BitMatrix, BitVector) {
        let x = BitMatrix::from_rows(
            &rows
                .iter()
                .map(|r| r.iter().map(|&b| b == 1).collect())
                .collect::<Vec<_>>(),
        );
        let y = BitVector::from_bools(&labels.iter().map(|&b| b == 1).collect::<Vec<_>>());
        (x, y)
    }

    #[test]
    fn or_single_positive_row() {
        let (x, y) = data(&[&[1, 0], &[0, 1]], &[1, 0]);
        let model = build_ilp(&x, &y, OperatorKind::Or, 2, 0.0, ClassWeights::UNIT, 0).unwrap();
        let mut values = vec![0; model.num_vars()];
        values[model.var_index(VarKind::Include(0)).unwrap()] = 1;
        assert!(model.is_feasible(&values));
        assert_eq!(model.objective_value(&values), 0.0);
        assert_eq!(model.constraints.len(), 3);
    }

    #[test]
    fn row_counts() {
        let (x, y) = data(&[&[1, 0], &[0, 1], &[1, 1]], &[1, 0, 0]);
        let w = ClassWeights::balanced(&y).unwrap();
        for (op, rows) in [
            (OperatorKind::Or, 4),
            (OperatorKind::And, 4),
            (OperatorKind::AtLeast, 5),
            (OperatorKind::AtMost, 5),
            (OperatorKind::Choose, 8),
        ] {
            let m = build_ilp(&x, &y, op, 2, 0.1, w, 0).unwrap();
            assert_eq!(m.constraints.len(), rows, "{op}");
            let m = build_ilp(&x, &y, op, 2, 0.1, w, 1).unwrap();
            assert_eq!(m.constraints.len(), rows + 1, "{op}");
        }
    }

    #[test]
    fn and_is_or_with_roles_swapped() {
        // And equals Or with the classes swapped, up to renaming b <-> nb
        // and etaP <-> etaN.
        let (x, y) = data(&[&[1, 0, 1], &[0, 1, 1], &[1, 1, 0], &[0, 0, 0]], &[1, 0, 1, 0]);
        let and = build_ilp(&x, &y, OperatorKind::And, 2, 0.0, ClassWeights::UNIT, 0).unwrap();
        let or = build_ilp(&x, &y.not(), OperatorKind::Or, 2, 0.0, ClassWeights::UNIT, 0).unwrap();
        let rename = |v: VarKind| match v {
            VarKind::Include(i) => VarKind::IncludeNegated(i),
            VarKind::IncludeNegated(i) => VarKind::Include(i),
            VarKind::EtaP(r) => VarKind::EtaN(r),
            VarKind::EtaN(r) => VarKind::EtaP(r),
            other => other,
        };
        let canon = |m: &IlpModel, f: &dyn Fn(VarKind) -> VarKind| {
            let mut cs: Vec<_> = m
                .constraints
                .iter()
                .map(|c| {
                    let mut t: Vec<_> = c.terms.iter().map(|&(v, k)| (f(m.variables[v]), k)).collect();
                    t.sort();
                    (t, c.sense, c.rhs)
                })
                .collect();
            cs.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
            cs
        };
        assert_eq!(canon(&and, &|v| v), canon(&or, &rename));
    }

    #[test]
    fn choose_selector_reduces_to_atleast_and_atmost() {
        let (x, y) = data(&[&[1, 0, 1], &[0, 1, 1], &[1, 1, 0], &[0, 0, 1]], &[1, 0, 1, 0]);
        let w = ClassWeights::UNIT;
        let choose = build_ilp(&x, &y, OperatorKind::Choose, 3, 0.0, w, 0).unwrap();
        let atleast = build_ilp(&x, &y, OperatorKind::AtLeast, 3, 0.0, w, 0).unwrap();
        let atmost = build_ilp(&x, &y, OperatorKind::AtMost, 3, 0.0, w, 0).unwrap();
        let q0 = choose.var_index(VarKind::Q(0)).unwrap();
        // For every literal choice and k, with eta = 0 and q fixed, the
        // Choose negative-row constraint holds iff the AtLeast (q = 0) or
        // AtMost (q = 1) one does.
        for lits in 0u32..64 {
            for kv in 0..=3 {
                let mut vals = vec![0i64; choose.num_vars()];
                for (v, val) in vals.iter_mut().take(6).enumerate() {
                    *val = (lits >> v & 1) as i64;
                }
                vals[choose.var_index(VarKind::K).unwrap()] = kv;
                let mut al = vec![0i64; atleast.num_vars()];
                al[..6].copy_from_slice(&vals[..6]);
                al[atleast.var_index(VarKind::K).unwrap()] = kv;
                let neg = |m: &IlpModel, vals: &[i64]| {
                    m.constraints
                        .iter()
                        .filter(|c| c.role == ConstraintRole::NegativeRow(0))
                        .all(|c| c.is_satisfied(vals))
                };
                vals[q0] = 0;
                assert_eq!(neg(&choose, &vals), neg(&atleast, &al));
                vals[q0] = 1;
                assert_eq!(neg(&choose, &vals), neg(&atmost, &al));
            }
        }
    }

    #[test]
    fn exhaustive_solver_finds_perfect_or() {
        let (x, y) = data(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[0, 0, 0]], &[1, 1, 0, 0]);
        let model = build_ilp(&x, &y, OperatorKind::Or, 2, 0.01, ClassWeights::balanced(&y).unwrap(), 0).unwrap();
        let (obj, vals) = solve_ilp_exhaustive(&model).unwrap();
        assert!((obj - 0.02).abs() < 1e-12);
        assert_eq!(model.literals_of(&vals), vec![Literal::positive(0), Literal::positive(1)]);
        assert!(model.is_feasible(&vals));
    }

    #[test]
    fn rejects_bad_inputs() {
        let (x, y) = data(&[&[1, 0], &[0, 1]], &[1, 1]);
        assert!(build_ilp(&x, &y, OperatorKind::Or, 2, 0.0, ClassWeights::UNIT, 0).is_err());
        let (x, y) = data(&[&[1, 0], &[0, 1]], &[1, 0]);
        assert!(build_ilp(&x, &y, OperatorKind::Or, 1, 0.0, ClassWeights::UNIT, 2).is_err());
    }
}
