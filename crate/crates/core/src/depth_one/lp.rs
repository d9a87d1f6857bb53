//! LP-format export and import of depth-one models.
//!
//! The writer emits the common CPLEX LP dialect (`Minimize`, `Subject To`,
//! `Bounds`, `Generals`, `Binaries`, `End`) that external MILP solvers
//! read. Comment lines starting with `\` carry the model metadata so the
//! reader can rebuild an identical [`IlpModel`].

use std::fmt::Write as _;

use super::ilp::{Constraint, ConstraintRole, IlpModel, Sense, VarKind};
use crate::error::{Error, Result};
use crate::formula::OperatorKind;
use crate::metrics::ClassWeights;

/// Terms per line before wrapping.
const TERMS_PER_LINE: usize = 10;

fn write_terms<T: Copy>(out: &mut String, terms: &[(usize, T)], model: &IlpModel, fmt: impl Fn(T) -> (bool, String)) {
    for (idx, &(v, c)) in terms.iter().enumerate() {
        if idx > 0 && idx % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let (negative, magnitude) = fmt(c);
        let sign = match (idx, negative) {
            (0, false) => "",
            (0, true) => "-",
            (_, false) => "+ ",
            (_, true) => "- ",
        };
        let sep = if idx == 0 { "" } else { " " };
        let gap = if magnitude.is_empty() { "" } else { " " };
        let _ = write!(out, "{sep}{sign}{magnitude}{gap}{}", model.variables[v].name());
    }
}

pub fn export_lp(model: &IlpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ exprule depth-one model");
    let _ = writeln!(out, "\\ operator {}", model.operator.name());
    let _ = writeln!(out, "\\ num_features {}", model.num_features);
    let _ = writeln!(out, "\\ max_literals {}", model.max_literals);
    let _ = writeln!(out, "\\ min_literals {}", model.min_literals);
    let _ = writeln!(out, "\\ lambda {:?}", model.lambda);
    let _ = writeln!(out, "\\ weights {:?} {:?}", model.weights.positive, model.weights.negative);
    out.push_str("Minimize\n obj: ");
    write_terms(&mut out, &model.objective, model, |c: f64| (c < 0.0, format!("{:?}", c.abs())));
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}: ", c.name);
        write_terms(&mut out, &c.terms, model, |c: i64| {
            (c < 0, if c.abs() == 1 { String::new() } else { c.abs().to_string() })
        });
        let _ = writeln!(out, " {} {}", c.sense.symbol(), c.rhs);
    }
    out.push_str("Bounds\n");
    if model.var_index(VarKind::K).is_some() {
        let _ = writeln!(out, " 0 <= k <= {}", model.max_literals);
        out.push_str("Generals\n k\n");
    }
    out.push_str("Binaries\n");
    let binaries: Vec<String> = model
        .variables
        .iter()
        .filter(|&&v| v != VarKind::K)
        .map(|v| v.name())
        .collect();
    for chunk in binaries.chunks(TERMS_PER_LINE) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
    out.push_str("End\n");
    out
}

fn lp_error(line: usize, message: impl Into<String>) -> Error {
    Error::LpFormat {
        line,
        message: message.into(),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
    End,
}

fn section_of(line: &str) -> Option<Section> {
    match line.to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" => Some(Section::Bounds),
        "generals" | "general" | "integers" => Some(Section::Generals),
        "binaries" | "binary" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

fn role_of(name: &str) -> Option<ConstraintRole> {
    match name {
        "max_literals" => return Some(ConstraintRole::MaxLiterals),
        "min_literals" => return Some(ConstraintRole::MinLiterals),
        "k_le_literals" => return Some(ConstraintRole::KBound),
        _ => {}
    }
    let (head, rest) = name.split_at(1);
    let row: usize = rest
        .strip_suffix("_lo")
        .or_else(|| rest.strip_suffix("_hi"))
        .unwrap_or(rest)
        .parse()
        .ok()?;
    match head {
        "p" => Some(ConstraintRole::PositiveRow(row)),
        "n" => Some(ConstraintRole::NegativeRow(row)),
        _ => None,
    }
}

/// Parses `sign? coef? name` terms; returns `(name, coefficient)` pairs.
fn parse_terms(tokens: &[&str], line: usize) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for &tok in tokens {
        match tok {
            "+" => sign = 1.0,
            "-" => sign = -sign,
            _ => {
                if let Ok(v) = tok.parse::<f64>() {
                    if coef.is_some() {
                        return Err(lp_error(line, format!("two coefficients in a row near `{tok}`")));
                    }
                    coef = Some(v);
                } else if let Some(rest) = tok.strip_prefix('-') {
                    sign = -sign;
                    parse_one(rest, &mut sign, &mut coef, &mut out);
                } else {
                    parse_one(tok, &mut sign, &mut coef, &mut out);
                }
            }
        }
    }
    if coef.is_some() {
        return Err(lp_error(line, "dangling coefficient"));
    }
    Ok(out)
}

fn parse_one(tok: &str, sign: &mut f64, coef: &mut Option<f64>, out: &mut Vec<(String, f64)>) {
    if let Ok(v) = tok.parse::<f64>() {
        *coef = Some(v);
        return;
    }
    out.push((tok.to_string(), *sign * coef.take().unwrap_or(1.0)));
    *sign = 1.0;
}

/// Reads a model written by [`export_lp`].
pub fn parse_lp(text: &str) -> Result<IlpModel> {
    let mut operator = None;
    let mut num_features = None;
    let mut max_literals = None;
    let mut min_literals = 0usize;
    let mut lambda = 0.0;
    let mut weights = None;

    // Gather statements per section; a statement may span lines.
    let mut section = Section::Preamble;
    let mut objective_tokens: Vec<(usize, String)> = Vec::new();
    let mut constraint_stmts: Vec<(usize, String)> = Vec::new();
    let mut bounds: Vec<(usize, String)> = Vec::new();
    let mut generals: Vec<String> = Vec::new();
    let mut binaries: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if let Some(comment) = line.strip_prefix('\\') {
            let mut parts = comment.split_whitespace();
            let key = parts.next().unwrap_or("");
            let vals: Vec<&str> = parts.collect();
            let num = |i: usize| -> Result<&str> {
                vals.get(i).copied().ok_or_else(|| lp_error(lineno, format!("missing value for {key}")))
            };
            let bad = |_| lp_error(lineno, format!("invalid value for {key}"));
            match key {
                "operator" => {
                    operator = Some(
                        OperatorKind::from_name(num(0)?)
                            .ok_or_else(|| lp_error(lineno, "unknown operator"))?,
                    )
                }
                "num_features" => num_features = Some(num(0)?.parse().map_err(bad)?),
                "max_literals" => max_literals = Some(num(0)?.parse().map_err(bad)?),
                "min_literals" => min_literals = num(0)?.parse().map_err(bad)?,
                "lambda" => lambda = num(0)?.parse().map_err(|_| lp_error(lineno, "invalid lambda"))?,
                "weights" => {
                    let p = num(0)?.parse().map_err(|_| lp_error(lineno, "invalid weight"))?;
                    let n = num(1)?.parse().map_err(|_| lp_error(lineno, "invalid weight"))?;
                    weights = Some(ClassWeights { positive: p, negative: n });
                }
                _ => {}
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if let Some(s) = section_of(line) {
            section = s;
            continue;
        }
        match section {
            Section::Preamble => return Err(lp_error(lineno, "content before the Minimize section")),
            Section::Objective => objective_tokens.push((lineno, line.to_string())),
            Section::Constraints => {
                let starts_new = line.split_whitespace().next().is_some_and(|t| t.ends_with(':'));
                match constraint_stmts.last_mut() {
                    Some(last) if !starts_new => {
                        last.1.push(' ');
                        last.1.push_str(line);
                    }
                    _ if starts_new => constraint_stmts.push((lineno, line.to_string())),
                    _ => return Err(lp_error(lineno, "constraint without a name")),
                }
            }
            Section::Bounds => bounds.push((lineno, line.to_string())),
            Section::Generals => generals.extend(line.split_whitespace().map(String::from)),
            Section::Binaries => binaries.extend(line.split_whitespace().map(String::from)),
            Section::End => return Err(lp_error(lineno, "content after End")),
        }
    }

    let operator = operator.ok_or_else(|| lp_error(0, "missing `\\ operator` comment"))?;
    let num_features = num_features.ok_or_else(|| lp_error(0, "missing `\\ num_features` comment"))?;
    let max_literals = max_literals.ok_or_else(|| lp_error(0, "missing `\\ max_literals` comment"))?;
    let weights = weights.ok_or_else(|| lp_error(0, "missing `\\ weights` comment"))?;

    let mut variables = Vec::new();
    for name in binaries.iter().chain(&generals) {
        let kind = VarKind::from_name(name).ok_or_else(|| lp_error(0, format!("unknown variable `{name}`")))?;
        variables.push(kind);
    }
    let index = |name: &str, line: usize| -> Result<usize> {
        let kind = VarKind::from_name(name).ok_or_else(|| lp_error(line, format!("unknown variable `{name}`")))?;
        variables
            .iter()
            .position(|&v| v == kind)
            .ok_or_else(|| lp_error(line, format!("variable `{name}` is not declared")))
    };

    let objective_line = objective_tokens.first().map_or(0, |t| t.0);
    let joined: String = objective_tokens.iter().map(|t| t.1.as_str()).collect::<Vec<_>>().join(" ");
    let body = joined.split_once(':').map_or(joined.as_str(), |(_, b)| b);
    let tokens: Vec<&str> = body.split_whitespace().collect();
    let mut objective = Vec::new();
    for (name, c) in parse_terms(&tokens, objective_line)? {
        objective.push((index(&name, objective_line)?, c));
    }

    let mut constraints = Vec::new();
    for (lineno, stmt) in constraint_stmts {
        let (name, body) = stmt.split_once(':').expect("statement starts with a name");
        let name = name.trim().to_string();
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let pos = tokens
            .iter()
            .position(|t| matches!(*t, "<=" | ">=" | "=" | "=<" | "=>"))
            .ok_or_else(|| lp_error(lineno, "constraint has no sense"))?;
        let sense = match tokens[pos] {
            "<=" | "=<" => Sense::Le,
            ">=" | "=>" => Sense::Ge,
            _ => Sense::Eq,
        };
        let rhs_tokens = &tokens[pos + 1..];
        let rhs: i64 = match rhs_tokens {
            [v] => v.parse().map_err(|_| lp_error(lineno, format!("non-integer right-hand side `{v}`")))?,
            _ => return Err(lp_error(lineno, "expected a single right-hand side value")),
        };
        let mut terms = Vec::new();
        for (var, c) in parse_terms(&tokens[..pos], lineno)? {
            if c.fract() != 0.0 {
                return Err(lp_error(lineno, format!("non-integer coefficient {c}")));
            }
            terms.push((index(&var, lineno)?, c as i64));
        }
        let role = role_of(&name).ok_or_else(|| lp_error(lineno, format!("unrecognized constraint name `{name}`")))?;
        constraints.push(Constraint {
            name,
            role,
            terms,
            sense,
            rhs,
        });
    }
    for (lineno, b) in bounds {
        let parts: Vec<&str> = b.split_whitespace().collect();
        match parts.as_slice() {
            ["0", "<=", "k", "<=", ub] if ub.parse() == Ok(max_literals) => {}
            _ => return Err(lp_error(lineno, format!("unsupported bound `{b}`"))),
        }
    }

    Ok(IlpModel {
        operator,
        num_features,
        max_literals,
        min_literals,
        lambda,
        weights,
        variables,
        constraints,
        objective,
    })
}
