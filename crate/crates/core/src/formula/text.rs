//! Text form of formulas, e.g. `And(Choose2(a,b,c,d),~e,f)`.
//!
//! Grammar: `Name | ~Name | [~]Op(args...)` where `Op` is `And`, `Or`,
//! `AtLeastK`, `AtMostK` or `ChooseK`, plus the constants `One()` and
//! `Zero()`. A name is any run of characters other than `,`, `(` and `)`,
//! trimmed of surrounding whitespace, so binarized names such as
//! `worst area > 719.6364` are legal.

use super::{Formula, Literal, Node, Operator, OperatorKind, OperatorNode};
use crate::error::{Error, Result};

/// How feature indices map to names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum FeatureNames {
    /// `f0`, `f1`, ...
    #[default]
    Default,
    Named(Vec<String>),
}

impl FeatureNames {
    pub fn name(&self, index: usize) -> String {
        match self {
            FeatureNames::Named(names) if index < names.len() => names[index].clone(),
            _ => format!("f{index}"),
        }
    }

    pub fn resolve(&self, name: &str) -> Option<usize> {
        match self {
            FeatureNames::Default => name.strip_prefix('f')?.parse().ok(),
            FeatureNames::Named(names) => names.iter().position(|n| n == name),
        }
    }
}

pub(super) fn node_text(node: &Node, names: &FeatureNames) -> String {
    let mut out = String::new();
    write_node(node, names, &mut out);
    out
}

fn write_node(node: &Node, names: &FeatureNames, out: &mut String) {
    match node {
        Node::Constant(true) => out.push_str("One()"),
        Node::Constant(false) => out.push_str("Zero()"),
        Node::Literal(l) => {
            if l.negated {
                out.push('~');
            }
            out.push_str(&names.name(l.feature));
        }
        Node::Operator(o) => {
            if o.negated {
                out.push('~');
            }
            out.push_str(&o.op.to_string());
            out.push('(');
            for (i, c) in o.children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_node(c, names, out);
            }
            out.push(')');
        }
    }
}

impl Formula {
    /// Canonical text; children appear in canonical order.
    pub fn to_text(&self, names: &FeatureNames) -> String {
        node_text(&self.root().canonical(), names)
    }

    /// Parses a formula whose literal names resolve through `names`.
    pub fn parse(text: &str, names: &FeatureNames) -> Result<Formula> {
        let mut p = Parser {
            src: text,
            pos: 0,
            resolve: |name: &str| names.resolve(name),
        };
        p.parse_all()
    }

    /// Parses a formula, assigning feature indices to names in order of
    /// first appearance. Returns the formula and the discovered names.
    pub fn parse_auto(text: &str) -> Result<(Formula, Vec<String>)> {
        let mut names: Vec<String> = Vec::new();
        let formula = {
            let mut p = Parser {
                src: text,
                pos: 0,
                resolve: |name: &str| {
                    Some(match names.iter().position(|n| n == name) {
                        Some(i) => i,
                        None => {
                            names.push(name.to_string());
                            names.len() - 1
                        }
                    })
                },
            };
            p.parse_all()?
        };
        Ok((formula, names))
    }
}

struct Parser<'a, F> {
    src: &'a str,
    pos: usize,
    resolve: F,
}

impl<F: FnMut(&str) -> Option<usize>> Parser<'_, F> {
    fn parse_all(&mut self) -> Result<Formula> {
        let node = self.parse_expr()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(Formula::new(node))
    }

    fn parse_expr(&mut self) -> Result<Node> {
        self.skip_ws();
        let negated = if self.peek() == Some('~') {
            self.pos += 1;
            true
        } else {
            false
        };
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if matches!(c, ',' | '(' | ')') {
                break;
            }
            self.pos += c.len_utf8();
        }
        let token = self.src[start..self.pos].trim();
        if token.is_empty() {
            return Err(self.error_at(start, "expected a name or an operator"));
        }
        if self.peek() == Some('(') {
            self.pos += 1;
            let head = parse_operator_head(token).ok_or_else(|| {
                self.error_at(start, &format!("unknown operator `{token}`"))
            })?;
            let children = self.parse_args()?;
            match head {
                Head::Constant(value) => {
                    if !children.is_empty() {
                        return Err(self.error_at(start, &format!("`{token}` takes no arguments")));
                    }
                    Ok(Node::Constant(value != negated))
                }
                Head::Operator(op) => {
                    let n = children.len();
                    if n < 2 {
                        return Err(Error::TooFewChildren {
                            operator: op.to_string(),
                            children: n,
                        });
                    }
                    if !op.is_valid_for(n) {
                        return Err(Error::ParameterOutOfRange {
                            operator: op.kind().to_string(),
                            k: op.k().unwrap_or(0),
                            children: n,
                        });
                    }
                    Ok(Node::Operator(OperatorNode {
                        op,
                        negated,
                        children,
                    }))
                }
            }
        } else {
            let feature = (self.resolve)(token)
                .ok_or_else(|| self.error_at(start, &format!("unknown feature name `{token}`")))?;
            Ok(Node::Literal(Literal::new(feature, negated)))
        }
    }

    /// Arguments after an opening parenthesis, through the closing one.
    fn parse_args(&mut self) -> Result<Vec<Node>> {
        let mut children = Vec::new();
        self.skip_ws();
        if self.peek() == Some(')') {
            self.pos += 1;
            return Ok(children);
        }
        loop {
            children.push(self.parse_expr()?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(')') => {
                    self.pos += 1;
                    return Ok(children);
                }
                Some(c) => return Err(self.error(&format!("expected `,` or `)`, found `{c}`"))),
                None => return Err(self.error("unclosed `(`")),
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn error(&self, message: &str) -> Error {
        self.error_at(self.pos, message)
    }

    fn error_at(&self, position: usize, message: &str) -> Error {
        Error::Parse {
            position,
            message: message.to_string(),
        }
    }
}

enum Head {
    Operator(Operator),
    Constant(bool),
}

fn parse_operator_head(token: &str) -> Option<Head> {
    match token {
        "And" => return Some(Head::Operator(Operator::And)),
        "Or" => return Some(Head::Operator(Operator::Or)),
        "One" => return Some(Head::Constant(true)),
        "Zero" => return Some(Head::Constant(false)),
        _ => {}
    }
    for kind in [OperatorKind::AtLeast, OperatorKind::AtMost, OperatorKind::Choose] {
        if let Some(digits) = token.strip_prefix(kind.name()) {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                return digits.parse().ok().map(|k| Head::Operator(Operator::new(kind, k)));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::super::tests::{arb_node, example_rule};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_parameterized() {
        let f = Formula::parse("AtLeast2(f0,f1,f2)", &FeatureNames::Default).unwrap();
        match f.root() {
            Node::Operator(o) => {
                assert_eq!(o.op, Operator::AtLeast(2));
                assert_eq!(o.children.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn example_notation_round_trips() {
        let text = "And(Choose2(a,b,c,d),~e,f)";
        let (f, names) = Formula::parse_auto(text).unwrap();
        assert_eq!(names, ["a", "b", "c", "d", "e", "f"]);
        assert_eq!(f, example_rule());
        assert_eq!(f.to_text(&FeatureNames::Named(names)), text);
    }

    #[test]
    fn parameter_out_of_range() {
        let err = Formula::parse("Choose5(f0,f1)", &FeatureNames::Default).unwrap_err();
        assert!(matches!(err, Error::ParameterOutOfRange { k: 5, children: 2, .. }));
    }

    #[test]
    fn too_few_arguments() {
        let err = Formula::parse("Or(f0)", &FeatureNames::Default).unwrap_err();
        assert!(matches!(err, Error::TooFewChildren { children: 1, .. }));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = Formula::parse("And(f0,f1", &FeatureNames::Default).unwrap_err();
        assert!(matches!(err, Error::Parse { position: 9, .. }), "{err}");
        let err = Formula::parse("And(f0,,f1)", &FeatureNames::Default).unwrap_err();
        assert!(matches!(err, Error::Parse { position: 7, .. }), "{err}");
        assert!(Formula::parse("Xor(f0,f1)", &FeatureNames::Default).is_err());
        assert!(Formula::parse("AtLeast(f0,f1)", &FeatureNames::Default).is_err());
        assert!(Formula::parse("And(f0,f1) f2", &FeatureNames::Default).is_err());
    }

    #[test]
    fn names_with_spaces_and_constants() {
        let names = FeatureNames::Named(vec![
            "worst concave points > 0.1563".into(),
            "worst area > 988.6818".into(),
        ]);
        let text = "~Or(worst concave points > 0.1563, worst area > 988.6818)";
        let f = Formula::parse(text, &names).unwrap();
        assert_eq!(
            f.to_text(&names),
            "~Or(worst concave points > 0.1563,worst area > 988.6818)"
        );
        let one = Formula::parse("One()", &names).unwrap();
        assert_eq!(one, Formula::constant(true));
        assert_eq!(Formula::parse("~One()", &names).unwrap(), Formula::constant(false));
    }

    proptest! {
        #[test]
        fn text_round_trip(node in arb_node(8)) {
            let f = Formula::new(node);
            let text = f.to_text(&FeatureNames::Default);
            let back = Formula::parse(&text, &FeatureNames::Default).unwrap();
            prop_assert_eq!(&back, &f);
            prop_assert_eq!(back.to_text(&FeatureNames::Default), text);
        }
    }
}
