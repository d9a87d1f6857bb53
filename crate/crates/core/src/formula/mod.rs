//! Expressive Boolean formulas: trees of literals under optionally negated,
//! optionally parameterized operators.
//!
//! A [`Formula`] is the classifier. Its complexity is the number of literal
//! and operator nodes; its depth is the longest root-to-leaf edge count.

mod eval;
mod json;
mod text;

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

pub use json::NodeJson;
pub use text::FeatureNames;

/// A binarized feature, possibly negated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Literal {
    pub feature: usize,
    pub negated: bool,
}

impl Literal {
    pub fn new(feature: usize, negated: bool) -> Self {
        Self { feature, negated }
    }

    pub fn positive(feature: usize) -> Self {
        Self::new(feature, false)
    }

    pub fn negative(feature: usize) -> Self {
        Self::new(feature, true)
    }

    pub fn flipped(self) -> Self {
        Self::new(self.feature, !self.negated)
    }
}

/// The five operator families, without their parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum OperatorKind {
    And,
    Or,
    AtLeast,
    AtMost,
    Choose,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 5] = [
        OperatorKind::And,
        OperatorKind::Or,
        OperatorKind::AtLeast,
        OperatorKind::AtMost,
        OperatorKind::Choose,
    ];

    pub fn is_parameterized(self) -> bool {
        matches!(
            self,
            OperatorKind::AtLeast | OperatorKind::AtMost | OperatorKind::Choose
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::And => "And",
            OperatorKind::Or => "Or",
            OperatorKind::AtLeast => "AtLeast",
            OperatorKind::AtMost => "AtMost",
            OperatorKind::Choose => "Choose",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }

    /// Every operator of this kind that is valid over `children` arguments.
    pub fn instances(self, children: usize) -> Vec<Operator> {
        if self.is_parameterized() {
            (0..=children).map(|k| Operator::new(self, k)).collect()
        } else {
            vec![Operator::new(self, 0)]
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An operator together with its parameter, if it has one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Operator {
    And,
    Or,
    AtLeast(usize),
    AtMost(usize),
    Choose(usize),
}

impl Operator {
    /// `k` is ignored for unparameterized kinds.
    pub fn new(kind: OperatorKind, k: usize) -> Self {
        match kind {
            OperatorKind::And => Operator::And,
            OperatorKind::Or => Operator::Or,
            OperatorKind::AtLeast => Operator::AtLeast(k),
            OperatorKind::AtMost => Operator::AtMost(k),
            OperatorKind::Choose => Operator::Choose(k),
        }
    }

    pub fn kind(self) -> OperatorKind {
        match self {
            Operator::And => OperatorKind::And,
            Operator::Or => OperatorKind::Or,
            Operator::AtLeast(_) => OperatorKind::AtLeast,
            Operator::AtMost(_) => OperatorKind::AtMost,
            Operator::Choose(_) => OperatorKind::Choose,
        }
    }

    pub fn k(self) -> Option<usize> {
        match self {
            Operator::And | Operator::Or => None,
            Operator::AtLeast(k) | Operator::AtMost(k) | Operator::Choose(k) => Some(k),
        }
    }

    /// Same kind with `k` lowered to at most `children`.
    pub fn clamped(self, children: usize) -> Self {
        match self.k() {
            Some(k) if k > children => Operator::new(self.kind(), children),
            _ => self,
        }
    }

    pub fn is_valid_for(self, children: usize) -> bool {
        self.k().is_none_or(|k| k <= children)
    }

    /// Output of the operator given how many of its `children` inputs are true.
    pub fn holds(self, true_count: usize, children: usize) -> bool {
        match self {
            Operator::And => true_count == children,
            Operator::Or => true_count >= 1,
            Operator::AtLeast(k) => true_count >= k,
            Operator::AtMost(k) => true_count <= k,
            Operator::Choose(k) => true_count == k,
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.k() {
            Some(k) => write!(f, "{}{}", self.kind().name(), k),
            None => f.write_str(self.kind().name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OperatorNode {
    pub op: Operator,
    pub negated: bool,
    pub children: Vec<Node>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Literal(Literal),
    Operator(OperatorNode),
    /// A rule with no literals: always true or always false.
    Constant(bool),
}

/// Child indices from the root down to a node.
pub type Path = Vec<usize>;

impl Node {
    pub fn literal(feature: usize, negated: bool) -> Self {
        Node::Literal(Literal::new(feature, negated))
    }

    pub fn operator(op: Operator, children: Vec<Node>) -> Self {
        Node::Operator(OperatorNode {
            op,
            negated: false,
            children,
        })
    }

    pub fn negated_operator(op: Operator, children: Vec<Node>) -> Self {
        Node::Operator(OperatorNode {
            op,
            negated: true,
            children,
        })
    }

    /// Depth-one node over the given literals.
    pub fn over_literals(op: Operator, literals: &[Literal]) -> Self {
        Node::operator(op, literals.iter().map(|&l| Node::Literal(l)).collect())
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Node::Literal(_))
    }

    pub fn is_operator(&self) -> bool {
        matches!(self, Node::Operator(_))
    }

    pub fn children(&self) -> &[Node] {
        match self {
            Node::Operator(o) => &o.children,
            _ => &[],
        }
    }

    pub fn complexity(&self) -> usize {
        match self {
            Node::Literal(_) | Node::Constant(_) => 1,
            Node::Operator(o) => 1 + o.children.iter().map(Node::complexity).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Literal(_) | Node::Constant(_) => 0,
            Node::Operator(o) => 1 + o.children.iter().map(Node::depth).max().unwrap_or(0),
        }
    }

    pub fn negate(&self) -> Node {
        match self {
            Node::Literal(l) => Node::Literal(l.flipped()),
            Node::Constant(c) => Node::Constant(!c),
            Node::Operator(o) => Node::Operator(OperatorNode {
                op: o.op,
                negated: !o.negated,
                children: o.children.clone(),
            }),
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&Node> {
        let mut node = self;
        for &i in path {
            node = node.children().get(i)?;
        }
        Some(node)
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut Node> {
        let mut node = self;
        for &i in path {
            node = match node {
                Node::Operator(o) => o.children.get_mut(i)?,
                _ => return None,
            };
        }
        Some(node)
    }

    /// All node paths in pre-order, the root (empty path) first.
    pub fn paths(&self) -> Vec<Path> {
        fn walk(node: &Node, prefix: &mut Path, out: &mut Vec<Path>) {
            out.push(prefix.clone());
            for (i, c) in node.children().iter().enumerate() {
                prefix.push(i);
                walk(c, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn literals(&self) -> Vec<Literal> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if let Node::Literal(l) = n {
                out.push(*l);
            }
        });
        out
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.literals().iter().map(|l| l.feature).max()
    }

    fn visit(&self, f: &mut impl FnMut(&Node)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    fn min_feature(&self) -> usize {
        match self {
            Node::Literal(l) => l.feature,
            Node::Constant(_) => usize::MAX,
            Node::Operator(o) => o
                .children
                .iter()
                .map(Node::min_feature)
                .min()
                .unwrap_or(usize::MAX),
        }
    }

    /// Copy with every operator's children sorted into canonical order.
    pub fn canonical(&self) -> Node {
        match self {
            Node::Operator(o) => {
                let mut children: Vec<Node> = o.children.iter().map(Node::canonical).collect();
                children.sort_by(canonical_cmp);
                Node::Operator(OperatorNode {
                    op: o.op,
                    negated: o.negated,
                    children,
                })
            }
            other => other.clone(),
        }
    }
}

/// Children order by (smallest feature index in the subtree, literal before
/// operator, negation, default-named text).
fn canonical_cmp(a: &Node, b: &Node) -> Ordering {
    let key = |n: &Node| {
        let negated = match n {
            Node::Literal(l) => l.negated,
            Node::Operator(o) => o.negated,
            Node::Constant(c) => !c,
        };
        (n.min_feature(), n.is_operator(), negated)
    };
    key(a)
        .cmp(&key(b))
        .then_with(|| text::node_text(a, &FeatureNames::Default).cmp(&text::node_text(b, &FeatureNames::Default)))
}

/// A classifier rule. Equality ignores the order of operator arguments.
#[derive(Clone, Debug)]
pub struct Formula {
    root: Node,
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        self.root.canonical() == other.root.canonical()
    }
}

impl Eq for Formula {}

impl From<Node> for Formula {
    fn from(root: Node) -> Self {
        Formula { root }
    }
}

impl Formula {
    pub fn new(root: Node) -> Self {
        Formula { root }
    }

    pub fn constant(value: bool) -> Self {
        Formula::new(Node::Constant(value))
    }

    pub fn literal(feature: usize, negated: bool) -> Self {
        Formula::new(Node::literal(feature, negated))
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn into_root(self) -> Node {
        self.root
    }

    pub fn complexity(&self) -> usize {
        self.root.complexity()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn negated(&self) -> Formula {
        Formula::new(self.root.negate())
    }

    pub fn canonical(&self) -> Formula {
        Formula::new(self.root.canonical())
    }

    pub fn node_at(&self, path: &[usize]) -> Option<&Node> {
        self.root.at(path)
    }

    pub fn paths(&self) -> Vec<Path> {
        self.root.paths()
    }

    pub fn literals(&self) -> Vec<Literal> {
        self.root.literals()
    }

    /// Copy of this formula with the node at `path` replaced.
    pub fn replaced(&self, path: &[usize], node: Node) -> Result<Formula> {
        let mut root = self.root.clone();
        let slot = root
            .at_mut(path)
            .ok_or_else(|| Error::InvalidFormula(format!("no node at path {path:?}")))?;
        *slot = node;
        Ok(Formula::new(root))
    }

    /// Checks the structural invariants: every operator has at least two
    /// children and a parameter within `0..=children`, no operator has two
    /// literal children on the same feature, every feature index is below
    /// `num_features` (when given) and the complexity is within
    /// `max_complexity` (when given).
    pub fn validate(&self, num_features: Option<usize>, max_complexity: Option<usize>) -> Result<()> {
        fn check(node: &Node, num_features: Option<usize>) -> Result<()> {
            match node {
                Node::Constant(_) => Ok(()),
                Node::Literal(l) => match num_features {
                    Some(m) if l.feature >= m => Err(Error::FeatureOutOfRange {
                        index: l.feature,
                        num_features: m,
                    }),
                    _ => Ok(()),
                },
                Node::Operator(o) => {
                    let n = o.children.len();
                    if n < 2 {
                        return Err(Error::TooFewChildren {
                            operator: o.op.to_string(),
                            children: n,
                        });
                    }
                    if let Some(k) = o.op.k() {
                        if k > n {
                            return Err(Error::ParameterOutOfRange {
                                operator: o.op.kind().to_string(),
                                k,
                                children: n,
                            });
                        }
                    }
                    let mut seen: Vec<usize> = o
                        .children
                        .iter()
                        .filter_map(|c| match c {
                            Node::Literal(l) => Some(l.feature),
                            _ => None,
                        })
                        .collect();
                    seen.sort_unstable();
                    if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
                        return Err(Error::InvalidFormula(format!(
                            "feature {} appears twice under {}",
                            w[0], o.op
                        )));
                    }
                    o.children.iter().try_for_each(|c| check(c, num_features))
                }
            }
        }
        check(&self.root, num_features)?;
        if let Some(cmax) = max_complexity {
            let c = self.complexity();
            if c > cmax {
                return Err(Error::InvalidFormula(format!(
                    "complexity {c} exceeds the maximum {cmax}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text(&FeatureNames::Default))
    }
}
