//! Initial rules and the six local moves.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::formula::{Formula, Literal, Node, Operator, OperatorKind, OperatorNode, Path};
use crate::rng::Rng;

/// Upper bound on initial literals when no complexity limit is set.
pub const UNBOUNDED_INITIAL_LITERALS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    RemoveLiteral,
    ExpandLiteral,
    SwapLiteral,
    RemoveOperator,
    AddLiteral,
    SwapOperator,
    /// Non-local: replace a subtree with an optimized one.
    ReplaceSubtree,
}

impl MoveKind {
    /// Cycle order for moves targeting a literal.
    pub const LITERAL_CYCLE: [MoveKind; 3] = [
        MoveKind::RemoveLiteral,
        MoveKind::ExpandLiteral,
        MoveKind::SwapLiteral,
    ];
    /// Cycle order for moves targeting an operator.
    pub const OPERATOR_CYCLE: [MoveKind; 3] = [
        MoveKind::RemoveOperator,
        MoveKind::AddLiteral,
        MoveKind::SwapOperator,
    ];
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Move {
    RemoveLiteral { path: Path },
    /// Replace the literal at `path` by `op(literal, sibling)`, where
    /// `sibling` is the index of another literal under the same parent.
    ExpandLiteral { path: Path, sibling: usize, op: Operator },
    SwapLiteral { path: Path, literal: Literal },
    RemoveOperator { path: Path },
    AddLiteral { path: Path, literal: Literal },
    SwapOperator { path: Path, op: Operator },
    ReplaceSubtree { path: Path, node: Node },
}

impl Move {
    pub fn kind(&self) -> MoveKind {
        match self {
            Move::RemoveLiteral { .. } => MoveKind::RemoveLiteral,
            Move::ExpandLiteral { .. } => MoveKind::ExpandLiteral,
            Move::SwapLiteral { .. } => MoveKind::SwapLiteral,
            Move::RemoveOperator { .. } => MoveKind::RemoveOperator,
            Move::AddLiteral { .. } => MoveKind::AddLiteral,
            Move::SwapOperator { .. } => MoveKind::SwapOperator,
            Move::ReplaceSubtree { .. } => MoveKind::ReplaceSubtree,
        }
    }

    pub fn path(&self) -> &[usize] {
        match self {
            Move::RemoveLiteral { path }
            | Move::ExpandLiteral { path, .. }
            | Move::SwapLiteral { path, .. }
            | Move::RemoveOperator { path }
            | Move::AddLiteral { path, .. }
            | Move::SwapOperator { path, .. }
            | Move::ReplaceSubtree { path, .. } => path,
        }
    }
}

fn random_operator(children: usize, rng: &mut Rng) -> Operator {
    let kind = *OperatorKind::ALL.choose(rng).unwrap();
    Operator::new(kind, rng.gen_range(0..=children))
}

/// A random depth-one rule: between two and `C' - 1` distinct literals
/// (capped by the feature count), each negated by a fair coin, under a
/// uniformly chosen operator with a uniformly chosen valid parameter.
pub fn generate_initial_rule(num_features: usize, max_complexity: Option<usize>, rng: &mut Rng) -> Result<Formula> {
    if num_features < 2 {
        return Err(Error::data("at least two features are needed to build a rule"));
    }
    let cap = match max_complexity {
        Some(c) if c < 3 => {
            return Err(Error::config(format!("max complexity {c} is below the minimum of 3")))
        }
        Some(c) => c - 1,
        None => UNBOUNDED_INITIAL_LITERALS,
    };
    let count = rng.gen_range(2..=cap.min(num_features));
    let features = rand::seq::index::sample(rng, num_features, count);
    let literals: Vec<Literal> = features
        .iter()
        .map(|f| Literal::new(f, rng.gen_bool(0.5)))
        .collect();
    let op = random_operator(count, rng);
    Ok(Formula::new(Node::over_literals(op, &literals)))
}

/// Proposes local moves by rejection sampling, cycling the move type
/// separately for literal and operator targets.
#[derive(Clone, Debug)]
pub struct LocalMoveProposer {
    num_features: usize,
    max_complexity: Option<usize>,
    literal_phase: usize,
    operator_phase: usize,
}

/// Bound on rejection-sampling rounds; unreachable for rules containing a
/// literal, since swapping a literal for its negation is always valid.
const MAX_ATTEMPTS: usize = 100_000;

impl LocalMoveProposer {
    pub fn new(num_features: usize, max_complexity: Option<usize>) -> Self {
        Self {
            num_features,
            max_complexity,
            literal_phase: 0,
            operator_phase: 0,
        }
    }

    pub fn propose(&mut self, rule: &Formula, rng: &mut Rng) -> Result<Move> {
        if rule.literals().is_empty() {
            return Err(Error::InvalidFormula(
                "local moves need a rule with at least one literal".into(),
            ));
        }
        let paths = rule.paths();
        for _ in 0..MAX_ATTEMPTS {
            let path = paths.choose(rng).unwrap();
            let candidate = match rule.node_at(path).unwrap() {
                Node::Literal(l) => {
                    let kind = MoveKind::LITERAL_CYCLE[self.literal_phase];
                    self.literal_phase = (self.literal_phase + 1) % 3;
                    self.literal_move(rule, path, *l, kind, rng)
                }
                Node::Operator(o) => {
                    let kind = MoveKind::OPERATOR_CYCLE[self.operator_phase];
                    self.operator_phase = (self.operator_phase + 1) % 3;
                    self.operator_move(rule, path, o, kind, rng)
                }
                Node::Constant(_) => None,
            };
            if let Some(m) = candidate {
                return Ok(m);
            }
        }
        Err(Error::InvalidFormula("no valid local move found".into()))
    }

    fn has_room(&self, rule: &Formula) -> bool {
        self.max_complexity.is_none_or(|c| rule.complexity() < c)
    }

    fn literal_move(&self, rule: &Formula, path: &[usize], lit: Literal, kind: MoveKind, rng: &mut Rng) -> Option<Move> {
        let parent = parent_of(rule, path);
        match kind {
            MoveKind::RemoveLiteral => {
                (parent?.children.len() >= 3).then(|| Move::RemoveLiteral { path: path.to_vec() })
            }
            MoveKind::ExpandLiteral => {
                let parent = parent?;
                if parent.children.len() < 3 || !self.has_room(rule) {
                    return None;
                }
                let own = *path.last().unwrap();
                let siblings: Vec<usize> = parent
                    .children
                    .iter()
                    .enumerate()
                    .filter(|(i, c)| *i != own && c.is_literal())
                    .map(|(i, _)| i)
                    .collect();
                let sibling = *siblings.choose(rng)?;
                Some(Move::ExpandLiteral {
                    path: path.to_vec(),
                    sibling,
                    op: random_operator(2, rng),
                })
            }
            MoveKind::SwapLiteral => {
                let new = Literal::new(rng.gen_range(0..self.num_features), rng.gen_bool(0.5));
                let valid = if new.feature == lit.feature {
                    new.negated != lit.negated
                } else {
                    parent.is_none_or(|p| !has_literal_feature(p, new.feature))
                };
                valid.then(|| Move::SwapLiteral {
                    path: path.to_vec(),
                    literal: new,
                })
            }
            _ => None,
        }
    }

    fn operator_move(&self, rule: &Formula, path: &[usize], node: &OperatorNode, kind: MoveKind, rng: &mut Rng) -> Option<Move> {
        match kind {
            MoveKind::RemoveOperator => {
                (parent_of(rule, path)?.children.len() >= 3).then(|| Move::RemoveOperator { path: path.to_vec() })
            }
            MoveKind::AddLiteral => {
                if !self.has_room(rule) {
                    return None;
                }
                let new = Literal::new(rng.gen_range(0..self.num_features), rng.gen_bool(0.5));
                (!has_literal_feature(node, new.feature)).then(|| Move::AddLiteral {
                    path: path.to_vec(),
                    literal: new,
                })
            }
            MoveKind::SwapOperator => {
                let n = node.children.len();
                let choices: Vec<Operator> = OperatorKind::ALL
                    .into_iter()
                    .flat_map(|k| k.instances(n))
                    .filter(|&op| op != node.op)
                    .collect();
                Some(Move::SwapOperator {
                    path: path.to_vec(),
                    op: *choices.choose(rng)?,
                })
            }
            _ => None,
        }
    }
}

/// Proposes one local move with fresh move-type cycles.
pub fn propose_local_move(
    rule: &Formula,
    num_features: usize,
    max_complexity: Option<usize>,
    rng: &mut Rng,
) -> Result<Move> {
    LocalMoveProposer::new(num_features, max_complexity).propose(rule, rng)
}

fn parent_of<'a>(rule: &'a Formula, path: &[usize]) -> Option<&'a OperatorNode> {
    let (_, parent_path) = path.split_last()?;
    match rule.node_at(parent_path)? {
        Node::Operator(o) => Some(o),
        _ => None,
    }
}

fn has_literal_feature(node: &OperatorNode, feature: usize) -> bool {
    node.children
        .iter()
        .any(|c| matches!(c, Node::Literal(l) if l.feature == feature))
}

fn invalid(m: &Move, why: &str) -> Error {
    Error::InvalidFormula(format!("cannot apply {:?} at {:?}: {why}", m.kind(), m.path()))
}

/// Applies `mv` to a copy of `rule`. Parameterized parents whose child
/// count shrinks have their parameter clamped down.
pub fn apply_move(rule: &Formula, mv: &Move) -> Result<Formula> {
    let mut root = rule.root().clone();
    let path = mv.path();
    match mv {
        Move::SwapLiteral { literal, .. } => {
            let slot = root.at_mut(path).ok_or_else(|| invalid(mv, "no such node"))?;
            match slot {
                Node::Literal(l) if *l != *literal => *l = *literal,
                _ => return Err(invalid(mv, "target is not a different literal")),
            }
        }
        Move::AddLiteral { literal, .. } => match root.at_mut(path) {
            Some(Node::Operator(o)) if !has_literal_feature(o, literal.feature) => {
                o.children.push(Node::Literal(*literal))
            }
            _ => return Err(invalid(mv, "target is not an operator lacking the feature")),
        },
        Move::SwapOperator { op, .. } => match root.at_mut(path) {
            Some(Node::Operator(o)) if o.op != *op && op.is_valid_for(o.children.len()) => o.op = *op,
            _ => return Err(invalid(mv, "target is not an operator or the swap is invalid")),
        },
        Move::ReplaceSubtree { node, .. } => {
            *root.at_mut(path).ok_or_else(|| invalid(mv, "no such node"))? = node.clone();
        }
        Move::RemoveLiteral { .. } | Move::RemoveOperator { .. } | Move::ExpandLiteral { .. } => {
            let (&idx, parent_path) = path.split_last().ok_or_else(|| invalid(mv, "target is the root"))?;
            let Some(Node::Operator(parent)) = root.at_mut(parent_path) else {
                return Err(invalid(mv, "parent is not an operator"));
            };
            if parent.children.len() < 3 {
                return Err(invalid(mv, "parent would keep fewer than two children"));
            }
            let target = parent.children.get(idx).ok_or_else(|| invalid(mv, "no such node"))?;
            match mv {
                Move::RemoveLiteral { .. } => {
                    if !target.is_literal() {
                        return Err(invalid(mv, "target is not a literal"));
                    }
                    parent.children.remove(idx);
                }
                Move::RemoveOperator { .. } => {
                    if !target.is_operator() {
                        return Err(invalid(mv, "target is not an operator"));
                    }
                    parent.children.remove(idx);
                }
                Move::ExpandLiteral { sibling, op, .. } => {
                    let sib = parent.children.get(*sibling);
                    if !target.is_literal() || *sibling == idx || !sib.is_some_and(Node::is_literal) || !op.is_valid_for(2) {
                        return Err(invalid(mv, "needs two distinct literal siblings"));
                    }
                    let new = Node::Operator(OperatorNode {
                        op: *op,
                        negated: false,
                        children: vec![target.clone(), parent.children[*sibling].clone()],
                    });
                    parent.children[idx] = new;
                    parent.children.remove(*sibling);
                }
                _ => unreachable!(),
            }
            parent.op = parent.op.clamped(parent.children.len());
        }
    }
    let out = Formula::new(root);
    out.validate(None, None)?;
    Ok(out)
}
