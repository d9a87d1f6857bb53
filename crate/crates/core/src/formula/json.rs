use serde::{Deserialize, Serialize};

use super::{FeatureNames, Formula, Literal, Node, Operator, OperatorKind, OperatorNode};
use crate::error::{Error, Result};

/// JSON shape of a formula node used in results files.
///
/// Operators: `{"kind": "AtLeast", "k": 2, "negated": false, "children": [...]}`.
/// Literals: `{"kind": "Literal", "feature": 3, "name": "f3", "negated": true}`.
/// Constants: `{"kind": "Constant", "value": true}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default)]
    pub negated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeJson>,
}

impl NodeJson {
    pub fn from_node(node: &Node, names: &FeatureNames) -> Self {
        let blank = NodeJson {
            kind: String::new(),
            k: None,
            negated: false,
            feature: None,
            name: None,
            value: None,
            children: Vec::new(),
        };
        match node {
            Node::Constant(v) => NodeJson {
                kind: "Constant".into(),
                value: Some(*v),
                ..blank
            },
            Node::Literal(l) => NodeJson {
                kind: "Literal".into(),
                negated: l.negated,
                feature: Some(l.feature),
                name: Some(names.name(l.feature)),
                ..blank
            },
            Node::Operator(o) => NodeJson {
                kind: o.op.kind().name().into(),
                k: o.op.k(),
                negated: o.negated,
                children: o
                    .children
                    .iter()
                    .map(|c| NodeJson::from_node(c, names))
                    .collect(),
                ..blank
            },
        }
    }

    pub fn to_node(&self) -> Result<Node> {
        let bad = |msg: &str| Error::InvalidFormula(format!("{msg} in node of kind `{}`", self.kind));
        match self.kind.as_str() {
            "Constant" => Ok(Node::Constant(
                self.value.ok_or_else(|| bad("missing `value`"))? != self.negated,
            )),
            "Literal" => Ok(Node::Literal(Literal::new(
                self.feature.ok_or_else(|| bad("missing `feature`"))?,
                self.negated,
            ))),
            other => {
                let kind = OperatorKind::ALL
                    .into_iter()
                    .find(|k| k.name() == other)
                    .ok_or_else(|| bad("unknown kind"))?;
                let k = match (kind.is_parameterized(), self.k) {
                    (true, Some(k)) => k,
                    (true, None) => return Err(bad("missing `k`")),
                    (false, _) => 0,
                };
                let children = self
                    .children
                    .iter()
                    .map(NodeJson::to_node)
                    .collect::<Result<Vec<_>>>()?;
                Ok(Node::Operator(OperatorNode {
                    op: Operator::new(kind, k),
                    negated: self.negated,
                    children,
                }))
            }
        }
    }
}

impl Formula {
    pub fn to_json(&self, names: &FeatureNames) -> NodeJson {
        NodeJson::from_node(&self.root().canonical(), names)
    }

    /// Rebuilds and validates a formula from its JSON form.
    pub fn from_json(json: &NodeJson) -> Result<Formula> {
        let f = Formula::new(json.to_node()?);
        f.validate(None, None)?;
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::example_rule;
    use super::*;

    #[test]
    fn json_round_trip() {
        let f = example_rule();
        let json = serde_json::to_string(&f.to_json(&FeatureNames::Default)).unwrap();
        assert!(json.contains("\"kind\":\"Choose\",\"k\":2"));
        let back: NodeJson = serde_json::from_str(&json).unwrap();
        assert_eq!(Formula::from_json(&back).unwrap(), f);
    }

    #[test]
    fn json_rejects_invalid() {
        let j: NodeJson = serde_json::from_str(
            r#"{"kind":"AtLeast","children":[{"kind":"Literal","feature":0},{"kind":"Literal","feature":1}]}"#,
        )
        .unwrap();
        assert!(Formula::from_json(&j).is_err());
    }
}
