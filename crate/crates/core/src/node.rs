//! Tree nodes, which double as instance identifiers.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

/// A word over the branching alphabet `[0, κ-1]`. The empty word is the root.
///
/// The derived ordering is lexicographic, so sorting nodes yields a
/// depth-first preorder traversal.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node(Vec<u8>);

impl Node {
    pub fn root() -> Node {
        Node(Vec::new())
    }

    pub fn from_path(path: impl Into<Vec<u8>>) -> Node {
        Node(path.into())
    }

    pub fn child(&self, alpha: u8) -> Node {
        let mut path = self.0.clone();
        path.push(alpha);
        Node(path)
    }

    pub fn parent(&self) -> Option<Node> {
        if self.0.is_empty() {
            return None;
        }
        Some(Node(self.0[..self.0.len() - 1].to_vec()))
    }

    /// Last branch index, `None` for the root.
    pub fn last(&self) -> Option<u8> {
        self.0.last().copied()
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn path(&self) -> &[u8] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_prefix_of(&self, other: &Node) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn common_prefix(&self, other: &Node) -> Node {
        let n = self.0.iter().zip(&other.0).take_while(|(a, b)| a == b).count();
        Node(self.0[..n].to_vec())
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        for d in &self.0 {
            if *d < 10 {
                write!(f, "{d}")?;
            } else {
                write!(f, "[{d}]")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Node {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid node `{0}`")]
pub struct NodeParseError(pub String);

impl FromStr for Node {
    type Err = NodeParseError;

    fn from_str(s: &str) -> Result<Node, NodeParseError> {
        if s == "ε" || s == "e" || s.is_empty() {
            return Ok(Node::root());
        }
        let bad = || NodeParseError(s.to_string());
        let mut out = Vec::new();
        let mut chars = s.chars();
        while let Some(c) = chars.next() {
            if c == '[' {
                let digits: String = chars.by_ref().take_while(|&c| c != ']').collect();
                out.push(digits.parse::<u8>().map_err(|_| bad())?);
            } else {
                out.push(c.to_digit(10).ok_or_else(bad)? as u8);
            }
        }
        Ok(Node(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preorder() {
        let mut v: Vec<Node> = ["1", "0", "00", "ε", "01", "10"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        v.sort();
        let shown: Vec<String> = v.iter().map(|n| n.to_string()).collect();
        assert_eq!(shown, ["ε", "0", "00", "01", "1", "10"]);
    }

    #[test]
    fn parent_child_roundtrip() {
        let n = Node::from_path(vec![0, 1]);
        assert_eq!(n.child(1).parent(), Some(n.clone()));
        assert_eq!(n.last(), Some(1));
        assert!(Node::root().parent().is_none());
        assert_eq!(n.common_prefix(&Node::from_path(vec![0, 0, 1])), Node::from_path(vec![0]));
    }
}
