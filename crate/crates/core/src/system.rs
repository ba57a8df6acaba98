//! Rewriting rules and systems.

use std::collections::BTreeMap;
use std::fmt;

use crate::term::{Term, Var};

/// Head predicate of the synthetic rule `A_b() <- b` that starts every tree.
pub const ROOT_PRED: &str = "_Root";

#[derive(Clone, PartialEq, Eq)]
pub struct Rule {
    pub head: String,
    pub params: Vec<Var>,
    pub body: Term,
}

impl Rule {
    pub fn new(head: &str, params: Vec<Var>, body: Term) -> Rule {
        Rule { head: head.to_string(), params, body }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.head)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ") <- {};", self.body)
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// An ordered list of rules. When built with [`RewritingSystem::with_root`],
/// the first rule is the synthetic root rule.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RewritingSystem {
    pub rules: Vec<Rule>,
}

impl RewritingSystem {
    pub fn new(rules: Vec<Rule>) -> RewritingSystem {
        RewritingSystem { rules }
    }

    /// Prepend `_Root() <- root`. A nullary root predicate with a single rule
    /// that no other body refers to is inlined, so its rule starts every tree.
    pub fn with_root(&self, root: &Term) -> RewritingSystem {
        if let Term::Pred { name, args } = root {
            let defs: Vec<usize> = self.rules_for(name).map(|(i, _)| i).collect();
            let referenced = self.rules.iter().any(|r| r.body.pred_atoms().iter().any(|(n, _)| n == name));
            if args.is_empty() && defs.len() == 1 && !referenced {
                let mut rules = vec![Rule::new(ROOT_PRED, Vec::new(), self.rules[defs[0]].body.clone())];
                rules.extend(self.rules.iter().enumerate().filter(|(i, _)| *i != defs[0]).map(|(_, r)| r.clone()));
                return RewritingSystem { rules };
            }
        }
        let mut rules = vec![Rule::new(ROOT_PRED, Vec::new(), root.clone())];
        rules.extend(self.rules.iter().cloned());
        RewritingSystem { rules }
    }

    pub fn root_rule(&self) -> Option<&Rule> {
        self.rules.first().filter(|r| r.head == ROOT_PRED)
    }

    /// Rules other than the synthetic root rule.
    pub fn user_rules(&self) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(|r| r.head != ROOT_PRED)
    }

    pub fn rules_for<'a>(&'a self, head: &'a str) -> impl Iterator<Item = (usize, &'a Rule)> + 'a {
        self.rules.iter().enumerate().filter(move |(_, r)| r.head == head)
    }

    /// Arity of each defined predicate (first definition wins).
    pub fn arities(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for r in &self.rules {
            out.entry(r.head.clone()).or_insert(r.params.len());
        }
        out
    }
}
