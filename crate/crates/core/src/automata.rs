//! Automata over tree paths that track where a variable is instantiated.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::node::Node;
use crate::rewriting::{global_env, PreparedSystem, RewritingTree};
use crate::term::Var;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Dir {
    Up,
    Down,
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dir::Up => "up",
            Dir::Down => "down",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutomatonError {
    #[error("variable `{var}` does not occur in rule r{}", .rule + 1)]
    UnknownVariable { rule: usize, var: Var },
    #[error("rule r{} does not exist", .0 + 1)]
    UnknownRule(usize),
    #[error("node {0} is not in the tree")]
    NodeAbsent(Node),
}

/// A path given by its source and its `(α, up/down)` steps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DirectionPath {
    pub source: Node,
    pub steps: Vec<(u8, Dir)>,
}

impl DirectionPath {
    /// Nodes visited, source first; `None` when an up step leaves the root
    /// or does not match the last branch index.
    pub fn nodes(&self) -> Option<Vec<Node>> {
        let mut out = vec![self.source.clone()];
        for &(alpha, d) in &self.steps {
            let cur = out.last().expect("non-empty");
            let next = match d {
                Dir::Down => cur.child(alpha),
                Dir::Up => {
                    if cur.last() != Some(alpha) {
                        return None;
                    }
                    cur.parent()?
                }
            };
            out.push(next);
        }
        Some(out)
    }
}

/// The simple path from `w1` to `w2`: up to their longest common prefix,
/// then down.
pub fn tree_path_directions(tree: &RewritingTree, w1: &Node, w2: &Node) -> Result<DirectionPath, AutomatonError> {
    for w in [w1, w2] {
        if !tree.contains(w) {
            return Err(AutomatonError::NodeAbsent(w.clone()));
        }
    }
    Ok(direction_path(w1, w2))
}

/// The simple path between two nodes of the full κ-ary tree.
pub fn direction_path(w1: &Node, w2: &Node) -> DirectionPath {
    let lcp = w1.common_prefix(w2);
    let mut steps = Vec::new();
    for &a in w1.path()[lcp.depth()..].iter().rev() {
        steps.push((a, Dir::Up));
    }
    for &a in &w2.path()[lcp.depth()..] {
        steps.push((a, Dir::Down));
    }
    DirectionPath { source: w1.clone(), steps }
}

/// `q^d_{r,z}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct QState {
    pub dir: Dir,
    pub rule: usize,
    pub var: Var,
}

impl fmt::Display for QState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}_r{}_{}", self.dir, self.rule + 1, self.var)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathAutomaton {
    pub states: Vec<QState>,
    pub initial: Vec<usize>,
    pub accepting: Vec<usize>,
    /// `(from, α, direction, to)`.
    pub transitions: Vec<(usize, u8, Dir, usize)>,
}

impl PathAutomaton {
    fn step(&self, current: &BTreeSet<usize>, alpha: u8, d: Dir) -> BTreeSet<usize> {
        self.transitions
            .iter()
            .filter(|(from, a, dir, _)| *a == alpha && *dir == d && current.contains(from))
            .map(|t| t.3)
            .collect()
    }

    /// Membership of the direction word, by subset simulation.
    pub fn accepts(&self, path: &DirectionPath) -> bool {
        let mut current: BTreeSet<usize> = self.initial.iter().copied().collect();
        for &(alpha, d) in &path.steps {
            current = self.step(&current, alpha, d);
            if current.is_empty() {
                return false;
            }
        }
        self.accepting.iter().any(|q| current.contains(q))
    }

    /// Like [`accepts`](Self::accepts), but every visited node must carry
    /// the rule of the automaton state placed on it.
    pub fn accepts_on_tree(&self, tree: &RewritingTree, path: &DirectionPath) -> bool {
        let Some(nodes) = path.nodes() else { return false };
        let fits = |q: usize, w: &Node| tree.label(w) == Some(self.states[q].rule);
        let mut current: BTreeSet<usize> = self.initial.iter().copied().filter(|&q| fits(q, &nodes[0])).collect();
        for (&(alpha, d), w) in path.steps.iter().zip(&nodes[1..]) {
            current = self.step(&current, alpha, d).into_iter().filter(|&q| fits(q, w)).collect();
            if current.is_empty() {
                return false;
            }
        }
        self.accepting.iter().any(|q| current.contains(q))
    }

    /// Keep only states reachable from an initial state and co-reachable to
    /// an accepting one.
    pub fn trim(&self) -> PathAutomaton {
        let n = self.states.len();
        let closure = |seed: &[usize], forward: bool| {
            let mut seen = vec![false; n];
            let mut stack: Vec<usize> = seed.to_vec();
            while let Some(q) = stack.pop() {
                if std::mem::replace(&mut seen[q], true) {
                    continue;
                }
                for &(a, _, _, b) in &self.transitions {
                    let (from, to) = if forward { (a, b) } else { (b, a) };
                    if from == q && !seen[to] {
                        stack.push(to);
                    }
                }
            }
            seen
        };
        let fwd = closure(&self.initial, true);
        let bwd = closure(&self.accepting, false);
        let keep: Vec<usize> = (0..n).filter(|&q| fwd[q] && bwd[q]).collect();
        let remap: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &q)| (q, i)).collect();
        PathAutomaton {
            states: keep.iter().map(|&q| self.states[q].clone()).collect(),
            initial: self.initial.iter().filter_map(|q| remap.get(q).copied()).collect(),
            accepting: self.accepting.iter().filter_map(|q| remap.get(q).copied()).collect(),
            transitions: self
                .transitions
                .iter()
                .filter_map(|&(a, al, d, b)| Some((*remap.get(&a)?, al, d, *remap.get(&b)?)))
                .collect(),
        }
    }
}

type Key = (usize, Var, usize, Var);

/// All instantiation-tracking automata of a system; they share states and
/// transitions and differ in initial and accepting states.
pub struct AutomataFamily {
    states: Vec<QState>,
    index: HashMap<QState, usize>,
    transitions: Vec<(usize, u8, Dir, usize)>,
    cache: Mutex<HashMap<Key, Arc<PathAutomaton>>>,
}

impl AutomataFamily {
    pub fn new(sys: &PreparedSystem) -> AutomataFamily {
        let mut states = Vec::new();
        for r in &sys.rules {
            for v in r.vars() {
                for dir in [Dir::Up, Dir::Down] {
                    states.push(QState { dir, rule: r.index, var: v.clone() });
                }
            }
        }
        let index: HashMap<QState, usize> = states.iter().enumerate().map(|(i, q)| (q.clone(), i)).collect();
        let q = |dir, rule, var: &Var| index[&QState { dir, rule, var: var.clone() }];
        let mut transitions = Vec::new();
        for parent in &sys.rules {
            for (alpha, (name, args)) in parent.preds.iter().enumerate() {
                let alpha = alpha as u8;
                for child in sys.rules_for(name) {
                    for (y, x) in args.iter().zip(&child.params) {
                        transitions.push((q(Dir::Down, parent.index, y), alpha, Dir::Down, q(Dir::Down, child.index, x)));
                        transitions.push((q(Dir::Up, child.index, x), alpha, Dir::Up, q(Dir::Up, parent.index, y)));
                        transitions.push((q(Dir::Up, child.index, x), alpha, Dir::Up, q(Dir::Down, parent.index, y)));
                    }
                }
            }
        }
        transitions.sort();
        transitions.dedup();
        AutomataFamily { states, index, transitions, cache: Mutex::new(HashMap::new()) }
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// The automaton from `z1` in rule `r1` to `z2` in rule `r2`, trimmed.
    pub fn automaton(&self, r1: usize, z1: &Var, r2: usize, z2: &Var) -> Result<Arc<PathAutomaton>, AutomatonError> {
        let key = (r1, z1.clone(), r2, z2.clone());
        if let Some(a) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(a.clone());
        }
        let find = |dir, rule: usize, var: &Var| {
            self.index
                .get(&QState { dir, rule, var: var.clone() })
                .copied()
                .ok_or_else(|| AutomatonError::UnknownVariable { rule, var: var.clone() })
        };
        let full = PathAutomaton {
            states: self.states.clone(),
            initial: vec![find(Dir::Up, r1, z1)?, find(Dir::Down, r1, z1)?],
            accepting: vec![find(Dir::Down, r2, z2)?],
            transitions: self.transitions.clone(),
        };
        let a = Arc::new(full.trim());
        self.cache.lock().expect("cache lock").insert(key, a.clone());
        Ok(a)
    }
}

/// Whether `z1` at `w1` and `z2` at `w2` denote the same identifier, read
/// off the parameter substitutions along the tree.
pub fn same_identifier_oracle(sys: &PreparedSystem, tree: &RewritingTree, a: (&Node, &Var), b: (&Node, &Var)) -> bool {
    let env = global_env(sys, tree);
    let resolve = |(w, z): (&Node, &Var)| env.get(w).and_then(|e| e.get(z)).cloned();
    match (resolve(a), resolve(b)) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::load;
    use crate::rewriting::enumerate_trees;

    const TLL: &str = include_str!("../../../corpus/tree-linked-leaves.pas");

    fn n(s: &str) -> Node {
        s.parse().unwrap()
    }

    #[test]
    fn path_directions() {
        let m = load(TLL).unwrap();
        let t = enumerate_trees(&m.system, 7).find(|t| t.size() == 7).unwrap();
        assert!(tree_path_directions(&t, &n("0"), &n("0")).unwrap().steps.is_empty());
        assert_eq!(tree_path_directions(&t, &n("0"), &n("1")).unwrap().steps, vec![(0, Dir::Up), (1, Dir::Down)]);
        assert_eq!(tree_path_directions(&t, &n("ε"), &n("00")).unwrap().steps, vec![(0, Dir::Down), (0, Dir::Down)]);
        assert_eq!(tree_path_directions(&t, &n("ε"), &n("000")), Err(AutomatonError::NodeAbsent(n("000"))));
    }

    #[test]
    fn leftmost_leaf_tracking() {
        let m = load(TLL).unwrap();
        let sys = &m.system;
        let t = enumerate_trees(sys, 7).find(|t| t.size() == 7).unwrap();
        let fam = AutomataFamily::new(sys);
        let l1 = Var::new("l1");
        let leaf_rule = t.label(&n("00")).unwrap();
        let leaf_param = sys.rules[leaf_rule].params[0].clone();
        let a = fam.automaton(0, &l1, leaf_rule, &leaf_param).unwrap();
        assert_eq!(a.states[a.accepting[0]], QState { dir: Dir::Down, rule: leaf_rule, var: leaf_param.clone() });
        let to_leftmost = tree_path_directions(&t, &Node::root(), &n("00")).unwrap();
        assert!(a.accepts(&to_leftmost) && a.accepts_on_tree(&t, &to_leftmost));
        assert!(same_identifier_oracle(sys, &t, (&Node::root(), &l1), (&n("00"), &leaf_param)));
        assert!(!same_identifier_oracle(sys, &t, (&Node::root(), &l1), (&n("11"), &leaf_param)));
        assert!(!a.accepts_on_tree(&t, &tree_path_directions(&t, &Node::root(), &n("11")).unwrap()));
        // ends on an inner node: wrong final rule
        assert!(!a.accepts_on_tree(&t, &tree_path_directions(&t, &Node::root(), &n("0")).unwrap()));
        // down then up is never accepted
        let zigzag = DirectionPath { source: Node::root(), steps: vec![(0, Dir::Down), (0, Dir::Up)] };
        assert!(!a.accepts(&zigzag));
    }

    #[test]
    fn delta_shapes_and_identity() {
        let m = load(TLL).unwrap();
        let fam = AutomataFamily::new(&m.system);
        for &(a, _, d, b) in &fam.transitions {
            let (from, to) = (&fam.states[a], &fam.states[b]);
            assert!(!(from.dir == Dir::Down && (d == Dir::Up || to.dir == Dir::Up)));
            assert!(!(from.dir == Dir::Up && d == Dir::Down));
        }
        let x = Var::new("n");
        let r = m.system.rules.iter().position(|r| r.params.first() == Some(&x)).unwrap();
        let a = fam.automaton(r, &x, r, &x).unwrap();
        assert!(a.accepts(&DirectionPath { source: Node::root(), steps: Vec::new() }));
        assert!(matches!(fam.automaton(0, &Var::new("nope"), r, &x), Err(AutomatonError::UnknownVariable { .. })));
    }
}
