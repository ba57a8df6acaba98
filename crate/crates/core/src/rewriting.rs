//! Rewriting trees, characteristic terms and the ground systems they denote.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::rc::Rc;

use serde::Serialize;

use crate::component::ComponentType;
use crate::node::Node;
use crate::system::{RewritingSystem, ROOT_PRED};
use crate::term::{arch_semantics, flatten, Architecture, FlatTerm, Substitution, Symbol, Term, TermError, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("the first rule must be the root rule `{ROOT_PRED}()`")]
    MissingRoot,
    #[error("component type `{0}` is not declared")]
    UnknownComponent(String),
    #[error("variable `{var}` is instantiated at both {first} and {second}")]
    DoubleInstantiation { var: Var, first: Node, second: Node },
    #[error("node {0} holds more than one instance atom")]
    SharedNode(Node),
    #[error("variable `{0}` occurs in a port but is never instantiated")]
    UninstantiatedPort(Var),
    #[error("port `{port}` at {node} does not belong to component type `{ctype}`")]
    PortTypeMismatch { port: String, node: Node, ctype: String },
    #[error("incompatible parameter sets: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Term(#[from] TermError),
}

/// A rule together with its flattened body.
#[derive(Clone, Debug)]
pub struct RuleShape {
    pub index: usize,
    pub head: String,
    pub params: Vec<Var>,
    pub body: Term,
    pub binders: Vec<Var>,
    pub flat: FlatTerm,
    pub instances: Vec<(String, Var)>,
    pub preds: Vec<(String, Vec<Var>)>,
}

impl RuleShape {
    pub fn npred(&self) -> usize {
        self.preds.len()
    }

    /// Every variable of the rule: parameters first, then binders.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = self.params.clone();
        for v in &self.binders {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        out
    }

    /// `r3` style label, 1-based.
    pub fn label(&self) -> String {
        format!("r{}", self.index + 1)
    }
}

impl fmt::Display for RuleShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
        write!(f, "{}({}) <- {}", self.head, params.join(", "), self.body)
    }
}

/// A rooted rewriting system with precomputed rule shapes.
#[derive(Clone, Debug)]
pub struct PreparedSystem {
    pub components: Vec<ComponentType>,
    pub rules: Vec<RuleShape>,
    pub kappa: usize,
}

/// Maximum number of predicate atoms over rule bodies, at least one.
pub fn branching_degree(system: &RewritingSystem) -> usize {
    system.rules.iter().map(|r| r.body.pred_atoms().len()).max().unwrap_or(0).max(1)
}

impl PreparedSystem {
    pub fn new(components: Vec<ComponentType>, rooted: &RewritingSystem) -> Result<PreparedSystem, RewriteError> {
        match rooted.rules.first() {
            Some(r) if r.head == ROOT_PRED && r.params.is_empty() => {}
            _ => return Err(RewriteError::MissingRoot),
        }
        let mut rules = Vec::new();
        for (index, r) in rooted.rules.iter().enumerate() {
            let flat = FlatTerm::of(&r.body);
            let var_of = |s: &Symbol| s.as_var().cloned().unwrap_or_else(|| Var::new(s.to_string()));
            let instances = r
                .body
                .instance_atoms()
                .into_iter()
                .map(|(c, s)| {
                    if components.iter().any(|t| t.name == c) {
                        Ok((c.to_string(), var_of(s)))
                    } else {
                        Err(RewriteError::UnknownComponent(c.to_string()))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            let preds = r
                .body
                .pred_atoms()
                .into_iter()
                .map(|(n, args)| (n.to_string(), args.iter().map(var_of).collect()))
                .collect();
            rules.push(RuleShape {
                index,
                head: r.head.clone(),
                params: r.params.clone(),
                body: r.body.clone(),
                binders: flat.binders.clone(),
                flat,
                instances,
                preds,
            });
        }
        Ok(PreparedSystem { components, rules, kappa: branching_degree(rooted) })
    }

    pub fn rules_for<'a>(&'a self, head: &'a str) -> impl Iterator<Item = &'a RuleShape> + 'a {
        self.rules.iter().filter(move |r| r.head == head)
    }

    pub fn component(&self, name: &str) -> Option<&ComponentType> {
        self.components.iter().find(|c| c.name == name)
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }
}

/// A rule-labeled tree; labels are 0-based rule indices.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RewritingTree {
    labels: BTreeMap<Node, usize>,
}

impl RewritingTree {
    pub fn from_labels(labels: BTreeMap<Node, usize>) -> RewritingTree {
        RewritingTree { labels }
    }

    pub fn labels(&self) -> &BTreeMap<Node, usize> {
        &self.labels
    }

    pub fn label(&self, w: &Node) -> Option<usize> {
        self.labels.get(w).copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.labels.keys()
    }

    pub fn contains(&self, w: &Node) -> bool {
        self.labels.contains_key(w)
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn depth(&self) -> usize {
        self.labels.keys().map(Node::depth).max().unwrap_or(0)
    }
}

impl fmt::Debug for RewritingTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.labels.iter().map(|(n, r)| format!("{n}:r{}", r + 1)).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

struct Sub {
    rule: usize,
    children: Vec<Rc<Sub>>,
}

impl Sub {
    fn into_labels(&self, at: Node, out: &mut BTreeMap<Node, usize>) {
        out.insert(at.clone(), self.rule);
        for (i, c) in self.children.iter().enumerate() {
            c.into_labels(at.child(i as u8), out);
        }
    }
}

/// Trees of a system in nondecreasing size; equal sizes are ordered by their
/// preorder label sequences.
pub struct TreeEnumerator<'a> {
    sys: &'a PreparedSystem,
    max_nodes: usize,
    next_size: usize,
    pending: VecDeque<RewritingTree>,
    memo: HashMap<(String, usize), Rc<Vec<Rc<Sub>>>>,
}

impl TreeEnumerator<'_> {
    fn subtrees(&mut self, pred: &str, size: usize) -> Rc<Vec<Rc<Sub>>> {
        let key = (pred.to_string(), size);
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        // guard against unproductive recursion through the same key
        self.memo.insert(key.clone(), Rc::new(Vec::new()));
        let mut out = Vec::new();
        let sys = self.sys;
        for r in sys.rules_for(pred) {
            let k = r.npred();
            if k == 0 {
                if size == 1 {
                    out.push(Rc::new(Sub { rule: r.index, children: Vec::new() }));
                }
                continue;
            }
            if size < 1 + k {
                continue;
            }
            for parts in compositions(size - 1, k) {
                let mut combos: Vec<Vec<Rc<Sub>>> = vec![Vec::new()];
                for ((name, _), n) in r.preds.iter().zip(&parts) {
                    let options = self.subtrees(name, *n);
                    let mut next = Vec::new();
                    for prefix in &combos {
                        for o in options.iter() {
                            let mut p = prefix.clone();
                            p.push(o.clone());
                            next.push(p);
                        }
                    }
                    combos = next;
                    if combos.is_empty() {
                        break;
                    }
                }
                for children in combos {
                    out.push(Rc::new(Sub { rule: r.index, children }));
                }
            }
        }
        let v = Rc::new(out);
        self.memo.insert(key, v.clone());
        v
    }
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl Iterator for TreeEnumerator<'_> {
    type Item = RewritingTree;

    fn next(&mut self) -> Option<RewritingTree> {
        while self.pending.is_empty() {
            if self.next_size > self.max_nodes {
                return None;
            }
            let size = self.next_size;
            self.next_size += 1;
            let subs = self.subtrees(ROOT_PRED, size);
            let mut trees: Vec<(Vec<usize>, RewritingTree)> = subs
                .iter()
                .map(|s| {
                    let mut labels = BTreeMap::new();
                    s.into_labels(Node::root(), &mut labels);
                    (labels.values().copied().collect(), RewritingTree { labels })
                })
                .collect();
            trees.sort();
            self.pending.extend(trees.into_iter().map(|(_, t)| t));
        }
        self.pending.pop_front()
    }
}

pub fn enumerate_trees(sys: &PreparedSystem, max_nodes: usize) -> TreeEnumerator<'_> {
    TreeEnumerator { sys, max_nodes, next_size: 1, pending: VecDeque::new(), memo: HashMap::new() }
}

fn node_var(v: &Var, w: &Node) -> Var {
    if w.is_root() {
        v.clone()
    } else {
        Var::new(format!("{v}^{w}"))
    }
}

/// Splice child bodies into parent bodies along the tree, renaming the
/// binders of the rule at node `w` to `z^w`.
pub fn characteristic_term(sys: &PreparedSystem, tree: &RewritingTree) -> Term {
    char_at(sys, tree, &Node::root())
}

fn char_at(sys: &PreparedSystem, tree: &RewritingTree, w: &Node) -> Term {
    let r = &sys.rules[tree.label(w).expect("node in tree")];
    let body = r.body.rename_vars(&mut |v| if r.binders.contains(v) { node_var(v, w) } else { v.clone() });
    let mut i = 0u8;
    body.map_atoms(&mut |a| match a {
        Term::Pred { args, .. } => {
            let child = w.child(i);
            i += 1;
            let inner = char_at(sys, tree, &child);
            let crule = &sys.rules[tree.label(&child).expect("child in tree")];
            Substitution::from_pairs(crule.params.iter().cloned().zip(args.iter().cloned())).apply(&inner)
        }
        other => other.clone(),
    })
}

/// Global identity of a variable occurrence: the node binding it and its name.
pub type GlobalVar = (Node, Var);

/// For every node, the global variable each rule variable stands for.
pub fn global_env(sys: &PreparedSystem, tree: &RewritingTree) -> BTreeMap<Node, BTreeMap<Var, GlobalVar>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![(Node::root(), BTreeMap::new())];
    while let Some((w, inherited)) = stack.pop() {
        let r = &sys.rules[tree.label(&w).expect("node in tree")];
        let mut env: BTreeMap<Var, GlobalVar> = inherited;
        for z in &r.binders {
            env.insert(z.clone(), (w.clone(), z.clone()));
        }
        for (i, (_, args)) in r.preds.iter().enumerate() {
            let child = w.child(i as u8);
            if let Some(cl) = tree.label(&child) {
                let crule = &sys.rules[cl];
                let cenv = crule
                    .params
                    .iter()
                    .zip(args)
                    .filter_map(|(x, y)| env.get(y).map(|g| (x.clone(), g.clone())))
                    .collect();
                stack.push((child, cenv));
            }
        }
        out.insert(w, env);
    }
    out
}

/// A bounded instance of the parametric system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroundSystem {
    #[serde(skip)]
    pub components: Vec<ComponentType>,
    pub instances: BTreeMap<Node, String>,
    pub architecture: Architecture,
    pub initial: BTreeMap<Node, String>,
}

impl GroundSystem {
    pub fn component_of(&self, node: &Node) -> Option<&ComponentType> {
        let name = self.instances.get(node)?;
        self.components.iter().find(|c| &c.name == name)
    }

    /// Number of instances of the given component type.
    pub fn count_of(&self, ctype: &str) -> usize {
        self.instances.values().filter(|c| *c == ctype).count()
    }
}

/// Identifier of every instantiated global variable: the node of its atom.
fn identifiers(sys: &PreparedSystem, tree: &RewritingTree, env: &BTreeMap<Node, BTreeMap<Var, GlobalVar>>) -> Result<(BTreeMap<GlobalVar, Node>, BTreeMap<Node, String>), RewriteError> {
    let mut ids: BTreeMap<GlobalVar, Node> = BTreeMap::new();
    let mut instances = BTreeMap::new();
    for (w, &label) in tree.labels() {
        let r = &sys.rules[label];
        if r.instances.len() > 1 {
            return Err(RewriteError::SharedNode(w.clone()));
        }
        for (ctype, x) in &r.instances {
            let g = env[w].get(x).cloned().unwrap_or_else(|| (w.clone(), x.clone()));
            if let Some(first) = ids.get(&g) {
                return Err(RewriteError::DoubleInstantiation { var: x.clone(), first: first.clone(), second: w.clone() });
            }
            ids.insert(g, w.clone());
            instances.insert(w.clone(), ctype.clone());
        }
    }
    Ok((ids, instances))
}

/// Instances sit at the nodes of their atoms; the architecture is the
/// semantics of the flattened characteristic term under that grounding.
pub fn ground_system(sys: &PreparedSystem, tree: &RewritingTree) -> Result<GroundSystem, RewriteError> {
    let env = global_env(sys, tree);
    let (ids, instances) = identifiers(sys, tree, &env)?;
    let ground: Substitution =
        Substitution::from_pairs(ids.iter().map(|((w, z), node)| (node_var(z, w), Symbol::Id(node.clone()))));
    let flat = FlatTerm::of(&flatten(&characteristic_term(sys, tree))?);
    let arch = flat.arch.map_symbols(&mut |s| ground.symbol(s));
    let architecture = arch_semantics(&arch).map_err(|e| match e {
        TermError::NonGround(v) => RewriteError::UninstantiatedPort(v),
        other => other.into(),
    })?;
    for inter in &architecture {
        for (port, node) in inter {
            let ctype = &instances[node];
            let owner = sys.component(ctype).ok_or_else(|| RewriteError::UnknownComponent(ctype.clone()))?;
            if !owner.has_port(port) {
                return Err(RewriteError::PortTypeMismatch { port: port.clone(), node: node.clone(), ctype: ctype.clone() });
            }
        }
    }
    let mut initial = BTreeMap::new();
    for (node, ctype) in &instances {
        let c = sys.component(ctype).ok_or_else(|| RewriteError::UnknownComponent(ctype.clone()))?;
        initial.insert(node.clone(), c.init.clone());
    }
    Ok(GroundSystem { components: sys.components.clone(), instances, architecture, initial })
}

/// A ground term with identifiers numbered by the order of their instance
/// atoms in the flattened characteristic term.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalGround {
    pub instances: Vec<String>,
    pub interactions: BTreeSet<BTreeSet<(String, usize)>>,
}

/// The ground term denoted by a tree, computed from ν-semantics alone.
/// Returns `None` when some variable is instantiated more than once (the
/// ground set is then empty).
pub fn canonical_ground_term(sys: &PreparedSystem, tree: &RewritingTree) -> Result<Option<CanonicalGround>, RewriteError> {
    let flat = FlatTerm::of(&flatten(&characteristic_term(sys, tree))?);
    let mut index: BTreeMap<Var, usize> = BTreeMap::new();
    let mut instances = Vec::new();
    for a in &flat.atoms {
        if let Term::Instance { ctype, sym: Symbol::Var(v) } = a {
            if index.insert(v.clone(), instances.len()).is_some() {
                return Ok(None);
            }
            instances.push(ctype.clone());
        }
    }
    let mut interactions = BTreeSet::new();
    for p in flat.arch.products() {
        let mut inter = BTreeSet::new();
        for r in p {
            let v = r.sym.as_var().cloned().unwrap_or_else(|| Var::new(r.sym.to_string()));
            let i = *index.get(&v).ok_or(RewriteError::UninstantiatedPort(v))?;
            inter.insert((r.port.clone(), i));
        }
        interactions.insert(inter);
    }
    Ok(Some(CanonicalGround { instances, interactions }))
}

type Signature = (usize, Vec<Vec<(String, usize, bool)>>);

impl CanonicalGround {
    /// Color classes of the identifiers, refined by the interactions they
    /// take part in until stable. Class numbers depend only on the structure.
    fn refine(&self, mut colors: Vec<usize>) -> Vec<usize> {
        let mut classes = colors.iter().collect::<BTreeSet<_>>().len();
        loop {
            let sigs: Vec<Signature> = (0..colors.len())
                .map(|i| {
                    let mut around: Vec<Vec<(String, usize, bool)>> = self
                        .interactions
                        .iter()
                        .filter(|inter| inter.iter().any(|(_, j)| *j == i))
                        .map(|inter| {
                            let mut v: Vec<_> = inter.iter().map(|(p, j)| (p.clone(), colors[*j], *j == i)).collect();
                            v.sort();
                            v
                        })
                        .collect();
                    around.sort();
                    (colors[i], around)
                })
                .collect();
            let ranks: BTreeMap<&Signature, usize> =
                sigs.iter().collect::<BTreeSet<_>>().into_iter().enumerate().map(|(k, s)| (s, k)).collect();
            colors = sigs.iter().map(|s| ranks[s]).collect();
            if ranks.len() == classes {
                return colors;
            }
            classes = ranks.len();
        }
    }

    fn relabel(&self, colors: &[usize]) -> CanonicalGround {
        let mut instances = vec![String::new(); colors.len()];
        for (i, &c) in colors.iter().enumerate() {
            instances[c] = self.instances[i].clone();
        }
        let interactions = self
            .interactions
            .iter()
            .map(|inter| inter.iter().map(|(p, j)| (p.clone(), colors[*j])).collect())
            .collect();
        CanonicalGround { instances, interactions }
    }

    fn swap_is_automorphism(&self, a: usize, b: usize) -> bool {
        let swap = |j: usize| if j == a { b } else if j == b { a } else { j };
        self.instances[a] == self.instances[b]
            && self.interactions.iter().all(|inter| {
                let image: BTreeSet<(String, usize)> = inter.iter().map(|(p, j)| (p.clone(), swap(*j))).collect();
                self.interactions.contains(&image)
            })
    }

    fn search(&self, colors: Vec<usize>) -> CanonicalGround {
        let colors = self.refine(colors);
        let mut count = vec![0usize; colors.len()];
        for &c in &colors {
            count[c] += 1;
        }
        let Some(tied) = (0..count.len()).find(|&c| count[c] > 1) else {
            return self.relabel(&colors);
        };
        // swapping twins is an automorphism, so one of each twin class suffices
        let mut picked: Vec<usize> = Vec::new();
        for m in (0..colors.len()).filter(|&m| colors[m] == tied) {
            if !picked.iter().any(|&k| self.swap_is_automorphism(k, m)) {
                picked.push(m);
            }
        }
        picked
            .into_iter()
            .map(|m| self.search(colors.iter().enumerate().map(|(i, &c)| 2 * c + usize::from(i != m)).collect()))
            .min()
            .expect("a tied class has members")
    }

    /// A representative shared by exactly the ground terms that differ only
    /// in how identifiers are numbered.
    pub fn up_to_renaming(&self) -> CanonicalGround {
        let types: BTreeMap<&String, usize> =
            self.instances.iter().collect::<BTreeSet<_>>().into_iter().enumerate().map(|(k, t)| (t, k)).collect();
        self.search(self.instances.iter().map(|t| types[t]).collect())
    }
}

/// `T_i` = nodes labeled by rule `i` (0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSets(pub Vec<BTreeSet<Node>>);

pub fn tree_to_param_sets(sys: &PreparedSystem, tree: &RewritingTree) -> ParamSets {
    let mut sets = vec![BTreeSet::new(); sys.rules.len()];
    for (w, &r) in tree.labels() {
        sets[r].insert(w.clone());
    }
    ParamSets(sets)
}

pub fn param_sets_to_tree(sys: &PreparedSystem, sets: &ParamSets) -> Result<RewritingTree, RewriteError> {
    let bad = |m: String| Err(RewriteError::Incompatible(m));
    if sets.0.len() != sys.rules.len() {
        return bad(format!("expected {} sets, got {}", sys.rules.len(), sets.0.len()));
    }
    if sets.0[0] != BTreeSet::from([Node::root()]) {
        return bad("the root rule must label exactly the root".into());
    }
    let mut labels = BTreeMap::new();
    for (i, s) in sets.0.iter().enumerate() {
        for w in s {
            if let Some(j) = labels.insert(w.clone(), i) {
                return bad(format!("node {w} labeled by both r{} and r{}", j + 1, i + 1));
            }
        }
    }
    for (w, &i) in &labels {
        let r = &sys.rules[i];
        for k in 0..r.npred() {
            if !labels.contains_key(&w.child(k as u8)) {
                return bad(format!("node {w} lacks child {k}"));
            }
        }
        if let Some(parent) = w.parent() {
            let Some(&p) = labels.get(&parent) else {
                return bad(format!("node {w} has no parent in the tree"));
            };
            let alpha = w.last().expect("non-root") as usize;
            match sys.rules[p].preds.get(alpha) {
                None => return bad(format!("node {w} is beyond the predicate atoms of its parent")),
                Some((name, _)) if *name != r.head => {
                    return bad(format!("node {w} is labeled by a rule for `{}` but its parent expects `{name}`", r.head))
                }
                _ => {}
            }
        }
    }
    Ok(RewritingTree { labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_spec;
    use crate::normalize::isolate_instance_atoms;

    pub(crate) const RING: &str = "
        component CType { ports out, in; states q0 init, q1; rule q0 -out-> q1; rule q1 -in-> q0; }
        Chain(x1, x2) <- < out(x1).in(x2) > ( CType(x1), CType(x2) );
        Chain(x1, x2) <- new z . < out(x1).in(z) > ( CType(x1), Chain(z, x2) );
        root new y1 . new y2 . < out(y2).in(y1) > ( Chain(y1, y2) );
    ";

    fn ring() -> PreparedSystem {
        let s = parse_spec(RING).unwrap();
        PreparedSystem::new(s.components.clone(), &isolate_instance_atoms(&s.system.with_root(&s.root))).unwrap()
    }

    fn n(s: &str) -> Node {
        s.parse().unwrap()
    }

    #[test]
    fn ring_branching_and_trees() {
        let sys = ring();
        assert_eq!(sys.kappa, 1);
        let trees: Vec<RewritingTree> = enumerate_trees(&sys, 5).collect();
        assert_eq!(trees.iter().map(|t| t.size()).collect::<Vec<_>>(), vec![3, 4, 5]);
        assert_eq!(enumerate_trees(&sys, 0).count(), 0);
    }

    #[test]
    fn predicate_less_root_has_unit_degree() {
        let s = parse_spec(
            "component C { ports p; states a init; rule a -p-> a; }
             root new x . < p(x) > ( C(x) );",
        )
        .unwrap();
        let sys = PreparedSystem::new(s.components.clone(), &s.system.with_root(&s.root)).unwrap();
        assert_eq!(sys.kappa, 1);
        let trees: Vec<_> = enumerate_trees(&sys, 3).collect();
        assert_eq!(trees.len(), 1);
        assert_eq!(characteristic_term(&sys, &trees[0]), s.root);
        let g = ground_system(&sys, &trees[0]).unwrap();
        assert_eq!(g.instances.len(), 1);
        assert_eq!(g.architecture.len(), 1);
    }

    #[test]
    fn ring_of_three_architecture() {
        let sys = ring();
        let tree = enumerate_trees(&sys, 4).find(|t| t.size() == 4).unwrap();
        let g = ground_system(&sys, &tree).unwrap();
        let (a, b, c) = (n("0"), n("00"), n("000"));
        let link = |x: &Node, y: &Node| BTreeSet::from([("out".to_string(), x.clone()), ("in".to_string(), y.clone())]);
        assert_eq!(g.architecture, BTreeSet::from([link(&a, &b), link(&b, &c), link(&c, &a)]));
        assert!(g.initial.values().all(|s| s == "q0"));
    }

    #[test]
    fn ring_of_two_characteristic_term() {
        let sys = ring();
        let tree = enumerate_trees(&sys, 3).next().unwrap();
        let t = flatten(&characteristic_term(&sys, &tree)).unwrap();
        let flat = FlatTerm::of(&t);
        assert_eq!(flat.binders, vec![Var::new("y1"), Var::new("y2")]);
        assert_eq!(flat.arch.to_string(), "in(y1).out(y2) + in(y2).out(y1)");
        assert_eq!(flat.atoms.len(), 2);
    }

    #[test]
    fn param_sets_round_trip_and_rejections() {
        let sys = ring();
        for tree in enumerate_trees(&sys, 7) {
            let sets = tree_to_param_sets(&sys, &tree);
            assert_eq!(param_sets_to_tree(&sys, &sets).unwrap(), tree);
        }
        let tree = enumerate_trees(&sys, 3).next().unwrap();
        let mut sets = tree_to_param_sets(&sys, &tree);
        sets.0[0].insert(n("0"));
        assert!(matches!(param_sets_to_tree(&sys, &sets), Err(RewriteError::Incompatible(_))));
        // relabel the chain node by the wrapper rule: head mismatch
        let mut sets = tree_to_param_sets(&sys, &tree);
        let chain = sets.0.iter().position(|s| s.contains(&n("0"))).unwrap();
        sets.0[chain].remove(&n("0"));
        sets.0[3].insert(n("0"));
        assert!(matches!(param_sets_to_tree(&sys, &sets), Err(RewriteError::Incompatible(_))));
    }

    #[test]
    fn compositions_cover_sums() {
        assert_eq!(compositions(3, 2), vec![vec![1, 2], vec![2, 1]]);
        assert_eq!(compositions(1, 2), Vec::<Vec<usize>>::new());
    }

    #[test]
    fn renaming_invariant_form() {
        let ring = |order: [usize; 3]| CanonicalGround {
            instances: vec!["C".into(); 3],
            interactions: (0..3)
                .map(|k| BTreeSet::from([("out".to_string(), order[k]), ("in".to_string(), order[(k + 1) % 3])]))
                .collect(),
        };
        let a = ring([0, 1, 2]).up_to_renaming();
        assert_eq!(a, ring([2, 0, 1]).up_to_renaming());
        assert_eq!(a, ring([1, 0, 2]).up_to_renaming());
        let mut path = ring([0, 1, 2]);
        let last = path.interactions.iter().next_back().cloned().unwrap();
        path.interactions.remove(&last);
        assert_ne!(a, path.up_to_renaming());
    }

    #[test]
    fn symmetric_leaves_are_canonized() {
        // a hub at `hub` linked to nine leaves, one of which also talks to itself
        let star = |hub: usize, loner: usize| {
            let mut instances = vec!["Leaf".to_string(); 10];
            instances[hub] = "Hub".into();
            let mut interactions: BTreeSet<BTreeSet<(String, usize)>> = (0..10)
                .filter(|&k| k != hub)
                .map(|k| BTreeSet::from([("h".to_string(), hub), ("l".to_string(), k)]))
                .collect();
            interactions.insert(BTreeSet::from([("l".to_string(), loner)]));
            CanonicalGround { instances, interactions }
        };
        let a = star(0, 1).up_to_renaming();
        assert_eq!(a, star(9, 4).up_to_renaming());
        assert_eq!(a, star(5, 0).up_to_renaming());
        let mut plain = star(0, 1);
        plain.interactions.remove(&BTreeSet::from([("l".to_string(), 1)]));
        assert_ne!(a, plain.up_to_renaming());
    }
}
