//! Normalization of rewriting systems: instance-atom isolation and
//! instantiation-count subscripting of predicates.
//!
//! Each predicate `A` is split into copies `A_c` where `c` records, for every
//! parameter, whether the rewritings of that copy instantiate it zero times,
//! exactly once, or several times. Copies are derived bottom-up by a least
//! fixpoint and only those reachable from the root rule are kept.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::system::{RewritingSystem, Rule, ROOT_PRED};
use crate::term::{Symbol, Term, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Count {
    Zero,
    One,
    Many,
}

impl Count {
    pub fn of(n: usize) -> Count {
        match n {
            0 => Count::Zero,
            1 => Count::One,
            _ => Count::Many,
        }
    }

    pub fn add(self, other: Count) -> Count {
        match (self, other) {
            (Count::Zero, c) | (c, Count::Zero) => c,
            _ => Count::Many,
        }
    }

    fn digit(self) -> char {
        match self {
            Count::Zero => '0',
            Count::One => '1',
            Count::Many => '2',
        }
    }
}

/// Parameter positions (1-based) instantiated exactly once in every
/// predicate-less rewriting of a predicate.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct InstantiationProfile(pub BTreeMap<String, BTreeSet<usize>>);

impl InstantiationProfile {
    pub fn get(&self, pred: &str) -> Option<&BTreeSet<usize>> {
        self.0.get(pred)
    }
}

#[derive(Clone, Debug)]
pub struct NormalizedSystem {
    /// Normalized rules; the first one is the root rule.
    pub system: RewritingSystem,
    /// `A(x⃗) <- A_c(x⃗)` for every reachable copy `A_c`.
    pub bridges: Vec<Rule>,
    pub profile: InstantiationProfile,
    /// Count vector certified by each predicate of the normalized system.
    pub counts: BTreeMap<String, Vec<Count>>,
    /// Original predicate of each normalized predicate.
    pub origin: BTreeMap<String, String>,
}

impl NormalizedSystem {
    pub fn root(&self) -> &Term {
        &self.system.rules[0].body
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NormalizeError {
    #[error("no rewriting of the root term instantiates every bound variable at most once")]
    NotNormalizable,
    #[error("bound variable `{var}` of a rule for `{pred}` is never instantiated")]
    NeverInstantiated { pred: String, var: Var },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("variable `{var}` is instantiated {count:?} times in `{rule}`")]
pub struct Assumption1Violation {
    pub rule: String,
    pub var: Var,
    pub count: Count,
}

/// Replace all but the first instance atom of each body by a wrapper
/// predicate `Wrap_B(x) <- B(x)`.
pub fn isolate_instance_atoms(system: &RewritingSystem) -> RewritingSystem {
    let heads: BTreeSet<String> = system.rules.iter().map(|r| r.head.clone()).collect();
    let mut wrappers: Vec<(String, String)> = Vec::new();
    let wrapper_for = |ctype: &str, wrappers: &mut Vec<(String, String)>| -> String {
        if let Some((_, w)) = wrappers.iter().find(|(c, _)| c == ctype) {
            return w.clone();
        }
        let mut name = format!("Wrap_{ctype}");
        while heads.contains(&name) {
            name.push('_');
        }
        wrappers.push((ctype.to_string(), name.clone()));
        name
    };
    let mut rules = Vec::new();
    for r in &system.rules {
        let mut seen = 0usize;
        let body = r.body.map_atoms(&mut |a| match a {
            Term::Instance { ctype, sym } => {
                seen += 1;
                if seen == 1 {
                    a.clone()
                } else {
                    Term::pred(&wrapper_for(ctype, &mut wrappers), vec![sym.clone()])
                }
            }
            other => other.clone(),
        });
        rules.push(Rule::new(&r.head, r.params.clone(), body));
    }
    for (ctype, name) in wrappers {
        let x = Var::new("x");
        rules.push(Rule::new(&name, vec![x.clone()], Term::instance(&ctype, Symbol::Var(x))));
    }
    RewritingSystem::new(rules)
}

struct Shape {
    head: String,
    params: Vec<Var>,
    bound: Vec<Var>,
    instances: BTreeMap<Var, usize>,
    preds: Vec<(String, Vec<Var>)>,
}

impl Shape {
    fn of(r: &Rule) -> Shape {
        let mut instances = BTreeMap::new();
        for (_, s) in r.body.instance_atoms() {
            if let Symbol::Var(v) = s {
                *instances.entry(v.clone()).or_insert(0) += 1;
            }
        }
        let preds = r
            .body
            .pred_atoms()
            .into_iter()
            .map(|(n, args)| (n.to_string(), args.iter().filter_map(|s| s.as_var().cloned()).collect()))
            .collect();
        Shape { head: r.head.clone(), params: r.params.clone(), bound: r.body.bound_vars(), instances, preds }
    }

    /// Counts of every variable given count vectors for the predicate atoms.
    fn counts(&self, children: &[&Vec<Count>]) -> BTreeMap<Var, Count> {
        let mut out: BTreeMap<Var, Count> = self.instances.iter().map(|(v, n)| (v.clone(), Count::of(*n))).collect();
        for ((_, args), vec) in self.preds.iter().zip(children) {
            for (a, c) in args.iter().zip(vec.iter()) {
                let e = out.entry(a.clone()).or_insert(Count::Zero);
                *e = e.add(*c);
            }
        }
        out
    }

    fn head_vector(&self, counts: &BTreeMap<Var, Count>) -> Vec<Count> {
        self.params.iter().map(|p| counts.get(p).copied().unwrap_or(Count::Zero)).collect()
    }

    fn bound_count(&self, counts: &BTreeMap<Var, Count>) -> Option<(Var, Count)> {
        self.bound
            .iter()
            .map(|v| (v.clone(), counts.get(v).copied().unwrap_or(Count::Zero)))
            .find(|(_, c)| *c != Count::One)
    }
}

/// Cartesian product of the achievable vectors of the predicate atoms.
fn combinations<'a>(shape: &Shape, achievable: &'a BTreeMap<String, BTreeSet<Vec<Count>>>) -> Vec<Vec<&'a Vec<Count>>> {
    let mut acc: Vec<Vec<&Vec<Count>>> = vec![Vec::new()];
    for (name, _) in &shape.preds {
        let Some(options) = achievable.get(name) else { return Vec::new() };
        let mut next = Vec::new();
        for prefix in &acc {
            for o in options {
                let mut p = prefix.clone();
                p.push(o);
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}

fn achievable_vectors(shapes: &[Shape]) -> BTreeMap<String, BTreeSet<Vec<Count>>> {
    let mut achievable: BTreeMap<String, BTreeSet<Vec<Count>>> = BTreeMap::new();
    loop {
        let mut changed = false;
        for s in shapes {
            let mut found = Vec::new();
            for combo in combinations(s, &achievable) {
                let counts = s.counts(&combo);
                if matches!(s.bound_count(&counts), Some((_, Count::Many))) {
                    continue;
                }
                found.push(s.head_vector(&counts));
            }
            let set = achievable.entry(s.head.clone()).or_default();
            for v in found {
                changed |= set.insert(v);
            }
        }
        if !changed {
            return achievable;
        }
    }
}

fn subscript_name(pred: &str, vec: &[Count]) -> String {
    if vec.is_empty() {
        return pred.to_string();
    }
    let digits: String = vec.iter().map(|c| c.digit()).collect();
    format!("{pred}_{digits}")
}

/// Split predicates by instantiation counts. `system` must not contain the
/// root rule; `root` is the closed initial term.
pub fn normalize(system: &RewritingSystem, root: &Term) -> Result<NormalizedSystem, NormalizeError> {
    let rooted = system.with_root(root);
    let shapes: Vec<Shape> = rooted.rules.iter().map(Shape::of).collect();
    let achievable = achievable_vectors(&shapes);
    if achievable.get(ROOT_PRED).is_none_or(|s| s.is_empty()) {
        return Err(NormalizeError::NotNormalizable);
    }

    let originals: BTreeSet<&str> = rooted.rules.iter().map(|r| r.head.as_str()).collect();
    let mut names: BTreeMap<(String, Vec<Count>), String> = BTreeMap::new();
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut name_of = |pred: &str, vec: &[Count]| -> String {
        let key = (pred.to_string(), vec.to_vec());
        if let Some(n) = names.get(&key) {
            return n.clone();
        }
        let mut name = subscript_name(pred, vec);
        while taken.contains(&name) || (name != pred && originals.contains(name.as_str())) {
            name.push('_');
        }
        taken.insert(name.clone());
        names.insert(key, name.clone());
        name
    };

    let mut queue: VecDeque<(String, Vec<Count>)> = VecDeque::from([(ROOT_PRED.to_string(), Vec::new())]);
    let mut visited: BTreeSet<(String, Vec<Count>)> = queue.iter().cloned().collect();
    let mut rules = Vec::new();
    let mut counts = BTreeMap::new();
    let mut origin = BTreeMap::new();
    while let Some((pred, vec)) = queue.pop_front() {
        let head = name_of(&pred, &vec);
        counts.insert(head.clone(), vec.clone());
        origin.insert(head.clone(), pred.clone());
        for (rule, shape) in rooted.rules.iter().zip(&shapes).filter(|(r, _)| r.head == pred) {
            for combo in combinations(shape, &achievable) {
                let cs = shape.counts(&combo);
                if shape.head_vector(&cs) != vec {
                    continue;
                }
                match shape.bound_count(&cs) {
                    Some((_, Count::Many)) => continue,
                    Some((var, _)) => return Err(NormalizeError::NeverInstantiated { pred: pred.clone(), var }),
                    None => {}
                }
                let mut k = 0;
                let body = rule.body.map_atoms(&mut |a| match a {
                    Term::Pred { name, args } => {
                        let child = combo[k].clone();
                        k += 1;
                        let key = (name.clone(), child.clone());
                        let renamed = name_of(name, &child);
                        if visited.insert(key.clone()) {
                            queue.push_back(key);
                        }
                        Term::pred(&renamed, args.clone())
                    }
                    other => other.clone(),
                });
                rules.push(Rule::new(&head, rule.params.clone(), body));
            }
        }
    }

    let mut profile = BTreeMap::new();
    for (pred, vecs) in &achievable {
        let positions = (0..vecs.iter().next().map_or(0, |v| v.len()))
            .filter(|&i| vecs.iter().all(|v| v[i] == Count::One))
            .map(|i| i + 1)
            .collect();
        profile.insert(pred.clone(), positions);
    }
    for (name, vec) in &counts {
        let ones = vec.iter().enumerate().filter(|(_, c)| **c == Count::One).map(|(i, _)| i + 1).collect();
        profile.entry(name.clone()).or_insert(ones);
    }

    let mut bridges = Vec::new();
    for (name, pred) in &origin {
        if name == pred {
            continue;
        }
        if let Some(r) = rooted.rules.iter().find(|r| &r.head == pred) {
            let args = r.params.iter().cloned().map(Symbol::Var).collect();
            bridges.push(Rule::new(pred, r.params.clone(), Term::pred(name, args)));
        }
    }

    Ok(NormalizedSystem {
        system: RewritingSystem::new(rules),
        bridges,
        profile: InstantiationProfile(profile),
        counts,
        origin,
    })
}

/// Decide statically that every bound variable of every normalized rule is
/// instantiated exactly once, every body holds at most one instance atom and
/// every head agrees with the counts it certifies.
pub fn check_assumption1(ns: &NormalizedSystem) -> Result<(), Assumption1Violation> {
    for r in &ns.system.rules {
        let shape = Shape::of(r);
        let vectors: Vec<&Vec<Count>> = shape
            .preds
            .iter()
            .map(|(n, args)| ns.counts.get(n).filter(|v| v.len() == args.len()))
            .collect::<Option<_>>()
            .ok_or_else(|| Assumption1Violation {
                rule: r.to_string(),
                var: Var::new("?"),
                count: Count::Zero,
            })?;
        let counts = shape.counts(&vectors);
        if let Some((var, count)) = shape.bound_count(&counts) {
            return Err(Assumption1Violation { rule: r.to_string(), var, count });
        }
        if let Some(declared) = ns.counts.get(&r.head) {
            for (p, want) in shape.params.iter().zip(declared) {
                let got = counts.get(p).copied().unwrap_or(Count::Zero);
                if got != *want {
                    return Err(Assumption1Violation { rule: r.to_string(), var: p.clone(), count: got });
                }
            }
        }
        if let Some((v, n)) = shape.instances.iter().find(|(_, n)| **n > 1) {
            return Err(Assumption1Violation { rule: r.to_string(), var: v.clone(), count: Count::of(*n) });
        }
        if r.body.instance_atoms().len() > 1 {
            let (_, s) = r.body.instance_atoms()[1];
            let var = s.as_var().cloned().unwrap_or_else(|| Var::new("?"));
            return Err(Assumption1Violation { rule: r.to_string(), var, count: Count::Many });
        }
    }
    Ok(())
}

impl fmt::Display for NormalizedSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in self.system.user_rules() {
            writeln!(f, "{r}")?;
        }
        for r in &self.bridges {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_spec;

    const RING: &str = "
        component CType { ports out, in; states q0 init, q1; rule q0 -out-> q1; rule q1 -in-> q0; }
        Ring() <- new y1 . new y2 . < out(y2).in(y1) > ( Chain(y1, y2) );
        Chain(x1, x2) <- < out(x1).in(x2) > ( CType(x1), CType(x2) );
        Chain(x1, x2) <- new y1 . < out(x1).in(y1) > ( CType(x1), Chain(y1, x2) );
        root Ring();
    ";

    fn split(sys: RewritingSystem) -> (RewritingSystem, Term) {
        let mut rules = sys.rules;
        let root = rules.remove(0);
        (RewritingSystem::new(rules), root.body)
    }

    #[test]
    fn ring_isolation_adds_one_wrapper() {
        let s = parse_spec(RING).unwrap();
        let iso = isolate_instance_atoms(&s.system.with_root(&s.root));
        // the nullary root predicate is inlined into the root rule
        assert_eq!(iso.rules.len(), 4);
        let w = iso.rules.last().unwrap();
        assert_eq!(w.head, "Wrap_CType");
        assert_eq!(w.to_string(), "Wrap_CType(x) <- CType(x);");
        assert_eq!(iso.rules[1].to_string(), "Chain(x1, x2) <- < in(x2).out(x1) > ( CType(x1), Wrap_CType(x2) );");
        assert!(iso.rules.iter().all(|r| r.body.instance_atoms().len() <= 1));
        // bodies without instance atoms are untouched
        assert_eq!(iso.rules[0].body, s.system.rules[0].body);
    }

    #[test]
    fn ring_normalizes_with_full_profile() {
        let s = parse_spec(RING).unwrap();
        let (sys, root) = split(isolate_instance_atoms(&s.system.with_root(&s.root)));
        let ns = normalize(&sys, &root).unwrap();
        assert_eq!(ns.profile.get("Chain"), Some(&BTreeSet::from([1, 2])));
        assert!(ns.counts.contains_key("Chain_11"));
        assert!(ns.system.rules.iter().any(|r| r.head == "Chain_11"));
        assert_eq!(ns.system.rules[0].head, ROOT_PRED);
        assert!(check_assumption1(&ns).is_ok());
        // every reachable copy certifies the full parameter set
        for (name, vec) in &ns.counts {
            assert!(vec.iter().all(|c| *c == Count::One), "{name}");
        }
    }

    #[test]
    fn double_instantiation_not_normalizable() {
        let s = parse_spec(
            "component C { ports p; states a init; rule a -p-> a; }
             A(x) <- < p(x) > ( B(x), D(x) );
             B(x) <- C(x);
             D(x) <- C(x);
             root new z . A(z);",
        )
        .unwrap();
        assert_eq!(normalize(&s.system, &s.root).unwrap_err(), NormalizeError::NotNormalizable);
    }

    #[test]
    fn never_instantiated_binder_rejected() {
        let s = parse_spec(
            "component C { ports p; states a init; rule a -p-> a; }
             A(x) <- new z . < p(x).p(z) > ( C(x) );
             root new y . A(y);",
        )
        .unwrap();
        let err = normalize(&s.system, &s.root).unwrap_err();
        assert!(matches!(err, NormalizeError::NeverInstantiated { ref var, .. } if var.0 == "z"));
    }

    #[test]
    fn dropped_binder_violates_assumption1() {
        let s = parse_spec(RING).unwrap();
        let (sys, root) = split(isolate_instance_atoms(&s.system.with_root(&s.root)));
        let mut ns = normalize(&sys, &root).unwrap();
        let r = ns.system.rules.iter_mut().find(|r| r.head == "Chain_11").unwrap();
        r.body = Term::nu(Var::new("dangling"), r.body.clone());
        let v = check_assumption1(&ns).unwrap_err();
        assert_eq!(v.var, Var::new("dangling"));
        assert_eq!(v.count, Count::Zero);
    }

    #[test]
    fn parameter_plumbing_with_zero_counts() {
        // `r` is passed down but only instantiated at the root
        let s = parse_spec(
            "component R { ports rp; states ri init; rule ri -rp-> ri; }
             component N { ports np; states ni init; rule ni -np-> ni; }
             Node(r, n) <- new a . < np(n).rp(r) > ( N(n), Node(r, a) );
             Node(r, n) <- < np(n).rp(r) > ( N(n) );
             root new r . new a . < rp(r) > ( R(r), Node(r, a) );",
        )
        .unwrap();
        let ns = normalize(&s.system, &s.root).unwrap();
        assert_eq!(ns.profile.get("Node"), Some(&BTreeSet::from([2])));
        assert!(ns.counts.contains_key("Node_01"));
        assert_eq!(ns.bridges.len(), 1);
        assert!(check_assumption1(&ns).is_ok());
    }
}
