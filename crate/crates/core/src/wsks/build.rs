//! Formula builders for rewriting trees, configurations, interactions,
//! traps and the safety condition.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};

use super::eval::Valuation;
use super::formula::{FoTerm, Formula, Wsks};
use super::WsksError;
use crate::automata::{AutomataFamily, Dir, PathAutomaton, QState};
use crate::component::{port_owner, ComponentType};
use crate::dsl::SafetyQuery;
use crate::node::Node;
use crate::rewriting::{tree_to_param_sets, PreparedSystem, RewritingTree, RuleShape};
use crate::term::Var;

/// Prefix of the configuration under scrutiny.
pub const STATE_X: &str = "Xs";
/// Prefixes of the two configurations quantified in traps and deadlocks.
pub const STATE_Y1: &str = "Ys1";
pub const STATE_Y2: &str = "Ys2";
const STATE_Y3: &str = "Ys3";
const STATE_Y4: &str = "Ys4";

/// Names of the set variables.
#[derive(Clone, Debug)]
pub struct VariableLayout {
    rules: usize,
    types: Vec<ComponentType>,
}

impl VariableLayout {
    pub fn new(sys: &PreparedSystem) -> VariableLayout {
        VariableLayout { rules: sys.rules.len(), types: sys.components.clone() }
    }

    /// Nodes labeled by rule `i` (0-based).
    pub fn rule_set(&self, i: usize) -> String {
        format!("U{}", i + 1)
    }

    pub fn rule_sets(&self) -> Vec<String> {
        (0..self.rules).map(|i| self.rule_set(i)).collect()
    }

    /// Instances of component type `j` (0-based).
    pub fn type_set(&self, j: usize) -> String {
        format!("Z{}", j + 1)
    }

    pub fn type_sets(&self) -> Vec<String> {
        (0..self.types.len()).map(|j| self.type_set(j)).collect()
    }

    /// Instances in `state` within the configuration named by `prefix`.
    pub fn state_set(&self, prefix: &str, state: &str) -> String {
        format!("{prefix}_{state}")
    }

    /// Every `(type index, state)` pair in declaration order.
    pub fn states(&self) -> Vec<(usize, String)> {
        self.types.iter().enumerate().flat_map(|(j, c)| c.states.iter().map(move |s| (j, s.clone()))).collect()
    }

    pub fn state_sets(&self, prefix: &str) -> Vec<String> {
        self.states().iter().map(|(_, s)| self.state_set(prefix, s)).collect()
    }

    /// Rule sets of a tree.
    pub fn tree_valuation(&self, sys: &PreparedSystem, tree: &RewritingTree) -> Valuation {
        let sets = tree_to_param_sets(sys, tree);
        Valuation {
            positions: BTreeMap::new(),
            sets: sets.0.into_iter().enumerate().map(|(i, s)| (self.rule_set(i), s)).collect(),
        }
    }

    /// State sets under `prefix` of a configuration mapping instances to states.
    pub fn configuration_sets(&self, prefix: &str, config: &BTreeMap<Node, String>) -> BTreeMap<String, BTreeSet<Node>> {
        let mut out: BTreeMap<String, BTreeSet<Node>> =
            self.states().into_iter().map(|(_, s)| (self.state_set(prefix, &s), BTreeSet::new())).collect();
        for (w, s) in config {
            out.entry(self.state_set(prefix, s)).or_default().insert(w.clone());
        }
        out
    }

    /// Inverse of [`configuration_sets`](Self::configuration_sets); `None`
    /// when some node holds two states.
    pub fn read_configuration(&self, prefix: &str, sets: &BTreeMap<String, BTreeSet<Node>>) -> Option<BTreeMap<Node, String>> {
        let mut out = BTreeMap::new();
        for (_, s) in self.states() {
            for w in sets.get(&self.state_set(prefix, &s)).into_iter().flatten() {
                if out.insert(w.clone(), s.clone()).is_some() {
                    return None;
                }
            }
        }
        Some(out)
    }

    /// Nodes visited in automaton state `q`.
    pub fn run_set(&self, q: &QState) -> String {
        let d = match q.dir {
            Dir::Up => "up",
            Dir::Down => "dn",
        };
        format!("R_{d}_r{}_{}", q.rule + 1, q.var)
    }
}

/// Interactions written in a rule body, as `(port, variable)` lists.
pub fn interactions_of(rule: &RuleShape) -> Vec<Vec<(String, Var)>> {
    rule.flat
        .arch
        .products()
        .iter()
        .map(|p| p.iter().map(|r| (r.port.clone(), r.sym.as_var().cloned().unwrap_or_else(|| Var::new(r.sym.to_string())))).collect())
        .collect()
}

/// Builds formulas for one system; first-order binders get fresh names from
/// a counter, so the output is a deterministic function of the call order.
pub struct Encoder<'a> {
    sys: &'a PreparedSystem,
    family: AutomataFamily,
    layout: VariableLayout,
    fresh: Cell<usize>,
}

impl<'a> Encoder<'a> {
    pub fn new(sys: &'a PreparedSystem) -> Encoder<'a> {
        Encoder { sys, family: AutomataFamily::new(sys), layout: VariableLayout::new(sys), fresh: Cell::new(0) }
    }

    pub fn layout(&self) -> &VariableLayout {
        &self.layout
    }

    pub fn family(&self) -> &AutomataFamily {
        &self.family
    }

    fn var(&self) -> String {
        let n = self.fresh.get();
        self.fresh.set(n + 1);
        format!("p{n}")
    }

    fn u(&self, i: usize, t: FoTerm) -> Formula {
        Formula::mem(t, self.layout.rule_set(i))
    }

    fn any_rule(&self, t: &FoTerm, filter: impl Fn(&RuleShape) -> bool) -> Formula {
        Formula::or(self.sys.rules.iter().filter(|r| filter(r)).map(|r| self.u(r.index, t.clone())))
    }

    /// Rule sets encode a rewriting tree: they are disjoint, the root rule
    /// labels exactly the root, the labeled nodes are closed under parents,
    /// and each labeled node has exactly the children its rule asks for,
    /// labeled by rules for the right predicates.
    pub fn rtree(&self) -> Formula {
        let kappa = self.sys.kappa as u8;
        let x = self.var();
        let xv = FoTerm::var(&x);
        let n = self.sys.rules.len();
        let mut disjoint = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                disjoint.push(Formula::not(Formula::and([self.u(i, xv.clone()), self.u(j, xv.clone())])));
            }
        }
        let root = Formula::iff(self.u(0, xv.clone()), Formula::eq(xv.clone(), FoTerm::Root));
        let closed = Formula::and((0..kappa).map(|a| {
            Formula::implies(self.any_rule(&FoTerm::succ(a, xv.clone()), |_| true), self.any_rule(&xv, |_| true))
        }));
        let children = Formula::and(self.sys.rules.iter().map(|r| {
            let mut need = Vec::new();
            for a in 0..kappa {
                let child = FoTerm::succ(a, xv.clone());
                match r.preds.get(usize::from(a)) {
                    Some((pred, _)) => need.push(self.any_rule(&child, |c| &c.head == pred)),
                    None => need.push(Formula::not(self.any_rule(&child, |_| true))),
                }
            }
            Formula::implies(self.u(r.index, xv.clone()), Formula::and(need))
        }));
        Formula::forall1(&x, Formula::and([Formula::and(disjoint), root, closed, children]))
    }

    /// Type sets hold exactly the nodes whose rule instantiates that type.
    pub fn inst(&self) -> Formula {
        let x = self.var();
        let xv = FoTerm::var(&x);
        Formula::forall1(
            &x,
            Formula::and(self.sys.components.iter().enumerate().map(|(j, c)| {
                Formula::iff(
                    Formula::mem(xv.clone(), self.layout.type_set(j)),
                    self.any_rule(&xv, |r| r.instances.iter().any(|(t, _)| *t == c.name)),
                )
            })),
        )
    }

    /// The state sets under `prefix` partition the instances, each instance
    /// being in a state of its own type.
    pub fn config(&self, prefix: &str) -> Formula {
        let x = self.var();
        let xv = FoTerm::var(&x);
        let states = self.layout.states();
        let in_state = |s: &str| Formula::mem(xv.clone(), self.layout.state_set(prefix, s));
        let mut disjoint = Vec::new();
        for (i, (_, s)) in states.iter().enumerate() {
            for (_, t) in &states[i + 1..] {
                disjoint.push(Formula::not(Formula::and([in_state(s), in_state(t)])));
            }
        }
        let covered = Formula::iff(
            Formula::or(states.iter().map(|(_, s)| in_state(s))),
            Formula::or((0..self.sys.components.len()).map(|j| Formula::mem(xv.clone(), self.layout.type_set(j)))),
        );
        let typed = Formula::and(
            states.iter().map(|(j, s)| Formula::implies(in_state(s), Formula::mem(xv.clone(), self.layout.type_set(*j)))),
        );
        Formula::forall1(&x, Formula::and([Formula::and(disjoint), covered, typed]))
    }

    /// The configuration under `prefix` is the initial one.
    pub fn init(&self, prefix: &str) -> Formula {
        let x = self.var();
        let xv = FoTerm::var(&x);
        let mut parts = Vec::new();
        for (j, c) in self.sys.components.iter().enumerate() {
            parts.push(Formula::iff(
                Formula::mem(xv.clone(), self.layout.type_set(j)),
                Formula::mem(xv.clone(), self.layout.state_set(prefix, &c.init)),
            ));
            for s in c.states.iter().filter(|s| **s != c.init) {
                parts.push(Formula::not(Formula::mem(xv.clone(), self.layout.state_set(prefix, s))));
            }
        }
        Formula::forall1(&x, Formula::and(parts))
    }

    /// `∃x. ∨_S A_S(x) ∧ B_S(x)`.
    pub fn inter(&self, a: &str, b: &str) -> Formula {
        let x = self.var();
        let xv = FoTerm::var(&x);
        Formula::exists1(
            &x,
            Formula::or(self.layout.states().iter().map(|(_, s)| {
                Formula::and([Formula::mem(xv.clone(), self.layout.state_set(a, s)), Formula::mem(xv.clone(), self.layout.state_set(b, s))])
            })),
        )
    }

    /// Run of `a` from `x` to `y`: disjoint run labels, an initial state at
    /// `x`, a final state at `y`, and forward and backward continuation at
    /// every other visited node.
    pub fn run(&self, a: &PathAutomaton, x: &str, y: &str) -> Formula {
        let names: Vec<String> = a.states.iter().map(|q| self.layout.run_set(q)).collect();
        let at = |q: usize, t: FoTerm| Formula::mem(t, names[q].clone());
        let (xv, yv) = (FoTerm::var(x), FoTerm::var(y));
        let z = self.var();
        let zv = FoTerm::var(&z);
        let mut disjoint = Vec::new();
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                disjoint.push(Formula::not(Formula::and([at(i, zv.clone()), at(j, zv.clone())])));
            }
        }
        let start = Formula::or(a.initial.iter().map(|&q| at(q, xv.clone())));
        let end = Formula::or(a.accepting.iter().map(|&q| at(q, yv.clone())));
        let parent_in = |alpha: u8, q: usize| {
            let p = self.var();
            Formula::exists1(
                &p,
                Formula::and([Formula::eq(FoTerm::succ(alpha, FoTerm::var(&p)), zv.clone()), at(q, FoTerm::var(&p))]),
            )
        };
        let forward = Formula::and((0..names.len()).map(|i| {
            let next = Formula::or(a.transitions.iter().filter(|t| t.0 == i).map(|&(_, alpha, d, j)| match d {
                Dir::Down => at(j, FoTerm::succ(alpha, zv.clone())),
                Dir::Up => parent_in(alpha, j),
            }));
            Formula::implies(Formula::and([at(i, zv.clone()), Formula::not(Formula::eq(zv.clone(), yv.clone()))]), next)
        }));
        let backward = Formula::and((0..names.len()).map(|j| {
            let prev = Formula::or(a.transitions.iter().filter(|t| t.3 == j).map(|&(i, alpha, d, _)| match d {
                Dir::Down => parent_in(alpha, i),
                Dir::Up => at(i, FoTerm::succ(alpha, zv.clone())),
            }));
            Formula::implies(Formula::and([at(j, zv.clone()), Formula::not(Formula::eq(zv.clone(), xv.clone()))]), prev)
        }));
        Formula::and([
            Formula::forall1(&z, Formula::and(disjoint)),
            start,
            end,
            Formula::forall1(&z, Formula::and([forward, backward])),
        ])
    }

    /// `∃R̄. run ∧ R̄ ⊆ U`: `z1` of rule `r1` at `x` and `z2` of rule `r2` at
    /// `y` denote the same identifier.
    pub fn path(&self, r1: usize, z1: &Var, r2: usize, z2: &Var, x: &str, y: &str) -> Formula {
        let Ok(a) = self.family.automaton(r1, z1, r2, z2) else { return Formula::False };
        if a.initial.is_empty() || a.accepting.is_empty() {
            return Formula::False;
        }
        let names: Vec<String> = a.states.iter().map(|q| self.layout.run_set(q)).collect();
        let z = self.var();
        let zv = FoTerm::var(&z);
        let within = Formula::forall1(
            &z,
            Formula::and(
                a.states
                    .iter()
                    .zip(&names)
                    .map(|(q, n)| Formula::implies(Formula::mem(zv.clone(), n.clone()), self.u(q.rule, zv.clone()))),
            ),
        );
        Formula::exists2_all(&names, Formula::and([self.run(&a, x, y), within]))
    }

    /// Configurations `a` and `b` are the pre and post sets of one
    /// interaction of the tree.
    pub fn flow(&self, a: &str, b: &str) -> Formula {
        let mut out = Vec::new();
        for r in &self.sys.rules {
            for inter in interactions_of(r) {
                out.push(self.iflow(r, &inter, a, b));
            }
        }
        Formula::or(out)
    }

    fn iflow(&self, r: &RuleShape, inter: &[(String, Var)], a: &str, b: &str) -> Formula {
        let y0 = self.var();
        let ys: Vec<String> = inter.iter().map(|_| self.var()).collect();
        let mut parts = vec![self.u(r.index, FoTerm::var(&y0))];
        for ((port, xk), yk) in inter.iter().zip(&ys) {
            let owner = port_owner(&self.sys.components, port).map(|j| self.sys.components[j].name.clone());
            let holds_owner = |r2: &RuleShape| r2.instances.iter().any(|(t, _)| Some(t) == owner.as_ref());
            // Implied by the path formulas; stated so that `yk` is visibly guarded.
            parts.push(self.any_rule(&FoTerm::var(yk), holds_owner));
            parts.push(Formula::or(self.sys.rules.iter().flat_map(|r2| {
                r2.instances
                    .iter()
                    .filter(|(t, _)| Some(t) == owner.as_ref())
                    .map(|(_, v)| self.path(r.index, xk, r2.index, v, &y0, yk))
                    .collect::<Vec<_>>()
            })));
        }
        let x = self.var();
        let xv = FoTerm::var(&x);
        let pinned = |prefix: &str, side: fn(&ComponentType, &str) -> Option<String>| {
            Formula::and(self.layout.states().iter().map(|(_, s)| {
                let hits = inter.iter().zip(&ys).filter(|((port, _), _)| {
                    self.sys.components.iter().any(|c| side(c, port).as_deref() == Some(s.as_str()))
                });
                Formula::iff(
                    Formula::mem(xv.clone(), self.layout.state_set(prefix, s)),
                    Formula::or(hits.map(|(_, yk)| Formula::eq(xv.clone(), FoTerm::var(yk)))),
                )
            }))
        };
        let pre = |c: &ComponentType, p: &str| c.pre(p).map(str::to_string);
        let post = |c: &ComponentType, p: &str| c.post(p).map(str::to_string);
        parts.push(Formula::forall1(&x, Formula::and([pinned(a, pre), pinned(b, post)])));
        let mut names = vec![y0];
        names.extend(ys);
        Formula::exists1_all(&names, Formula::and(parts))
    }

    /// Every interaction leaving a state of `prefix` enters one.
    pub fn trap(&self, prefix: &str) -> Formula {
        self.trap_with(prefix, STATE_Y1, STATE_Y2)
    }

    fn trap_with(&self, prefix: &str, y1: &str, y2: &str) -> Formula {
        let body = Formula::implies(Formula::and([self.flow(y1, y2), self.inter(prefix, y1)]), self.inter(prefix, y2));
        let mut names = self.layout.state_sets(y1);
        names.extend(self.layout.state_sets(y2));
        Formula::forall2_all(&names, body)
    }

    /// The configuration under `prefix` meets every trap marked initially.
    pub fn trapinv(&self, prefix: &str) -> Formula {
        let inner = Formula::implies(
            Formula::and([self.init(STATE_Y1), self.trap_with(STATE_Y2, STATE_Y3, STATE_Y4), self.inter(STATE_Y1, STATE_Y2)]),
            self.inter(prefix, STATE_Y2),
        );
        let mut ys = self.layout.state_sets(STATE_Y1);
        ys.extend(self.layout.state_sets(STATE_Y2));
        Formula::exists2_all(
            &self.layout.type_sets(),
            Formula::and([self.inst(), self.config(prefix), Formula::forall2_all(&ys, inner)]),
        )
    }

    /// No interaction is enabled in the configuration under `prefix`.
    pub fn deadlock(&self, prefix: &str) -> Formula {
        let x = self.var();
        let xv = FoTerm::var(&x);
        let leaves = Formula::exists1(
            &x,
            Formula::or(self.layout.states().iter().map(|(_, s)| {
                Formula::and([
                    Formula::mem(xv.clone(), self.layout.state_set(STATE_Y1, s)),
                    Formula::not(Formula::mem(xv.clone(), self.layout.state_set(prefix, s))),
                ])
            })),
        );
        let body = Formula::implies(self.flow(STATE_Y1, STATE_Y2), leaves);
        let mut names = self.layout.state_sets(STATE_Y1);
        names.extend(self.layout.state_sets(STATE_Y2));
        Formula::forall2_all(&names, body)
    }

    /// Pairwise distinct instances hold the listed states.
    pub fn pattern(&self, prefix: &str, items: &[(String, String)]) -> Result<Formula, WsksError> {
        let names: Vec<String> = items.iter().map(|_| self.var()).collect();
        let mut parts = Vec::new();
        for (i, (ty, st)) in items.iter().enumerate() {
            let known = self.sys.components.iter().any(|c| c.name == *ty && c.has_state(st));
            if !known {
                return Err(WsksError::UnsupportedQuery(format!("{ty}@{st}")));
            }
            parts.push(Formula::mem(FoTerm::var(&names[i]), self.layout.state_set(prefix, st)));
            for other in &names[..i] {
                parts.push(Formula::not(Formula::eq(FoTerm::var(&names[i]), FoTerm::var(other))));
            }
        }
        Ok(Formula::exists1_all(&names, Formula::and(parts)))
    }

    pub fn bad(&self, prefix: &str, query: &SafetyQuery) -> Result<Formula, WsksError> {
        match query {
            SafetyQuery::Deadlock => Ok(self.deadlock(prefix)),
            SafetyQuery::Pattern(items) => self.pattern(prefix, items),
        }
    }

    /// `RTree ∧ ∃X. TrapInv(X) ∧ Bad(X)` where `Bad` is the disjunction of
    /// the queries; unsatisfiable only if no instance of the system reaches
    /// a bad configuration.
    pub fn safe(&self, queries: &[SafetyQuery]) -> Result<Formula, WsksError> {
        let bad = queries.iter().map(|q| self.bad(STATE_X, q)).collect::<Result<Vec<_>, _>>()?;
        let body = Formula::and([self.trapinv(STATE_X), Formula::or(bad)]);
        Ok(Formula::and([self.rtree(), Formula::exists2_all(&self.layout.state_sets(STATE_X), body)]))
    }

    fn wrap(&self, f: Formula) -> Wsks {
        Wsks::new(self.sys.kappa, f).expect("builders respect κ and sorts")
    }
}

pub fn build_rtree(sys: &PreparedSystem) -> Wsks {
    let e = Encoder::new(sys);
    e.wrap(e.rtree())
}

pub fn build_inst(sys: &PreparedSystem) -> Wsks {
    let e = Encoder::new(sys);
    e.wrap(e.inst())
}

pub fn build_config(sys: &PreparedSystem) -> Wsks {
    let e = Encoder::new(sys);
    e.wrap(e.config(STATE_X))
}

pub fn build_init(sys: &PreparedSystem) -> Wsks {
    let e = Encoder::new(sys);
    e.wrap(e.init(STATE_X))
}

/// Flow between the configurations `Ys1_*` (before) and `Ys2_*` (after).
pub fn build_flow(sys: &PreparedSystem) -> Wsks {
    let e = Encoder::new(sys);
    e.wrap(e.flow(STATE_Y1, STATE_Y2))
}

/// Path formula with free positions `x` and `y`.
pub fn build_path_formula(sys: &PreparedSystem, r1: usize, z1: &Var, r2: usize, z2: &Var) -> Wsks {
    let e = Encoder::new(sys);
    e.wrap(e.path(r1, z1, r2, z2, "x", "y"))
}

/// `∃R̄. run(x, y)` for one automaton, without the rule-set guard.
pub fn build_run_formula(sys: &PreparedSystem, a: &PathAutomaton) -> Wsks {
    let e = Encoder::new(sys);
    let names: Vec<String> = a.states.iter().map(|q| e.layout.run_set(q)).collect();
    e.wrap(Formula::exists2_all(&names, e.run(a, "x", "y")))
}

pub fn build_trap(sys: &PreparedSystem) -> Wsks {
    let e = Encoder::new(sys);
    e.wrap(e.trap(STATE_X))
}

pub fn build_trapinv(sys: &PreparedSystem) -> Wsks {
    let e = Encoder::new(sys);
    e.wrap(e.trapinv(STATE_X))
}

pub fn build_deadlock(sys: &PreparedSystem) -> Wsks {
    let e = Encoder::new(sys);
    e.wrap(e.deadlock(STATE_X))
}

pub fn build_pattern(sys: &PreparedSystem, query: &SafetyQuery) -> Result<Wsks, WsksError> {
    let e = Encoder::new(sys);
    Ok(e.wrap(e.bad(STATE_X, query)?))
}

pub fn build_safe(sys: &PreparedSystem, queries: &[SafetyQuery]) -> Result<Wsks, WsksError> {
    let e = Encoder::new(sys);
    Ok(e.wrap(e.safe(queries)?))
}
