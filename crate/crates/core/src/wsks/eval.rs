//! Evaluation over a finite prefix of the κ-ary tree, with BDDs standing for
//! the quantified variables.
//!
//! With depth budget `b` and succ nesting `k`, first-order quantifiers range
//! over the nodes of depth at most `b − k`, set quantifiers over subsets of
//! those nodes, and terms over the nodes of depth at most `b`.
//! A quantifier whose body confines its variable to a known set (a first
//! order `∃x. x ∈ S ∧ …`, a `∀x. x ∈ S → …`, or a set `∃X` with a conjunct
//! `∀z. z ∈ X → z ∈ S`) only ranges over that set. A block of set
//! quantifiers `∃X̄` (or `∀X̄`, through its dual) is projected conjunct by
//! conjunct, so that a run-like body never has to be represented over the
//! whole prefix at once, and a set the block defines outright by
//! `∀z. z ∈ X ⇔ ψ(z)` with constant `ψ` is bound to that constant. First
//! order quantifiers over quantifier-free bodies are unfolded node by node.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use biodivine_lib_bdd::{Bdd, BddVariable, BddVariableSet};

use super::formula::{FoTerm, Formula, Sort, Wsks};
use super::WsksError;
use crate::node::Node;

/// Values of free variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Valuation {
    pub positions: BTreeMap<String, Node>,
    pub sets: BTreeMap<String, BTreeSet<Node>>,
}

impl Valuation {
    pub fn new() -> Valuation {
        Valuation::default()
    }

    pub fn with_position(mut self, name: &str, node: Node) -> Valuation {
        self.positions.insert(name.to_string(), node);
        self
    }

    pub fn with_set(mut self, name: &str, nodes: impl IntoIterator<Item = Node>) -> Valuation {
        self.sets.insert(name.to_string(), nodes.into_iter().collect());
        self
    }
}

/// Values of the set variables left open in [`bounded_models`].
pub type SetAssignment = BTreeMap<String, BTreeSet<Node>>;

/// Truth of `phi` under `nu`.
pub fn bounded_eval(phi: &Wsks, nu: &Valuation, budget: usize) -> Result<bool, WsksError> {
    let (_, root) = Evaluator::run(phi, nu, budget, &[])?;
    Ok(root.is_true())
}

/// All values of the `open` set variables, each ranging over subsets of its
/// given domain (all quantifiable nodes when `None`), that satisfy `phi`
/// together with `nu`. Fails with [`WsksError::TooManyModels`] past `limit`.
pub fn bounded_models(
    phi: &Wsks,
    nu: &Valuation,
    budget: usize,
    open: &[(String, Option<BTreeSet<Node>>)],
    limit: usize,
) -> Result<Vec<SetAssignment>, WsksError> {
    let (ctx, root) = Evaluator::run(phi, nu, budget, open)?;
    let mut bits: Vec<(BddVariable, usize, usize)> = Vec::new();
    for (k, (_, dom)) in ctx.open_domains.iter().enumerate() {
        for (n, &inside) in dom.iter().enumerate() {
            if inside {
                bits.push((ctx.bdd_var(n, k), k, n));
            }
        }
    }
    let mut out = BTreeSet::new();
    for clause in root.sat_clauses() {
        let free: Vec<usize> = (0..bits.len()).filter(|&i| clause.get_value(bits[i].0).is_none()).collect();
        if free.len() >= usize::BITS as usize - 1 || out.len() + (1usize << free.len()) > limit {
            return Err(WsksError::TooManyModels(limit));
        }
        for mask in 0..(1usize << free.len()) {
            let mut a: SetAssignment = open.iter().map(|(name, _)| (name.clone(), BTreeSet::new())).collect();
            for (i, &(v, k, n)) in bits.iter().enumerate() {
                let value = match free.iter().position(|&f| f == i) {
                    Some(p) => mask >> p & 1 == 1,
                    None => clause.get_value(v).expect("fixed"),
                };
                if value {
                    a.get_mut(&open[k].0).expect("open").insert(ctx.nodes[n].clone());
                }
            }
            out.insert(a);
        }
    }
    Ok(out.into_iter().collect())
}

#[derive(Clone)]
enum SetVal {
    Const(Vec<bool>),
    Sym { slot: usize, dom: Vec<bool> },
}

#[derive(Clone)]
enum PosVal {
    Const(usize),
    Sym { slot: usize, dom: Vec<usize> },
}

#[derive(Clone)]
enum Binding {
    Pos(PosVal),
    Set(SetVal),
}

struct Evaluator {
    vars: BddVariableSet,
    nodes: Vec<Node>,
    children: Vec<Vec<Option<usize>>>,
    inner: usize,
    slots: usize,
    open_domains: Vec<(String, Vec<bool>)>,
}

type Term = Vec<(usize, Bdd)>;

impl Evaluator {
    fn run(
        phi: &Wsks,
        nu: &Valuation,
        budget: usize,
        open: &[(String, Option<BTreeSet<Node>>)],
    ) -> Result<(Evaluator, Bdd), WsksError> {
        let nesting = phi.formula.succ_nesting();
        if budget < nesting {
            return Err(WsksError::BudgetExceeded { node: Node::root(), budget, nesting });
        }
        let inner_depth = budget - nesting;
        let mut nodes = vec![Node::root()];
        let mut k = 0;
        while k < nodes.len() {
            if nodes[k].depth() < budget {
                for a in 0..phi.kappa as u8 {
                    let c = nodes[k].child(a);
                    nodes.push(c);
                }
            }
            k += 1;
        }
        let index: HashMap<Node, usize> = nodes.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let children =
            nodes.iter().map(|w| (0..phi.kappa as u8).map(|a| index.get(&w.child(a)).copied()).collect()).collect();
        let inner = nodes.iter().take_while(|w| w.depth() <= inner_depth).count();
        let slots = open.len() + phi.formula.binder_depth();
        let total = inner * slots.max(1);
        if total > usize::from(u16::MAX) {
            return Err(WsksError::TooManyVariables(total));
        }
        let locate = |w: &Node| -> Result<usize, WsksError> {
            match index.get(w) {
                Some(&i) if i < inner => Ok(i),
                _ => Err(WsksError::BudgetExceeded { node: w.clone(), budget, nesting }),
            }
        };
        let mut env: Vec<(String, Binding)> = Vec::new();
        let mut open_domains = Vec::new();
        for (slot, (name, dom)) in open.iter().enumerate() {
            let mut mask = vec![false; nodes.len()];
            match dom {
                Some(d) => {
                    for w in d {
                        mask[locate(w)?] = true;
                    }
                }
                None => mask[..inner].iter_mut().for_each(|b| *b = true),
            }
            env.push((name.clone(), Binding::Set(SetVal::Sym { slot, dom: mask.clone() })));
            open_domains.push((name.clone(), mask));
        }
        for (name, sort) in phi.formula.free_vars()? {
            if open.iter().any(|(n, _)| *n == name) {
                if sort != Sort::Second {
                    return Err(WsksError::IllSorted(name));
                }
                continue;
            }
            match sort {
                Sort::First => {
                    let w = nu.positions.get(&name).ok_or_else(|| WsksError::Unbound(name.clone()))?;
                    env.push((name, Binding::Pos(PosVal::Const(locate(w)?))));
                }
                Sort::Second => {
                    let s = nu.sets.get(&name).ok_or_else(|| WsksError::Unbound(name.clone()))?;
                    let mut mask = vec![false; nodes.len()];
                    for w in s {
                        mask[locate(w)?] = true;
                    }
                    env.push((name, Binding::Set(SetVal::Const(mask))));
                }
            }
        }
        let ev = Evaluator {
            vars: BddVariableSet::new_anonymous(total as u16),
            nodes,
            children,
            inner,
            slots: slots.max(1),
            open_domains,
        };
        let root = ev.formula(&phi.formula, &mut env, open.len())?;
        Ok((ev, root))
    }

    fn bdd_var(&self, node: usize, slot: usize) -> BddVariable {
        BddVariable::from_index(node * self.slots + slot)
    }

    fn lit(&self, node: usize, slot: usize) -> Bdd {
        self.vars.mk_var(self.bdd_var(node, slot))
    }

    fn constant(&self, b: bool) -> Bdd {
        if b {
            self.vars.mk_true()
        } else {
            self.vars.mk_false()
        }
    }

    fn lookup<'e>(env: &'e [(String, Binding)], name: &str) -> Result<&'e Binding, WsksError> {
        env.iter().rev().find(|(n, _)| n == name).map(|(_, b)| b).ok_or_else(|| WsksError::Unbound(name.to_string()))
    }

    fn term(&self, t: &FoTerm, env: &[(String, Binding)]) -> Result<Term, WsksError> {
        match t {
            FoTerm::Root => Ok(vec![(0, self.vars.mk_true())]),
            FoTerm::Var(x) => match Self::lookup(env, x)? {
                Binding::Pos(PosVal::Const(n)) => Ok(vec![(*n, self.vars.mk_true())]),
                Binding::Pos(PosVal::Sym { slot, dom }) => Ok(dom.iter().map(|&n| (n, self.lit(n, *slot))).collect()),
                Binding::Set(_) => Err(WsksError::IllSorted(x.clone())),
            },
            FoTerm::Succ(a, inner) => {
                let v = self.term(inner, env)?;
                v.into_iter()
                    .map(|(n, b)| match self.children[n][usize::from(*a)] {
                        Some(c) => Ok((c, b)),
                        None => Err(WsksError::BudgetExceeded {
                            node: self.nodes[n].child(*a),
                            budget: self.nodes.last().map_or(0, Node::depth),
                            nesting: t.nesting(),
                        }),
                    })
                    .collect()
            }
        }
    }

    fn member(&self, set: &SetVal, n: usize) -> Bdd {
        match set {
            SetVal::Const(mask) => self.constant(mask[n]),
            SetVal::Sym { slot, dom } => {
                if dom[n] {
                    self.lit(n, *slot)
                } else {
                    self.vars.mk_false()
                }
            }
        }
    }

    fn support(env: &[(String, Binding)], name: &str) -> Option<Vec<bool>> {
        match Self::lookup(env, name).ok()? {
            Binding::Set(SetVal::Const(m)) => Some(m.clone()),
            Binding::Set(SetVal::Sym { dom, .. }) => Some(dom.clone()),
            Binding::Pos(_) => None,
        }
    }

    fn formula(&self, f: &Formula, env: &mut Vec<(String, Binding)>, depth: usize) -> Result<Bdd, WsksError> {
        Ok(match f {
            Formula::True => self.vars.mk_true(),
            Formula::False => self.vars.mk_false(),
            Formula::Eq(a, b) => {
                let ta: HashMap<usize, Bdd> = self.term(a, env)?.into_iter().collect();
                let mut out = self.vars.mk_false();
                for (n, y) in self.term(b, env)? {
                    if let Some(x) = ta.get(&n) {
                        out = out.or(&x.and(&y));
                    }
                }
                out
            }
            Formula::In(t, x) => {
                let set = match Self::lookup(env, x)? {
                    Binding::Set(s) => s.clone(),
                    Binding::Pos(_) => return Err(WsksError::IllSorted(x.clone())),
                };
                let mut out = self.vars.mk_false();
                for (n, b) in self.term(t, env)? {
                    out = out.or(&b.and(&self.member(&set, n)));
                }
                out
            }
            Formula::Not(a) => self.formula(a, env, depth)?.not(),
            Formula::And(v) => {
                let mut out = self.vars.mk_true();
                for g in v {
                    out = out.and(&self.formula(g, env, depth)?);
                    if out.is_false() {
                        break;
                    }
                }
                out
            }
            Formula::Or(v) => {
                let mut out = self.vars.mk_false();
                for g in v {
                    out = out.or(&self.formula(g, env, depth)?);
                    if out.is_true() {
                        break;
                    }
                }
                out
            }
            Formula::Implies(a, b) => {
                let l = self.formula(a, env, depth)?;
                if l.is_false() {
                    return Ok(self.vars.mk_true());
                }
                l.imp(&self.formula(b, env, depth)?)
            }
            Formula::Iff(a, b) => self.formula(a, env, depth)?.iff(&self.formula(b, env, depth)?),
            Formula::Exists1(x, body) | Formula::Forall1(x, body) => {
                let universal = matches!(f, Formula::Forall1(..));
                let slot = depth;
                let mut dom: Vec<usize> = (0..self.inner).collect();
                if let Some(mask) = position_guard(x, body, universal, env) {
                    dom.retain(|&n| mask[n]);
                }
                if quantifier_free(body) {
                    let mut out = self.constant(universal);
                    for n in dom {
                        env.push((x.clone(), Binding::Pos(PosVal::Const(n))));
                        let r = self.formula(body, env, depth);
                        env.pop();
                        out = if universal { out.and(&r?) } else { out.or(&r?) };
                        if (universal && out.is_false()) || (!universal && out.is_true()) {
                            break;
                        }
                    }
                    return Ok(out);
                }
                let bits: Vec<BddVariable> = dom.iter().map(|&n| self.bdd_var(n, slot)).collect();
                let one = self.one_hot(&bits);
                env.push((x.clone(), Binding::Pos(PosVal::Sym { slot, dom })));
                let r = self.formula(body, env, depth + 1);
                env.pop();
                let r = r?;
                if universal {
                    one.imp(&r).for_all(&bits)
                } else {
                    one.and(&r).exists(&bits)
                }
            }
            Formula::Exists2(..) | Formula::Forall2(..) => self.set_block(f, env, depth)?,
        })
    }

    /// A block `∃X1 … ∃Xn. φ`, or `∀X1 … ∀Xn. φ` read as `¬∃X̄. ¬φ`. The
    /// conjuncts of `φ` (of `¬φ`), with leading `∀z` expanded node by node,
    /// are conjoined deepest first, and each bit of the `Xi` is projected
    /// away as soon as no remaining conjunct mentions it.
    fn set_block(&self, f: &Formula, env: &mut Vec<(String, Binding)>, depth: usize) -> Result<Bdd, WsksError> {
        let universal = matches!(f, Formula::Forall2(..));
        let mut chain = Vec::new();
        let mut body = f;
        loop {
            match body {
                Formula::Exists2(x, b) if !universal => chain.push(x),
                Formula::Forall2(x, b) if universal => chain.push(x),
                _ => break,
            }
            body = match body {
                Formula::Exists2(_, b) | Formula::Forall2(_, b) => b,
                _ => unreachable!(),
            };
        }
        let mut bits = Vec::new();
        for (k, x) in chain.iter().enumerate() {
            let slot = depth + k;
            let mut dom = vec![false; self.nodes.len()];
            dom[..self.inner].iter_mut().for_each(|b| *b = true);
            if !universal {
                if let Some(mask) = set_guard(x, body, env) {
                    for (d, m) in dom.iter_mut().zip(mask) {
                        *d &= m;
                    }
                }
            }
            bits.extend((0..self.inner).filter(|&n| dom[n]).map(|n| self.bdd_var(n, slot)));
            env.push(((*x).clone(), Binding::Set(SetVal::Sym { slot, dom })));
        }
        let defining = match body {
            Formula::Implies(p, _) if universal => Some(p.as_ref()),
            _ if universal => None,
            _ => Some(body),
        };
        if let Some(d) = defining {
            let fixed = self.pin_definitions(&chain, d, env, depth + chain.len())?;
            bits.retain(|b| !fixed.contains(b));
        }
        let inner = depth + chain.len();
        let parts = if universal { self.negated_conjuncts(body, env, inner) } else { self.conjuncts(body, env, inner, true) };
        env.truncate(env.len() - chain.len());
        let found = self.project(parts?, &bits);
        Ok(if universal { found.not() } else { found })
    }

    /// Rebinds each `X` of `chain` that a top-level conjunct
    /// `∀z. z ∈ X ⇔ ψ(z)` fixes to a constant set, and returns the BDD
    /// variables thereby freed.
    fn pin_definitions(
        &self,
        chain: &[&String],
        body: &Formula,
        env: &mut [(String, Binding)],
        depth: usize,
    ) -> Result<HashSet<BddVariable>, WsksError> {
        let mut freed = HashSet::new();
        let mut defs = Vec::new();
        collect_definitions(body, &mut defs);
        let base = env.len() - chain.len();
        for (z, x, psi) in defs {
            let Some(k) = chain.iter().position(|c| *c == x) else { continue };
            let mut scratch: Vec<(String, Binding)> = env.to_vec();
            let mut mask = vec![false; self.nodes.len()];
            let mut constant = true;
            for n in 0..self.inner {
                scratch.push((z.to_string(), Binding::Pos(PosVal::Const(n))));
                let v = self.formula(psi, &mut scratch, depth)?;
                scratch.pop();
                if v.is_true() {
                    mask[n] = true;
                } else if !v.is_false() {
                    constant = false;
                    break;
                }
            }
            if !constant {
                continue;
            }
            let Binding::Set(SetVal::Sym { slot, dom }) = &env[base + k].1 else { continue };
            if mask.iter().zip(dom).any(|(m, d)| *m && !*d) {
                continue;
            }
            freed.extend((0..self.inner).filter(|&n| dom[n]).map(|n| self.bdd_var(n, *slot)));
            env[base + k].1 = Binding::Set(SetVal::Const(mask));
        }
        Ok(freed)
    }

    /// `∃bits. ⋀ parts`, quantifying each bit right after its last use.
    fn project(&self, parts: Vec<Bdd>, bits: &[BddVariable]) -> Bdd {
        let mut parts: Vec<(Vec<BddVariable>, Bdd)> = parts
            .into_iter()
            .map(|b| {
                let mut support: Vec<BddVariable> = b.support_set().into_iter().collect();
                support.sort();
                (support, b)
            })
            .collect();
        parts.sort_by(|a, b| b.0.last().cmp(&a.0.last()));
        let bound: HashSet<BddVariable> = bits.iter().copied().collect();
        let mut pending: HashMap<BddVariable, usize> = HashMap::new();
        for v in parts.iter().flat_map(|(s, _)| s).filter(|v| bound.contains(v)) {
            *pending.entry(*v).or_default() += 1;
        }
        let mut acc = self.vars.mk_true();
        for (support, b) in parts {
            acc = acc.and(&b);
            if acc.is_false() {
                return acc;
            }
            let done: Vec<BddVariable> = support
                .into_iter()
                .filter(|v| match pending.get_mut(v) {
                    Some(n) => {
                        *n -= 1;
                        *n == 0
                    }
                    None => false,
                })
                .collect();
            if !done.is_empty() {
                acc = acc.exists(&done);
            }
        }
        acc
    }

    /// Conjuncts of `¬f`.
    fn negated_conjuncts(&self, f: &Formula, env: &mut Vec<(String, Binding)>, depth: usize) -> Result<Vec<Bdd>, WsksError> {
        match f {
            Formula::Implies(p, c) => {
                let mut out = self.conjuncts(p, env, depth, true)?;
                out.extend(self.negated_conjuncts(c, env, depth)?);
                Ok(out)
            }
            Formula::Or(v) => {
                let mut out = Vec::new();
                for g in v {
                    out.extend(self.negated_conjuncts(g, env, depth)?);
                }
                Ok(out)
            }
            Formula::Not(g) => self.conjuncts(g, env, depth, true),
            _ => Ok(vec![self.formula(f, env, depth)?.not()]),
        }
    }

    /// Conjuncts of `f`; with `expand`, a `∀z` is split into one conjunct
    /// per node of its range.
    fn conjuncts(&self, f: &Formula, env: &mut Vec<(String, Binding)>, depth: usize, expand: bool) -> Result<Vec<Bdd>, WsksError> {
        match f {
            Formula::And(v) => {
                let mut out = Vec::new();
                for g in v {
                    out.extend(self.conjuncts(g, env, depth, expand)?);
                }
                Ok(out)
            }
            Formula::Forall1(x, body) if expand => {
                let mut dom: Vec<usize> = (0..self.inner).collect();
                if let Some(mask) = position_guard(x, body, true, env) {
                    dom.retain(|&n| mask[n]);
                }
                let mut out = Vec::new();
                for n in dom {
                    env.push((x.clone(), Binding::Pos(PosVal::Const(n))));
                    let r = self.conjuncts(body, env, depth, false);
                    env.pop();
                    out.extend(r?);
                }
                Ok(out)
            }
            _ => Ok(vec![self.formula(f, env, depth)?]),
        }
    }

    fn one_hot(&self, bits: &[BddVariable]) -> Bdd {
        let mut none = self.vars.mk_true();
        let mut one = self.vars.mk_false();
        for &b in bits.iter().rev() {
            let v = self.vars.mk_var(b);
            one = v.and(&none).or(&v.not().and(&one));
            none = v.not().and(&none);
        }
        one
    }
}

fn quantifier_free(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Eq(..) | Formula::In(..) => true,
        Formula::Not(a) => quantifier_free(a),
        Formula::And(v) | Formula::Or(v) => v.iter().all(quantifier_free),
        Formula::Implies(a, b) | Formula::Iff(a, b) => quantifier_free(a) && quantifier_free(b),
        _ => false,
    }
}

/// The `(z, X, ψ)` of top-level conjuncts `∀z. … ∧ (z ∈ X ⇔ ψ) ∧ …`,
/// with `¬(z ∈ X)` read as `ψ = false`.
fn collect_definitions<'f>(f: &'f Formula, out: &mut Vec<(&'f str, &'f str, &'f Formula)>) {
    match f {
        Formula::And(v) => v.iter().for_each(|g| collect_definitions(g, out)),
        Formula::Forall1(z, b) => {
            let items: Vec<&Formula> = match b.as_ref() {
                Formula::And(v) => v.iter().collect(),
                g => vec![g],
            };
            for g in items {
                match g {
                    Formula::Iff(p, q) => {
                        if let Some(x) = is_membership_of(p, z) {
                            out.push((z, x, q));
                        }
                        if let Some(x) = is_membership_of(q, z) {
                            out.push((z, x, p));
                        }
                    }
                    Formula::Not(p) => {
                        if let Some(x) = is_membership_of(p, z) {
                            out.push((z, x, &Formula::False));
                        }
                    }
                    _ => {}
                }
            }
        }
        _ => {}
    }
}

fn is_membership_of<'f>(f: &'f Formula, x: &str) -> Option<&'f str> {
    match f {
        Formula::In(FoTerm::Var(y), s) if y == x => Some(s),
        _ => None,
    }
}

/// Union of two optional masks; `None` when either side is unknown.
fn union(a: Option<Vec<bool>>, b: Option<Vec<bool>>) -> Option<Vec<bool>> {
    let (a, b) = (a?, b?);
    Some(a.iter().zip(&b).map(|(x, y)| *x || *y).collect())
}

fn intersect(a: Option<Vec<bool>>, b: Option<Vec<bool>>) -> Option<Vec<bool>> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.iter().zip(&b).map(|(x, y)| *x && *y).collect()),
        (a, None) => a,
        (None, b) => b,
    }
}

/// Nodes outside of which a formula about `x` cannot hold.
fn holds_only_within(x: &str, f: &Formula, env: &[(String, Binding)]) -> Option<Vec<bool>> {
    match f {
        Formula::In(..) => Evaluator::support(env, is_membership_of(f, x)?),
        Formula::And(v) => v.iter().map(|g| holds_only_within(x, g, env)).fold(None, intersect),
        Formula::Or(v) => {
            let mut it = v.iter().map(|g| holds_only_within(x, g, env));
            let first = it.next()?;
            it.fold(first, union)
        }
        Formula::Exists1(y, b) | Formula::Exists2(y, b) if y != x && !binds_in_env(y, env) => holds_only_within(x, b, env),
        _ => None,
    }
}

fn binds_in_env(name: &str, env: &[(String, Binding)]) -> bool {
    env.iter().any(|(n, _)| n == name)
}

/// Nodes outside of which the body of `∃x`/`∀x` holds trivially (∀) or
/// fails (∃).
fn position_guard(x: &str, body: &Formula, universal: bool, env: &[(String, Binding)]) -> Option<Vec<bool>> {
    if !universal {
        return holds_only_within(x, body, env);
    }
    match body {
        Formula::Implies(p, _) => holds_only_within(x, p, env),
        Formula::Not(p) => holds_only_within(x, p, env),
        Formula::And(v) => {
            let mut it = v.iter().map(|g| position_guard(x, g, true, env));
            let first = it.next()?;
            it.fold(first, union)
        }
        Formula::Forall1(y, b) | Formula::Forall2(y, b) if y != x && !binds_in_env(y, env) => {
            position_guard(x, b, true, env)
        }
        _ => None,
    }
}

/// For `∃X. … ∧ ∀z. (z ∈ X → z ∈ S) ∧ …`, the support of `S`.
fn set_guard(x: &str, body: &Formula, env: &[(String, Binding)]) -> Option<Vec<bool>> {
    match body {
        Formula::And(v) => v.iter().map(|g| set_guard(x, g, env)).fold(None, intersect),
        Formula::Exists1(y, b) | Formula::Exists2(y, b) if y != x && !binds_in_env(y, env) => set_guard(x, b, env),
        Formula::Forall1(z, b) => {
            let items: Vec<&Formula> = match b.as_ref() {
                Formula::And(v) => v.iter().collect(),
                g => vec![g],
            };
            items.into_iter().find_map(|g| match g {
                Formula::Implies(p, c) if is_membership_of(p, z) == Some(x) => {
                    let s = is_membership_of(c, z)?;
                    if s == x {
                        return None;
                    }
                    Evaluator::support(env, s)
                }
                _ => None,
            })
        }
        _ => None,
    }
}
