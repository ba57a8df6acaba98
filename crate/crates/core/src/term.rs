//! Behavioral terms, architecture specifications and their semantics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::node::Node;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(transparent)]
pub struct Var(pub String);

impl Var {
    pub fn new(name: impl Into<String>) -> Var {
        Var(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A variable or a ground identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Var(Var),
    Id(Node),
}

impl Symbol {
    pub fn var(name: impl Into<String>) -> Symbol {
        Symbol::Var(Var::new(name))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Symbol::Var(v) => Some(v),
            Symbol::Id(_) => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Var(v) => write!(f, "{v}"),
            Symbol::Id(n) => write!(f, "#{n}"),
        }
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A port applied to a symbol, `P(ξ)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortRef {
    pub port: String,
    pub sym: Symbol,
}

impl PortRef {
    pub fn new(port: impl Into<String>, sym: Symbol) -> PortRef {
        PortRef { port: port.into(), sym }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.port, self.sym)
    }
}

/// Ground interaction: a set of `(port, identifier)` pairs.
pub type Interaction = BTreeSet<(String, Node)>;
/// Ground architecture: a set of interactions.
pub type Architecture = BTreeSet<Interaction>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("variable `{0}` is not ground")]
    NonGround(Var),
    #[error("predicate atom `{0}` cannot be flattened")]
    NotFlattenable(String),
}

/// Architecture expression before normalization, with `+` and `·` as written.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArchExpr {
    Port(PortRef),
    Sum(Box<ArchExpr>, Box<ArchExpr>),
    Prod(Box<ArchExpr>, Box<ArchExpr>),
}

impl ArchExpr {
    pub fn port(port: &str, sym: Symbol) -> ArchExpr {
        ArchExpr::Port(PortRef::new(port, sym))
    }

    pub fn sum(a: ArchExpr, b: ArchExpr) -> ArchExpr {
        ArchExpr::Sum(Box::new(a), Box::new(b))
    }

    pub fn prod(a: ArchExpr, b: ArchExpr) -> ArchExpr {
        ArchExpr::Prod(Box::new(a), Box::new(b))
    }

    /// Distribute products over sums.
    pub fn to_sop(&self) -> ArchSpec {
        match self {
            ArchExpr::Port(p) => ArchSpec::from_products(vec![vec![p.clone()]]),
            ArchExpr::Sum(a, b) => a.to_sop().sum(&b.to_sop()),
            ArchExpr::Prod(a, b) => a.to_sop().product(&b.to_sop()),
        }
    }

    /// Inductive semantics, computed without going through the normal form.
    pub fn semantics(&self) -> Result<Architecture, TermError> {
        match self {
            ArchExpr::Port(p) => {
                let node = ground(&p.sym)?;
                Ok(BTreeSet::from([BTreeSet::from([(p.port.clone(), node)])]))
            }
            ArchExpr::Sum(a, b) => {
                let mut s = a.semantics()?;
                s.extend(b.semantics()?);
                Ok(s)
            }
            ArchExpr::Prod(a, b) => {
                let (sa, sb) = (a.semantics()?, b.semantics()?);
                let mut out = Architecture::new();
                for x in &sa {
                    for y in &sb {
                        out.insert(x.union(y).cloned().collect());
                    }
                }
                Ok(out)
            }
        }
    }
}

fn ground(sym: &Symbol) -> Result<Node, TermError> {
    match sym {
        Symbol::Id(n) => Ok(n.clone()),
        Symbol::Var(v) => Err(TermError::NonGround(v.clone())),
    }
}

/// Architecture specification in sum-of-products form.
///
/// Each product is sorted and free of duplicates, and the list of products
/// is sorted and free of duplicates, so AC-equal specifications compare equal.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArchSpec {
    products: Vec<Vec<PortRef>>,
}

impl ArchSpec {
    pub fn empty() -> ArchSpec {
        ArchSpec::default()
    }

    pub fn from_products(products: Vec<Vec<PortRef>>) -> ArchSpec {
        let set: BTreeSet<Vec<PortRef>> = products
            .into_iter()
            .map(|p| p.into_iter().collect::<BTreeSet<_>>().into_iter().collect())
            .collect();
        ArchSpec { products: set.into_iter().collect() }
    }

    pub fn products(&self) -> &[Vec<PortRef>] {
        &self.products
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn sum(&self, other: &ArchSpec) -> ArchSpec {
        let mut all = self.products.clone();
        all.extend(other.products.iter().cloned());
        ArchSpec::from_products(all)
    }

    pub fn product(&self, other: &ArchSpec) -> ArchSpec {
        let mut all = Vec::new();
        for a in &self.products {
            for b in &other.products {
                let mut p = a.clone();
                p.extend(b.iter().cloned());
                all.push(p);
            }
        }
        ArchSpec::from_products(all)
    }

    pub fn map_symbols(&self, f: &mut impl FnMut(&Symbol) -> Symbol) -> ArchSpec {
        ArchSpec::from_products(
            self.products
                .iter()
                .map(|p| p.iter().map(|r| PortRef::new(r.port.clone(), f(&r.sym))).collect())
                .collect(),
        )
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.products.iter().flatten().map(|r| &r.sym)
    }

    /// Rebuild an expression tree (left-nested sums of left-nested products).
    pub fn to_expr(&self) -> Option<ArchExpr> {
        self.products
            .iter()
            .map(|p| {
                p.iter()
                    .map(|r| ArchExpr::Port(r.clone()))
                    .reduce(ArchExpr::prod)
                    .expect("products are nonempty")
            })
            .reduce(ArchExpr::sum)
    }
}

impl fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, p) in self.products.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            for (l, r) in p.iter().enumerate() {
                if l > 0 {
                    write!(f, ".")?;
                }
                write!(f, "{r}")?;
            }
        }
        Ok(())
    }
}

/// Semantics of a ground architecture specification.
pub fn arch_semantics(arch: &ArchSpec) -> Result<Architecture, TermError> {
    let mut out = Architecture::new();
    for p in &arch.products {
        let mut inter = Interaction::new();
        for r in p {
            inter.insert((r.port.clone(), ground(&r.sym)?));
        }
        out.insert(inter);
    }
    Ok(out)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Instance { ctype: String, sym: Symbol },
    Apply { arch: ArchSpec, args: Vec<Term> },
    Nu { var: Var, body: Box<Term> },
    Pred { name: String, args: Vec<Symbol> },
}

impl Term {
    pub fn instance(ctype: &str, sym: Symbol) -> Term {
        Term::Instance { ctype: ctype.to_string(), sym }
    }

    pub fn pred(name: &str, args: Vec<Symbol>) -> Term {
        Term::Pred { name: name.to_string(), args }
    }

    pub fn apply(arch: ArchSpec, args: Vec<Term>) -> Term {
        Term::Apply { arch, args }
    }

    pub fn nu(var: Var, body: Term) -> Term {
        Term::Nu { var, body: Box::new(body) }
    }

    /// Wrap `body` in binders, outermost first.
    pub fn nu_all(vars: &[Var], body: Term) -> Term {
        vars.iter().rev().fold(body, |acc, v| Term::nu(v.clone(), acc))
    }

    pub fn height(&self) -> usize {
        match self {
            Term::Instance { .. } | Term::Pred { .. } => 0,
            Term::Nu { body, .. } => 1 + body.height(),
            Term::Apply { args, .. } => 1 + args.iter().map(Term::height).max().unwrap_or(0),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        let mut add = |s: &Symbol, bound: &Vec<Var>| {
            if let Symbol::Var(v) = s {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
        };
        match self {
            Term::Instance { sym, .. } => add(sym, bound),
            Term::Pred { args, .. } => args.iter().for_each(|s| add(s, bound)),
            Term::Apply { arch, args } => {
                arch.symbols().for_each(|s| add(s, bound));
                for a in args {
                    a.collect_free(bound, out);
                }
            }
            Term::Nu { var, body } => {
                bound.push(var.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Binders in left-to-right, outermost-first order.
    pub fn bound_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.visit(&mut |t| {
            if let Term::Nu { var, .. } = t {
                out.push(var.clone());
            }
        });
        out
    }

    /// Symbols ξ such that some `B(ξ)` occurs in the term.
    pub fn instantiated_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let Term::Instance { sym, .. } = t {
                out.insert(sym.clone());
            }
        });
        out
    }

    /// Preorder visit of all subterms.
    pub fn visit(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        match self {
            Term::Apply { args, .. } => args.iter().for_each(|a| a.visit(f)),
            Term::Nu { body, .. } => body.visit(f),
            _ => {}
        }
    }

    /// Predicate atoms in left-to-right order.
    pub fn pred_atoms(&self) -> Vec<(&str, &[Symbol])> {
        let mut out = Vec::new();
        collect_atoms(self, &mut |t| {
            if let Term::Pred { name, args } = t {
                out.push((name.as_str(), args.as_slice()));
            }
        });
        out
    }

    /// Instance atoms in left-to-right order.
    pub fn instance_atoms(&self) -> Vec<(&str, &Symbol)> {
        let mut out = Vec::new();
        collect_atoms(self, &mut |t| {
            if let Term::Instance { ctype, sym } = t {
                out.push((ctype.as_str(), sym));
            }
        });
        out
    }

    pub fn is_predicate_free(&self) -> bool {
        self.pred_atoms().is_empty()
    }

    /// Rebuild the term, replacing each atom via `f` (left-to-right).
    pub fn map_atoms(&self, f: &mut impl FnMut(&Term) -> Term) -> Term {
        match self {
            Term::Instance { .. } | Term::Pred { .. } => f(self),
            Term::Apply { arch, args } => Term::Apply {
                arch: arch.clone(),
                args: args.iter().map(|a| a.map_atoms(f)).collect(),
            },
            Term::Nu { var, body } => Term::nu(var.clone(), body.map_atoms(f)),
        }
    }

    /// Rename every variable occurrence (free or bound) via `f`.
    pub fn rename_vars(&self, f: &mut impl FnMut(&Var) -> Var) -> Term {
        fn sym(s: &Symbol, f: &mut impl FnMut(&Var) -> Var) -> Symbol {
            match s {
                Symbol::Var(v) => Symbol::Var(f(v)),
                other => other.clone(),
            }
        }
        match self {
            Term::Instance { ctype, sym: s } => Term::Instance { ctype: ctype.clone(), sym: sym(s, f) },
            Term::Pred { name, args } => Term::Pred { name: name.clone(), args: args.iter().map(|s| sym(s, f)).collect() },
            Term::Apply { arch, args } => Term::Apply {
                arch: arch.map_symbols(&mut |s| sym(s, f)),
                args: args.iter().map(|a| a.rename_vars(f)).collect(),
            },
            Term::Nu { var, body } => Term::nu(f(var), body.rename_vars(f)),
        }
    }
}

fn collect_atoms<'a>(t: &'a Term, f: &mut impl FnMut(&'a Term)) {
    match t {
        Term::Instance { .. } | Term::Pred { .. } => f(t),
        Term::Apply { args, .. } => args.iter().for_each(|a| collect_atoms(a, f)),
        Term::Nu { body, .. } => collect_atoms(body, f),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Instance { ctype, sym } => write!(f, "{ctype}({sym})"),
            Term::Pred { name, args } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Term::Nu { var, body } => write!(f, "new {var} . {body}"),
            Term::Apply { arch, args } => {
                write!(f, "< {arch} > (")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, " {a}")?;
                }
                write!(f, " )")
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Partial map from variables to symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution(pub BTreeMap<Var, Symbol>);

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, Symbol)>) -> Substitution {
        Substitution(pairs.into_iter().collect())
    }

    pub fn insert(&mut self, v: Var, s: Symbol) {
        self.0.insert(v, s);
    }

    pub fn get(&self, v: &Var) -> Option<&Symbol> {
        self.0.get(v)
    }

    pub fn symbol(&self, s: &Symbol) -> Symbol {
        match s {
            Symbol::Var(v) => self.0.get(v).cloned().unwrap_or_else(|| s.clone()),
            Symbol::Id(_) => s.clone(),
        }
    }

    /// `self` followed by `then`: `t (self ∘ then) = (t self) then`.
    pub fn then(&self, then: &Substitution) -> Substitution {
        let mut out: BTreeMap<Var, Symbol> =
            self.0.iter().map(|(v, s)| (v.clone(), then.symbol(s))).collect();
        for (v, s) in &then.0 {
            out.entry(v.clone()).or_insert_with(|| s.clone());
        }
        Substitution(out)
    }

    /// Capture-free application to the free occurrences of `t`.
    pub fn apply(&self, t: &Term) -> Term {
        self.apply_scoped(t, &mut Vec::new())
    }

    fn apply_scoped(&self, t: &Term, bound: &mut Vec<Var>) -> Term {
        let sub = |s: &Symbol, bound: &Vec<Var>| match s {
            Symbol::Var(v) if bound.contains(v) => s.clone(),
            _ => self.symbol(s),
        };
        match t {
            Term::Instance { ctype, sym } => Term::Instance { ctype: ctype.clone(), sym: sub(sym, bound) },
            Term::Pred { name, args } => Term::Pred {
                name: name.clone(),
                args: args.iter().map(|s| sub(s, bound)).collect(),
            },
            Term::Apply { arch, args } => Term::Apply {
                arch: arch.map_symbols(&mut |s| sub(s, bound)),
                args: args.iter().map(|a| self.apply_scoped(a, bound)).collect(),
            },
            Term::Nu { var, body } => {
                bound.push(var.clone());
                let body = self.apply_scoped(body, bound);
                bound.pop();
                Term::nu(var.clone(), body)
            }
        }
    }
}

/// Move every binder to a prefix. Sound when bound names are pairwise distinct
/// and distinct from free names.
pub fn hoist_binders(t: &Term) -> (Vec<Var>, Term) {
    fn strip(t: &Term, binders: &mut Vec<Var>) -> Term {
        match t {
            Term::Nu { var, body } => {
                binders.push(var.clone());
                strip(body, binders)
            }
            Term::Apply { arch, args } => Term::Apply {
                arch: arch.clone(),
                args: args.iter().map(|a| strip(a, binders)).collect(),
            },
            atom => atom.clone(),
        }
    }
    let mut binders = Vec::new();
    let body = strip(t, &mut binders);
    (binders, body)
}

/// A rule body or ground term in flattened form `ν y⃗ . ⟨Γ⟩(atom, …)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatTerm {
    pub binders: Vec<Var>,
    pub arch: ArchSpec,
    /// Instance and predicate atoms in left-to-right order.
    pub atoms: Vec<Term>,
}

impl FlatTerm {
    /// Hoist binders and merge nested applications; predicate atoms are kept.
    pub fn of(t: &Term) -> FlatTerm {
        let (binders, body) = hoist_binders(t);
        let mut arch = ArchSpec::empty();
        let mut atoms = Vec::new();
        fn walk(t: &Term, arch: &mut ArchSpec, atoms: &mut Vec<Term>) {
            match t {
                Term::Apply { arch: a, args } => {
                    *arch = arch.sum(a);
                    args.iter().for_each(|x| walk(x, arch, atoms));
                }
                Term::Nu { .. } => unreachable!("binders hoisted"),
                atom => atoms.push(atom.clone()),
            }
        }
        walk(&body, &mut arch, &mut atoms);
        FlatTerm { binders, arch, atoms }
    }

    pub fn to_term(&self) -> Term {
        let inner = if self.arch.is_empty() && self.atoms.len() == 1 {
            self.atoms[0].clone()
        } else {
            Term::apply(self.arch.clone(), self.atoms.clone())
        };
        Term::nu_all(&self.binders, inner)
    }
}

/// Canonical form of a predicate-less term: binders hoisted and all
/// applications merged into one.
pub fn flatten(t: &Term) -> Result<Term, TermError> {
    if let Some((name, _)) = t.pred_atoms().first() {
        return Err(TermError::NotFlattenable(name.to_string()));
    }
    Ok(FlatTerm::of(t).to_term())
}

/// All terms reachable by one flattening step. Expects a binder-free term.
pub fn flatten_steps(t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    if let Term::Apply { arch, args } = t {
        for (i, a) in args.iter().enumerate() {
            if let Term::Apply { arch: inner, args: inner_args } = a {
                let mut merged = args[..i].to_vec();
                merged.extend(inner_args.iter().cloned());
                merged.extend(args[i + 1..].iter().cloned());
                out.push(Term::apply(arch.sum(inner), merged));
            }
        }
        for (i, a) in args.iter().enumerate() {
            for s in flatten_steps(a) {
                let mut next = args.clone();
                next[i] = s;
                out.push(Term::apply(arch.clone(), next));
            }
        }
    }
    out
}
