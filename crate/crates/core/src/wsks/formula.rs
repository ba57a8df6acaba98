//! Syntax of weak monadic second-order logic over κ successors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::WsksError;

/// First-order term: the root, a variable, or a successor of a term.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FoTerm {
    Root,
    Var(String),
    Succ(u8, Box<FoTerm>),
}

impl FoTerm {
    pub fn var(name: impl Into<String>) -> FoTerm {
        FoTerm::Var(name.into())
    }

    pub fn succ(alpha: u8, t: FoTerm) -> FoTerm {
        FoTerm::Succ(alpha, Box::new(t))
    }

    /// Number of nested successor applications.
    pub fn nesting(&self) -> usize {
        match self {
            FoTerm::Succ(_, t) => 1 + t.nesting(),
            _ => 0,
        }
    }

    /// The innermost term below the successors, with the directions applied
    /// to it, innermost first.
    pub fn base(&self) -> (&FoTerm, Vec<u8>) {
        let mut dirs = Vec::new();
        let mut t = self;
        while let FoTerm::Succ(a, inner) = t {
            dirs.push(*a);
            t = inner;
        }
        dirs.reverse();
        (t, dirs)
    }

    fn max_direction(&self) -> Option<u8> {
        match self {
            FoTerm::Succ(a, t) => Some(t.max_direction().map_or(*a, |m| m.max(*a))),
            _ => None,
        }
    }
}

impl fmt::Display for FoTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoTerm::Root => write!(f, "ε"),
            FoTerm::Var(x) => write!(f, "{x}"),
            FoTerm::Succ(a, t) => write!(f, "s{a}({t})"),
        }
    }
}

/// A formula. `And` and `Or` built through the constructors below have at
/// least two operands and no constant operands.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Eq(FoTerm, FoTerm),
    In(FoTerm, String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Exists1(String, Box<Formula>),
    Forall1(String, Box<Formula>),
    Exists2(String, Box<Formula>),
    Forall2(String, Box<Formula>),
}

/// Sort of a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sort {
    First,
    Second,
}

impl Formula {
    pub fn eq(a: FoTerm, b: FoTerm) -> Formula {
        Formula::Eq(a, b)
    }

    pub fn mem(t: FoTerm, set: impl Into<String>) -> Formula {
        Formula::In(t, set.into())
    }

    pub fn is_in(x: &str, set: impl Into<String>) -> Formula {
        Formula::In(FoTerm::var(x), set.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            f => Formula::Not(Box::new(f)),
        }
    }

    pub fn and(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::True => {}
                Formula::False => return Formula::False,
                f => out.push(f),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().expect("one operand"),
            _ => Formula::And(out),
        }
    }

    pub fn or(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::False => {}
                Formula::True => return Formula::True,
                f => out.push(f),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().expect("one operand"),
            _ => Formula::Or(out),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        match (a, b) {
            (Formula::False, _) | (_, Formula::True) => Formula::True,
            (Formula::True, b) => b,
            (a, Formula::False) => Formula::not(a),
            (a, b) => Formula::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        match (a, b) {
            (Formula::True, b) => b,
            (a, Formula::True) => a,
            (Formula::False, b) => Formula::not(b),
            (a, Formula::False) => Formula::not(a),
            (a, b) => Formula::Iff(Box::new(a), Box::new(b)),
        }
    }

    fn quant(name: &str, body: Formula, make: fn(String, Box<Formula>) -> Formula) -> Formula {
        match body {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            body => make(name.to_string(), Box::new(body)),
        }
    }

    pub fn exists1(x: &str, body: Formula) -> Formula {
        Formula::quant(x, body, Formula::Exists1)
    }

    pub fn forall1(x: &str, body: Formula) -> Formula {
        Formula::quant(x, body, Formula::Forall1)
    }

    pub fn exists2(x: &str, body: Formula) -> Formula {
        Formula::quant(x, body, Formula::Exists2)
    }

    pub fn forall2(x: &str, body: Formula) -> Formula {
        Formula::quant(x, body, Formula::Forall2)
    }

    /// Existential closure over several set variables, first name outermost.
    pub fn exists2_all<S: AsRef<str>>(names: &[S], body: Formula) -> Formula {
        names.iter().rev().fold(body, |acc, x| Formula::exists2(x.as_ref(), acc))
    }

    pub fn forall2_all<S: AsRef<str>>(names: &[S], body: Formula) -> Formula {
        names.iter().rev().fold(body, |acc, x| Formula::forall2(x.as_ref(), acc))
    }

    pub fn exists1_all<S: AsRef<str>>(names: &[S], body: Formula) -> Formula {
        names.iter().rev().fold(body, |acc, x| Formula::exists1(x.as_ref(), acc))
    }

    /// Direct subformulas.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Eq(..) | Formula::In(..) => vec![],
            Formula::Not(f) => vec![f],
            Formula::And(v) | Formula::Or(v) => v.iter().collect(),
            Formula::Implies(a, b) | Formula::Iff(a, b) => vec![a, b],
            Formula::Exists1(_, f) | Formula::Forall1(_, f) | Formula::Exists2(_, f) | Formula::Forall2(_, f) => vec![f],
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Formula::size).sum::<usize>()
    }

    /// Deepest successor nesting over all terms.
    pub fn succ_nesting(&self) -> usize {
        match self {
            Formula::Eq(a, b) => a.nesting().max(b.nesting()),
            Formula::In(t, _) => t.nesting(),
            f => f.children().into_iter().map(Formula::succ_nesting).max().unwrap_or(0),
        }
    }

    /// Deepest nesting of quantifiers.
    pub fn binder_depth(&self) -> usize {
        match self {
            Formula::Exists1(_, f) | Formula::Forall1(_, f) | Formula::Exists2(_, f) | Formula::Forall2(_, f) => {
                1 + f.binder_depth()
            }
            f => f.children().into_iter().map(Formula::binder_depth).max().unwrap_or(0),
        }
    }

    /// Largest successor direction used, if any.
    pub fn max_direction(&self) -> Option<u8> {
        match self {
            Formula::Eq(a, b) => a.max_direction().max(b.max_direction()),
            Formula::In(t, _) => t.max_direction(),
            f => f.children().into_iter().filter_map(Formula::max_direction).max(),
        }
    }

    /// Free variables with their sorts; fails when a name is used with both
    /// sorts in the same scope.
    pub fn free_vars(&self) -> Result<BTreeMap<String, Sort>, WsksError> {
        let mut out = BTreeMap::new();
        self.collect_free(&mut Vec::new(), &mut out)?;
        Ok(out)
    }

    fn collect_free(&self, bound: &mut Vec<(String, Sort)>, out: &mut BTreeMap<String, Sort>) -> Result<(), WsksError> {
        fn note(name: &str, sort: Sort, bound: &[(String, Sort)], out: &mut BTreeMap<String, Sort>) -> Result<(), WsksError> {
            let found = bound.iter().rev().find(|(n, _)| n == name).map(|(_, s)| *s);
            let sort_seen = match found {
                Some(s) => s,
                None => *out.entry(name.to_string()).or_insert(sort),
            };
            if sort_seen != sort {
                return Err(WsksError::IllSorted(name.to_string()));
            }
            Ok(())
        }
        fn term(t: &FoTerm, bound: &[(String, Sort)], out: &mut BTreeMap<String, Sort>) -> Result<(), WsksError> {
            match t.base().0 {
                FoTerm::Var(x) => note(x, Sort::First, bound, out),
                _ => Ok(()),
            }
        }
        match self {
            Formula::Eq(a, b) => {
                term(a, bound, out)?;
                term(b, bound, out)
            }
            Formula::In(t, x) => {
                term(t, bound, out)?;
                note(x, Sort::Second, bound, out)
            }
            Formula::Exists1(x, f) | Formula::Forall1(x, f) => {
                bound.push((x.clone(), Sort::First));
                let r = f.collect_free(bound, out);
                bound.pop();
                r
            }
            Formula::Exists2(x, f) | Formula::Forall2(x, f) => {
                bound.push((x.clone(), Sort::Second));
                let r = f.collect_free(bound, out);
                bound.pop();
                r
            }
            f => f.children().into_iter().try_for_each(|c| c.collect_free(bound, out)),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, v: &[Formula], op: &str| {
            write!(f, "(")?;
            for (i, x) in v.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, ")")
        };
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::In(t, x) => write!(f, "{x}({t})"),
            Formula::Not(a) => write!(f, "¬{a}"),
            Formula::And(v) => join(f, v, "∧"),
            Formula::Or(v) => join(f, v, "∨"),
            Formula::Implies(a, b) => write!(f, "({a} → {b})"),
            Formula::Iff(a, b) => write!(f, "({a} ↔ {b})"),
            Formula::Exists1(x, b) | Formula::Exists2(x, b) => write!(f, "∃{x}. {b}"),
            Formula::Forall1(x, b) | Formula::Forall2(x, b) => write!(f, "∀{x}. {b}"),
        }
    }
}

/// A formula interpreted over the κ-ary tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wsks {
    pub kappa: usize,
    pub formula: Formula,
}

impl Wsks {
    /// Checks sorts and that every successor direction is below κ.
    pub fn new(kappa: usize, formula: Formula) -> Result<Wsks, WsksError> {
        if kappa == 0 {
            return Err(WsksError::UnsupportedArity(0));
        }
        if let Some(d) = formula.max_direction() {
            if usize::from(d) >= kappa {
                return Err(WsksError::DirectionOutOfRange { direction: d, kappa });
            }
        }
        formula.free_vars()?;
        Ok(Wsks { kappa, formula })
    }

    pub fn free_vars(&self) -> BTreeMap<String, Sort> {
        self.formula.free_vars().expect("checked at construction")
    }

    pub fn free_set_vars(&self) -> BTreeSet<String> {
        self.free_vars().into_iter().filter(|(_, s)| *s == Sort::Second).map(|(n, _)| n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_fold() {
        assert_eq!(Formula::and([Formula::True, Formula::is_in("x", "X")]), Formula::is_in("x", "X"));
        assert_eq!(Formula::or([Formula::False, Formula::False]), Formula::False);
        assert_eq!(Formula::implies(Formula::False, Formula::is_in("x", "X")), Formula::True);
        assert_eq!(Formula::exists2("X", Formula::True), Formula::True);
    }

    #[test]
    fn free_vars_and_sorts() {
        let f = Formula::exists1("x", Formula::and([Formula::is_in("x", "U1"), Formula::eq(FoTerm::var("y"), FoTerm::Root)]));
        let fv = f.free_vars().unwrap();
        assert_eq!(fv.get("U1"), Some(&Sort::Second));
        assert_eq!(fv.get("y"), Some(&Sort::First));
        assert!(!fv.contains_key("x"));
        let bad = Formula::and([Formula::is_in("x", "X"), Formula::is_in("X", "Y")]);
        assert_eq!(bad.free_vars(), Err(WsksError::IllSorted("X".into())));
    }

    #[test]
    fn direction_bound_is_checked() {
        let f = Formula::mem(FoTerm::succ(1, FoTerm::Root), "X");
        assert!(Wsks::new(2, f.clone()).is_ok());
        assert_eq!(Wsks::new(1, f), Err(WsksError::DirectionOutOfRange { direction: 1, kappa: 1 }));
    }

    #[test]
    fn nesting_and_depth() {
        let f = Formula::forall1("x", Formula::exists2("Y", Formula::mem(FoTerm::succ(0, FoTerm::succ(0, FoTerm::var("x"))), "Y")));
        assert_eq!(f.succ_nesting(), 2);
        assert_eq!(f.binder_depth(), 2);
        assert_eq!(f.size(), 3);
    }
}
