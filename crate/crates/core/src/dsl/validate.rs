use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::{DiagCode, Diagnostic, SafetyQuery, Spec};
use crate::component::{state_owner, ComponentType};
use crate::term::{Term, Var};

/// Invariants local to component declarations plus cross-type disjointness.
pub(super) fn component_diagnostics(components: &[ComponentType]) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for c in components {
        if !c.has_state(&c.init) {
            out.push(Diagnostic::new(DiagCode::UnknownState, format!("initial state `{}` of `{}` is not declared", c.init, c.name)));
        }
        let mut labels: HashMap<&str, usize> = HashMap::new();
        for t in &c.rules {
            for s in [&t.from, &t.to] {
                if !c.has_state(s) {
                    out.push(Diagnostic::new(DiagCode::UnknownState, format!("state `{s}` is not declared in `{}`", c.name)));
                }
            }
            if !c.has_port(&t.port) {
                out.push(Diagnostic::new(DiagCode::UnknownPort, format!("port `{}` is not declared in `{}`", t.port, c.name)));
            }
            let n = labels.entry(t.port.as_str()).or_default();
            *n += 1;
            if *n == 2 {
                out.push(Diagnostic::new(
                    DiagCode::AssumptionViolation,
                    format!("port `{}` labels more than one transition of `{}`", t.port, c.name),
                ));
            }
        }
    }
    out
}

fn cross_component_diagnostics(components: &[ComponentType]) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut names = HashSet::new();
    let mut ports: HashMap<&str, &str> = HashMap::new();
    let mut states: HashMap<&str, &str> = HashMap::new();
    for c in components {
        if !names.insert(c.name.as_str()) {
            out.push(Diagnostic::new(DiagCode::DuplicateName, format!("component `{}` declared twice", c.name)));
        }
        for p in &c.ports {
            if let Some(other) = ports.insert(p, &c.name) {
                if other != c.name {
                    out.push(Diagnostic::new(DiagCode::NameClash, format!("port `{p}` used by `{other}` and `{}`", c.name)));
                }
            }
        }
        for s in &c.states {
            if let Some(other) = states.insert(s, &c.name) {
                if other != c.name {
                    out.push(Diagnostic::new(DiagCode::NameClash, format!("state `{s}` used by `{other}` and `{}`", c.name)));
                }
            }
        }
    }
    out
}

struct TermCheck<'a> {
    types: &'a BTreeMap<&'a str, &'a ComponentType>,
    arities: &'a BTreeMap<String, usize>,
    out: &'a mut Vec<Diagnostic>,
}

impl TermCheck<'_> {
    fn check(&mut self, owner: &str, params: &[Var], body: &Term, seen_binders: &mut HashSet<Var>) {
        let params_set: BTreeSet<&Var> = params.iter().collect();
        for v in body.free_vars() {
            if !params_set.contains(&v) {
                self.out.push(Diagnostic::new(
                    DiagCode::FreeVariableEscape,
                    format!("variable `{v}` is free in `{owner}` but not a parameter"),
                ));
            }
        }
        for v in body.bound_vars() {
            if params_set.contains(&v) || !seen_binders.insert(v.clone()) {
                self.out.push(Diagnostic::new(DiagCode::DuplicateBinder, format!("binder `{v}` in `{owner}` is not fresh")));
            }
        }
        let mut atoms = Vec::new();
        body.visit(&mut |t| atoms.push(t.clone()));
        for t in atoms {
            match &t {
                Term::Instance { ctype, .. } => {
                    if !self.types.contains_key(ctype.as_str()) {
                        self.out.push(Diagnostic::new(DiagCode::UndefinedComponent, format!("component type `{ctype}` is not declared")));
                    }
                }
                Term::Pred { name, args } => match self.arities.get(name) {
                    None => self.out.push(Diagnostic::new(DiagCode::UndefinedPredicate, format!("predicate `{name}` has no rule"))),
                    Some(&n) if n != args.len() => self.out.push(Diagnostic::new(
                        DiagCode::ArityMismatch,
                        format!("predicate `{name}` has arity {n} but is used with {} arguments in `{owner}`", args.len()),
                    )),
                    _ => {}
                },
                Term::Apply { arch, .. } => {
                    for p in arch.products().iter().flatten() {
                        if !self.types.values().any(|c| c.has_port(&p.port)) {
                            self.out.push(Diagnostic::new(DiagCode::UnknownPort, format!("port `{}` is not declared by any component", p.port)));
                        }
                    }
                }
                Term::Nu { .. } => {}
            }
        }
    }
}

/// All diagnostics for a parsed spec; empty iff the spec is well formed.
pub fn validate_spec(spec: &Spec) -> Vec<Diagnostic> {
    let mut out = component_diagnostics(&spec.components);
    out.extend(cross_component_diagnostics(&spec.components));
    let types: BTreeMap<&str, &ComponentType> = spec.components.iter().map(|c| (c.name.as_str(), c)).collect();

    let arities = spec.system.arities();
    for r in &spec.system.rules {
        if arities[&r.head] != r.params.len() {
            out.push(Diagnostic::new(
                DiagCode::ArityMismatch,
                format!("rules for `{}` disagree on arity ({} vs {})", r.head, arities[&r.head], r.params.len()),
            ));
        }
        if types.contains_key(r.head.as_str()) {
            out.push(Diagnostic::new(DiagCode::NameClash, format!("predicate `{}` has the name of a component type", r.head)));
        }
        let mut seen = HashSet::new();
        for p in &r.params {
            if !seen.insert(p) {
                out.push(Diagnostic::new(DiagCode::DuplicateName, format!("parameter `{p}` repeated in `{}`", r.head)));
            }
        }
    }

    let mut binders = HashSet::new();
    {
        let mut tc = TermCheck { types: &types, arities: &arities, out: &mut out };
        for r in &spec.system.rules {
            tc.check(&r.head, &r.params, &r.body, &mut binders);
        }
        tc.check("root", &[], &spec.root, &mut binders);
    }

    for q in &spec.queries {
        if let SafetyQuery::Pattern(items) = q {
            for (ty, st) in items {
                let ok = types.get(ty.as_str()).is_some_and(|c| c.has_state(st))
                    && state_owner(&spec.components, st).is_some();
                if !ok {
                    out.push(Diagnostic::new(DiagCode::UnknownPatternState, format!("pattern item `{ty}@{st}` names no declared state")));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse_spec, tests::RING};
    use super::*;
    use crate::term::Symbol;

    fn codes(spec: &Spec) -> Vec<DiagCode> {
        validate_spec(spec).into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn unbound_variable_escapes() {
        let s = parse_spec(
            "component CType { ports out, in; states q0 init, q1; rule q0 -out-> q1; rule q1 -in-> q0; }
             Chain(x1, x2) <- < out(x1).in(y) > ( CType(x1), CType(x2) );
             root new a . new b . Chain(a, b);",
        )
        .unwrap();
        let d = validate_spec(&s);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagCode::FreeVariableEscape);
        assert!(d[0].message.contains("`y`"));
    }

    #[test]
    fn shared_state_name_clashes() {
        let s = parse_spec(
            "component A { ports a; states q0 init; rule q0 -a-> q0; }
             component B { ports b; states q0 init; rule q0 -b-> q0; }
             root new x . new y . < a(x).b(y) > ( A(x), B(y) );",
        )
        .unwrap();
        let d = validate_spec(&s);
        assert!(d.iter().any(|d| d.code == DiagCode::NameClash && d.message.contains("`q0`")));
    }

    #[test]
    fn single_fault_mutations() {
        let base = parse_spec(RING).unwrap();
        assert!(codes(&base).is_empty());

        // remove the binder of the recursive chain rule
        let mut m = base.clone();
        if let Term::Nu { body, .. } = &m.system.rules[2].body {
            m.system.rules[2].body = (**body).clone();
        }
        assert_eq!(codes(&m), vec![DiagCode::FreeVariableEscape]);

        // let `out` label a second transition
        let mut m = base.clone();
        let extra = m.components[0].rules[1].clone();
        m.components[0].rules.push(crate::component::Transition { port: "out".into(), ..extra });
        assert_eq!(codes(&m), vec![DiagCode::AssumptionViolation]);

        // call Chain with one argument from the root rule
        let mut m = base.clone();
        m.system.rules[0].body = m.system.rules[0].body.map_atoms(&mut |a| match a {
            Term::Pred { name, args } => Term::pred(name, vec![args[0].clone()]),
            other => other.clone(),
        });
        assert_eq!(codes(&m), vec![DiagCode::ArityMismatch]);

        let mut m = base.clone();
        m.root = Term::pred("Missing", vec![]);
        assert_eq!(codes(&m), vec![DiagCode::UndefinedPredicate]);

        let mut m = base;
        m.root = Term::pred("Chain", vec![Symbol::var("a"), Symbol::var("b")]);
        assert!(codes(&m).contains(&DiagCode::FreeVariableEscape));
    }

    #[test]
    fn unknown_pattern_state() {
        let s = parse_spec(&format!("{RING} check pattern CType@nope distinct;")).unwrap();
        assert_eq!(codes(&s), vec![DiagCode::UnknownPatternState]);
    }
}
