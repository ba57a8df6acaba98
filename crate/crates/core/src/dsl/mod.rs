//! The `.pas` specification language: parser, validator and printer.

mod lexer;
mod parser;
mod validate;

use std::fmt;
use std::fmt::Write as _;

use serde::Serialize;

use crate::component::ComponentType;
use crate::system::RewritingSystem;
use crate::term::Term;

pub use validate::validate_spec;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spec {
    pub components: Vec<ComponentType>,
    pub system: RewritingSystem,
    pub root: Term,
    pub queries: Vec<SafetyQuery>,
}

impl Spec {
    pub fn component(&self, name: &str) -> Option<&ComponentType> {
        self.components.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SafetyQuery {
    Deadlock,
    /// `(component type, state)` pairs held by pairwise-distinct instances.
    Pattern(Vec<(String, String)>),
}

impl fmt::Display for SafetyQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SafetyQuery::Deadlock => write!(f, "deadlock"),
            SafetyQuery::Pattern(items) => {
                write!(f, "pattern ")?;
                for (i, (t, s)) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}@{s}")?;
                }
                write!(f, " distinct")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum DiagCode {
    SyntaxError,
    DuplicateName,
    AssumptionViolation,
    NameClash,
    FreeVariableEscape,
    UndefinedPredicate,
    UndefinedComponent,
    ArityMismatch,
    UnknownState,
    UnknownPort,
    DuplicateBinder,
    UnknownPatternState,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub message: String,
    pub line: Option<usize>,
    pub col: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub expected: Vec<String>,
}

impl Diagnostic {
    pub fn new(code: DiagCode, message: impl Into<String>) -> Diagnostic {
        Diagnostic { code, message: message.into(), line: None, col: None, expected: Vec::new() }
    }

    pub fn at(code: DiagCode, message: impl Into<String>, line: usize, col: usize) -> Diagnostic {
        let mut d = Diagnostic::new(code, message);
        if line > 0 {
            d.line = Some(line);
            d.col = Some(col);
        }
        d
    }

    fn with_expected(mut self, expected: &[&str]) -> Diagnostic {
        self.expected = expected.iter().map(|s| s.to_string()).collect();
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.col) {
            (Some(l), Some(c)) => write!(f, "{l}:{c}: {:?}: {}", self.code, self.message),
            _ => write!(f, "{:?}: {}", self.code, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
pub struct ParseError(pub Vec<Diagnostic>);

/// Parse a specification. Syntax errors, duplicate declarations and
/// per-component invariant violations are reported here; cross-cutting
/// checks are left to [`validate_spec`].
pub fn parse_spec(text: &str) -> Result<Spec, ParseError> {
    parser::parse(text).map_err(ParseError)
}

/// Canonical rendering, re-parseable to a structurally equal spec.
pub fn pretty_print(spec: &Spec) -> String {
    let mut out = String::new();
    for c in &spec.components {
        let _ = writeln!(out, "component {} {{", c.name);
        let _ = writeln!(out, "  ports {};", c.ports.join(", "));
        let states: Vec<String> = c
            .states
            .iter()
            .map(|s| if *s == c.init { format!("{s} init") } else { s.clone() })
            .collect();
        let _ = writeln!(out, "  states {};", states.join(", "));
        for t in &c.rules {
            let _ = writeln!(out, "  rule {} -{}-> {};", t.from, t.port, t.to);
        }
        out.push_str("}\n\n");
    }
    for r in &spec.system.rules {
        let _ = writeln!(out, "{r}");
    }
    if !spec.system.rules.is_empty() {
        out.push('\n');
    }
    let _ = writeln!(out, "root {};", spec.root);
    for q in &spec.queries {
        let _ = writeln!(out, "check {q};");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const RING: &str = "
        component CType { ports out, in; states q0 init, q1; rule q0 -out-> q1; rule q1 -in-> q0; }
        Ring() <- new y1 . new y2 . < out(y2).in(y1) > ( Chain(y1, y2) );
        Chain(x1, x2) <- < out(x1).in(x2) > ( CType(x1), CType(x2) );
        Chain(x1, x2) <- new y1 . < out(x1).in(y1) > ( CType(x1), Chain(y1, x2) );
        root Ring();
        check deadlock;
    ";

    #[test]
    fn ring_parses() {
        let s = parse_spec(RING).unwrap();
        assert_eq!(s.components.len(), 1);
        assert_eq!(s.system.rules.len(), 3);
        assert_eq!(s.queries, vec![SafetyQuery::Deadlock]);
        // binder in the recursive rule clashes with the one in Ring() and is renamed
        assert_eq!(s.system.rules[2].body.bound_vars()[0].0, "y1_1");
        assert!(validate_spec(&s).is_empty());
    }

    #[test]
    fn predicate_less_spec() {
        let s = parse_spec(
            "component CType { ports out, in; states q0 init, q1; rule q0 -out-> q1; rule q1 -in-> q0; }
             root new i . new j . < out(i).in(j) > ( CType(i), CType(j) );",
        )
        .unwrap();
        assert!(s.system.rules.is_empty());
        assert!(s.root.is_predicate_free());
    }

    #[test]
    fn port_labeling_two_rules_rejected() {
        let err = parse_spec(
            "component C { ports p; states a init, b; rule a -p-> b; rule b -p-> a; }
             root new x . C(x);",
        )
        .unwrap_err();
        assert!(err.0.iter().any(|d| d.code == DiagCode::AssumptionViolation && d.message.contains("`p`")));
    }

    #[test]
    fn syntax_error_has_position_and_expected() {
        let err = parse_spec("component C { ports p states a init; }").unwrap_err();
        let d = &err.0[0];
        assert_eq!(d.code, DiagCode::SyntaxError);
        assert_eq!((d.line, d.col), (Some(1), Some(23)));
        assert!(!d.expected.is_empty());
    }

    #[test]
    fn pretty_print_round_trip() {
        let s = parse_spec(RING).unwrap();
        let text = pretty_print(&s);
        let again = parse_spec(&text).unwrap();
        assert_eq!(again, s);
        assert_eq!(pretty_print(&again), text);
    }

    #[test]
    fn nested_binders_renamed_fresh() {
        let s = parse_spec(
            "component C { ports p; states a init; rule a -p-> a; }
             A(x) <- new y . new y . < p(y) > ( C(y) );
             root new y . < p(y) > ( C(y), A(y) );",
        )
        .unwrap();
        let printed = pretty_print(&s);
        assert!(printed.contains("A(x) <- new y . new y_1 . < p(y_1) > ( C(y_1) );"), "{printed}");
        assert!(printed.contains("root new y_2 ."), "{printed}");
    }

    #[test]
    fn pattern_query_parses() {
        let s = parse_spec(
            "component Phil { ports p; states wait init; rule wait -p-> wait; }
             root new x . Phil(x);
             check pattern Phil@wait, Phil@wait distinct;",
        )
        .unwrap();
        assert_eq!(
            s.queries,
            vec![SafetyQuery::Pattern(vec![("Phil".into(), "wait".into()), ("Phil".into(), "wait".into())])]
        );
    }
}
