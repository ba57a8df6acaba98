use std::collections::{BTreeSet, HashSet};

use super::lexer::{lex, Spanned, Tok};
use super::{DiagCode, Diagnostic, SafetyQuery, Spec};
use crate::component::{ComponentType, Transition};
use crate::system::{RewritingSystem, Rule};
use crate::term::{ArchExpr, ArchSpec, Substitution, Symbol, Term, Var};

const KEYWORDS: &[&str] = &["component", "ports", "states", "init", "rule", "new", "root", "check", "deadlock", "pattern", "distinct"];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> Diagnostic {
        let (line, col) = self.here();
        Diagnostic::at(
            DiagCode::SyntaxError,
            format!("expected {}, found {}", expected.join(" or "), self.peek().describe()),
            line,
            col,
        )
        .with_expected(expected)
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&tok.describe()]))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("`{kw}`")]))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn ident_list(&mut self, close: Tok) -> PResult<Vec<String>> {
        let mut out = Vec::new();
        if *self.peek() == close {
            return Ok(out);
        }
        out.push(self.ident()?);
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn component(&mut self, dups: &mut Vec<Diagnostic>) -> PResult<ComponentType> {
        self.expect_kw("component")?;
        let name = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut c = ComponentType { name, ports: vec![], states: vec![], init: String::new(), rules: vec![] };
        let mut inits = Vec::new();
        while *self.peek() != Tok::RBrace {
            let (line, col) = self.here();
            if self.is_kw("ports") {
                self.bump();
                for p in self.ident_list(Tok::Semi)? {
                    if c.ports.contains(&p) {
                        dups.push(Diagnostic::at(DiagCode::DuplicateName, format!("port `{p}` declared twice in `{}`", c.name), line, col));
                    }
                    c.ports.push(p);
                }
                self.expect(Tok::Semi)?;
            } else if self.is_kw("states") {
                self.bump();
                loop {
                    let s = self.ident()?;
                    if self.is_kw("init") {
                        self.bump();
                        inits.push(s.clone());
                    }
                    if c.states.contains(&s) {
                        dups.push(Diagnostic::at(DiagCode::DuplicateName, format!("state `{s}` declared twice in `{}`", c.name), line, col));
                    }
                    c.states.push(s);
                    if *self.peek() != Tok::Comma {
                        break;
                    }
                    self.bump();
                }
                self.expect(Tok::Semi)?;
            } else if self.is_kw("rule") {
                self.bump();
                let from = self.ident()?;
                self.expect(Tok::Minus)?;
                let port = self.ident()?;
                self.expect(Tok::Arrow)?;
                let to = self.ident()?;
                self.expect(Tok::Semi)?;
                c.rules.push(Transition { from, port, to });
            } else {
                return Err(self.error(&["`ports`", "`states`", "`rule`", "`}`"]));
            }
        }
        self.bump();
        match inits.as_slice() {
            [one] => c.init = one.clone(),
            [] => {
                let (line, col) = self.here();
                dups.push(Diagnostic::at(DiagCode::UnknownState, format!("component `{}` has no initial state", c.name), line, col));
            }
            many => {
                let (line, col) = self.here();
                c.init = many[0].clone();
                dups.push(Diagnostic::at(DiagCode::DuplicateName, format!("component `{}` declares several initial states", c.name), line, col));
            }
        }
        Ok(c)
    }

    fn arch(&mut self) -> PResult<ArchExpr> {
        let mut acc = self.arch_prod()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            acc = ArchExpr::sum(acc, self.arch_prod()?);
        }
        Ok(acc)
    }

    fn arch_prod(&mut self) -> PResult<ArchExpr> {
        let mut acc = self.arch_factor()?;
        while *self.peek() == Tok::Dot {
            self.bump();
            acc = ArchExpr::prod(acc, self.arch_factor()?);
        }
        Ok(acc)
    }

    fn arch_factor(&mut self) -> PResult<ArchExpr> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let e = self.arch()?;
            self.expect(Tok::RParen)?;
            return Ok(e);
        }
        let port = self.ident().map_err(|_| self.error(&["port", "`(`"]))?;
        self.expect(Tok::LParen)?;
        let v = self.ident()?;
        self.expect(Tok::RParen)?;
        Ok(ArchExpr::port(&port, Symbol::var(v)))
    }

    fn term(&mut self) -> PResult<Term> {
        if self.is_kw("new") {
            self.bump();
            let v = self.ident()?;
            self.expect(Tok::Dot)?;
            let body = self.term()?;
            return Ok(Term::nu(Var::new(v), body));
        }
        if *self.peek() == Tok::Lt {
            self.bump();
            let arch = if *self.peek() == Tok::Gt { ArchSpec::empty() } else { self.arch()?.to_sop() };
            self.expect(Tok::Gt)?;
            self.expect(Tok::LParen)?;
            let mut args = vec![self.term()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                args.push(self.term()?);
            }
            self.expect(Tok::RParen)?;
            return Ok(Term::apply(arch, args));
        }
        let name = self.ident().map_err(|_| self.error(&["`new`", "`<`", "atom"]))?;
        self.expect(Tok::LParen)?;
        let args = self.ident_list(Tok::RParen)?;
        self.expect(Tok::RParen)?;
        Ok(Term::pred(&name, args.into_iter().map(Symbol::var).collect()))
    }

    fn query(&mut self) -> PResult<SafetyQuery> {
        self.expect_kw("check")?;
        if self.is_kw("deadlock") {
            self.bump();
            self.expect(Tok::Semi)?;
            return Ok(SafetyQuery::Deadlock);
        }
        self.expect_kw("pattern")?;
        let mut items = Vec::new();
        loop {
            let ty = self.ident()?;
            self.expect(Tok::At)?;
            let st = self.ident()?;
            items.push((ty, st));
            if *self.peek() != Tok::Comma {
                break;
            }
            self.bump();
        }
        if self.is_kw("distinct") {
            self.bump();
        }
        self.expect(Tok::Semi)?;
        Ok(SafetyQuery::Pattern(items))
    }
}

struct RawRule {
    rule: Rule,
    line: usize,
    col: usize,
}

pub fn parse(text: &str) -> Result<Spec, Vec<Diagnostic>> {
    let toks = lex(text).map_err(|d| vec![d])?;
    let mut p = Parser { toks, pos: 0 };
    let mut components = Vec::new();
    let mut rules: Vec<RawRule> = Vec::new();
    let mut root: Option<Term> = None;
    let mut queries = Vec::new();
    let mut diags = Vec::new();
    while *p.peek() != Tok::Eof {
        let (line, col) = p.here();
        if p.is_kw("component") {
            let c = p.component(&mut diags).map_err(|d| vec![d])?;
            if components.iter().any(|o: &ComponentType| o.name == c.name) {
                diags.push(Diagnostic::at(DiagCode::DuplicateName, format!("component `{}` declared twice", c.name), line, col));
            }
            components.push(c);
        } else if p.is_kw("root") {
            p.bump();
            let t = p.term().map_err(|d| vec![d])?;
            p.expect(Tok::Semi).map_err(|d| vec![d])?;
            if root.is_some() {
                diags.push(Diagnostic::at(DiagCode::DuplicateName, "root declared twice", line, col));
            }
            root = Some(t);
        } else if p.is_kw("check") {
            queries.push(p.query().map_err(|d| vec![d])?);
        } else {
            let r = (|| {
                let head = p.ident().map_err(|_| p.error(&["`component`", "`root`", "`check`", "rule head"]))?;
                p.expect(Tok::LParen)?;
                let params = p.ident_list(Tok::RParen)?;
                p.expect(Tok::RParen)?;
                p.expect(Tok::LArrow)?;
                let body = p.term()?;
                p.expect(Tok::Semi)?;
                Ok(Rule::new(&head, params.into_iter().map(Var::new).collect(), body))
            })()
            .map_err(|d| vec![d])?;
            let mut seen = HashSet::new();
            for v in &r.params {
                if !seen.insert(v) {
                    diags.push(Diagnostic::at(DiagCode::DuplicateName, format!("parameter `{v}` repeated in `{}`", r.head), line, col));
                }
            }
            rules.push(RawRule { rule: r, line, col });
        }
    }
    let Some(root) = root else {
        let (line, col) = p.here();
        return Err(vec![Diagnostic::at(DiagCode::SyntaxError, "missing `root` declaration", line, col).with_expected(&["`root`"])]);
    };

    let types: BTreeSet<&str> = components.iter().map(|c| c.name.as_str()).collect();
    let mut resolve_err = Vec::new();
    let mut resolve = |t: &Term, line: usize, col: usize| {
        t.map_atoms(&mut |a| match a {
            Term::Pred { name, args } if types.contains(name.as_str()) => {
                if args.len() != 1 {
                    resolve_err.push(Diagnostic::at(
                        DiagCode::ArityMismatch,
                        format!("instance atom `{name}` takes exactly one argument"),
                        line,
                        col,
                    ));
                }
                Term::Instance { ctype: name.clone(), sym: args.first().cloned().unwrap_or(Symbol::var("_")) }
            }
            other => other.clone(),
        })
    };
    let mut resolved = Vec::new();
    for r in &rules {
        resolved.push(Rule::new(&r.rule.head, r.rule.params.clone(), resolve(&r.rule.body, r.line, r.col)));
    }
    let root = resolve(&root, 0, 0);
    diags.extend(resolve_err);

    let mut spec = Spec {
        components,
        system: RewritingSystem::new(resolved),
        root,
        queries,
    };
    alpha_rename(&mut spec);
    diags.extend(super::validate::component_diagnostics(&spec.components));
    if diags.is_empty() {
        Ok(spec)
    } else {
        Err(diags)
    }
}

/// Give every binder in the spec a globally fresh name.
fn alpha_rename(spec: &mut Spec) {
    let mut taken: HashSet<String> = HashSet::new();
    let note = |t: &Term, params: &[Var], taken: &mut HashSet<String>| {
        taken.extend(params.iter().map(|v| v.0.clone()));
        taken.extend(t.free_vars().into_iter().map(|v| v.0));
        taken.extend(t.bound_vars().into_iter().map(|v| v.0));
    };
    for rule in &spec.system.rules {
        note(&rule.body, &rule.params, &mut taken);
    }
    note(&spec.root, &[], &mut taken);

    let mut used: HashSet<String> = HashSet::new();
    for rule in &mut spec.system.rules {
        let mut avoid: HashSet<String> = rule.params.iter().map(|v| v.0.clone()).collect();
        avoid.extend(rule.body.free_vars().into_iter().map(|v| v.0));
        rule.body = rename_binders(&rule.body, &mut used, &avoid, &taken);
    }
    let avoid: HashSet<String> = spec.root.free_vars().into_iter().map(|v| v.0).collect();
    spec.root = rename_binders(&spec.root, &mut used, &avoid, &taken);
}

fn rename_binders(t: &Term, used: &mut HashSet<String>, avoid: &HashSet<String>, taken: &HashSet<String>) -> Term {
    match t {
        Term::Nu { var, body } => {
            let base = var.0.clone();
            let mut name = base.clone();
            let mut k = 1;
            if used.contains(&name) || avoid.contains(&name) {
                loop {
                    name = format!("{base}_{k}");
                    k += 1;
                    if !used.contains(&name) && !avoid.contains(&name) && !taken.contains(&name) {
                        break;
                    }
                }
            }
            used.insert(name.clone());
            let body = if name != base {
                Substitution::from_pairs([(var.clone(), Symbol::var(name.clone()))]).apply(body)
            } else {
                (**body).clone()
            };
            Term::nu(Var::new(name), rename_binders(&body, used, avoid, taken))
        }
        Term::Apply { arch, args } => Term::Apply {
            arch: arch.clone(),
            args: args.iter().map(|a| rename_binders(a, used, avoid, taken)).collect(),
        },
        atom => atom.clone(),
    }
}
