//! MONA input files: rendering and reading back.

use std::fmt::Write;

use super::formula::{FoTerm, Formula, Sort, Wsks};
use super::WsksError;

/// Logic header of the file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Ws1s,
    Ws2s,
}

impl Mode {
    /// The smallest mode able to express `kappa` successors.
    pub fn for_kappa(kappa: usize) -> Result<Mode, WsksError> {
        match kappa {
            1 => Ok(Mode::Ws1s),
            2 => Ok(Mode::Ws2s),
            k => Err(WsksError::UnsupportedArity(k)),
        }
    }

    fn header(self) -> &'static str {
        match self {
            Mode::Ws1s => "ws1s",
            Mode::Ws2s => "ws2s",
        }
    }

    fn kappa(self) -> usize {
        match self {
            Mode::Ws1s => 1,
            Mode::Ws2s => 2,
        }
    }
}

/// Renders `phi` with its free variables declared.
pub fn emit_solver(phi: &Wsks, mode: Mode) -> Result<String, WsksError> {
    if phi.kappa > 2 {
        return Err(WsksError::UnsupportedArity(phi.kappa));
    }
    if phi.kappa > mode.kappa() {
        return Err(WsksError::UnsupportedArity(phi.kappa));
    }
    let mut out = String::new();
    writeln!(out, "{};", mode.header()).expect("string write");
    let free = phi.free_vars();
    for (kw, sort) in [("var1", Sort::First), ("var2", Sort::Second)] {
        let names: Vec<&str> = free.iter().filter(|(_, s)| **s == sort).map(|(n, _)| n.as_str()).collect();
        if !names.is_empty() {
            writeln!(out, "{kw} {};", names.join(", ")).expect("string write");
        }
    }
    render(&phi.formula, mode, 0, &mut out);
    out.push_str(";\n");
    Ok(out)
}

fn term(t: &FoTerm, mode: Mode) -> String {
    match mode {
        Mode::Ws1s => match t.base() {
            (FoTerm::Root, dirs) => dirs.len().to_string(),
            (FoTerm::Var(x), dirs) if dirs.is_empty() => x.clone(),
            (FoTerm::Var(x), dirs) => format!("{x}+{}", dirs.len()),
            (FoTerm::Succ(..), _) => unreachable!("base strips successors"),
        },
        Mode::Ws2s => match t {
            FoTerm::Root => "root".into(),
            FoTerm::Var(x) => x.clone(),
            FoTerm::Succ(a, inner) => format!("{}.{a}", term(inner, mode)),
        },
    }
}

fn render(f: &Formula, mode: Mode, indent: usize, out: &mut String) {
    let pad = |n: usize| " ".repeat(n);
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Eq(a, b) => write!(out, "{} = {}", term(a, mode), term(b, mode)).expect("string write"),
        Formula::In(t, x) => write!(out, "{} in {x}", term(t, mode)).expect("string write"),
        Formula::Not(a) => {
            out.push_str("~(");
            render(a, mode, indent + 2, out);
            out.push(')');
        }
        Formula::And(v) | Formula::Or(v) => {
            let op = if matches!(f, Formula::And(_)) { "&" } else { "|" };
            out.push('(');
            for (i, g) in v.iter().enumerate() {
                if i > 0 {
                    write!(out, "\n{}{op} ", pad(indent + 1)).expect("string write");
                }
                render(g, mode, indent + 3, out);
            }
            out.push(')');
        }
        Formula::Implies(a, b) | Formula::Iff(a, b) => {
            let op = if matches!(f, Formula::Implies(..)) { "=>" } else { "<=>" };
            out.push('(');
            render(a, mode, indent + 1, out);
            write!(out, "\n{}{op} ", pad(indent + 1)).expect("string write");
            render(b, mode, indent + op.len() + 2, out);
            out.push(')');
        }
        Formula::Exists1(x, b) | Formula::Forall1(x, b) | Formula::Exists2(x, b) | Formula::Forall2(x, b) => {
            let kw = match f {
                Formula::Exists1(..) => "ex1",
                Formula::Forall1(..) => "all1",
                Formula::Exists2(..) => "ex2",
                _ => "all2",
            };
            write!(out, "({kw} {x}:\n{}", pad(indent + 2)).expect("string write");
            render(b, mode, indent + 2, out);
            out.push(')');
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(usize),
    Sym(&'static str),
}

fn lex(text: &str) -> Result<Vec<Tok>, WsksError> {
    const SYMS: [&str; 12] = ["<=>", "=>", "(", ")", "~", "&", "|", "=", ":", ";", ",", "+"];
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '.' {
            out.push(Tok::Sym("."));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Tok::Num(s.parse().map_err(|_| WsksError::ParseError(format!("bad number `{s}`")))?));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
            continue;
        }
        for s in SYMS {
            let n = s.chars().count();
            if chars[i..].iter().take(n).copied().eq(s.chars()) {
                out.push(Tok::Sym(s));
                i += n;
                continue 'outer;
            }
        }
        return Err(WsksError::ParseError(format!("unexpected character `{c}`")));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    mode: Mode,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Result<Tok, WsksError> {
        let t = self.toks.get(self.pos).cloned().ok_or_else(|| WsksError::ParseError("unexpected end of input".into()))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, s: &'static str) -> Result<(), WsksError> {
        match self.next()? {
            Tok::Sym(t) if t == s => Ok(()),
            t => Err(WsksError::ParseError(format!("expected `{s}`, found {t:?}"))),
        }
    }

    fn eat(&mut self, s: &'static str) -> bool {
        if self.peek() == Some(&Tok::Sym(s)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, WsksError> {
        match self.next()? {
            Tok::Ident(s) => Ok(s),
            t => Err(WsksError::ParseError(format!("expected a name, found {t:?}"))),
        }
    }

    fn term(&mut self) -> Result<FoTerm, WsksError> {
        let mut t = match self.next()? {
            Tok::Num(n) if self.mode == Mode::Ws1s => (0..n).fold(FoTerm::Root, |t, _| FoTerm::succ(0, t)),
            Tok::Ident(s) if s == "root" && self.mode == Mode::Ws2s => FoTerm::Root,
            Tok::Ident(s) => FoTerm::Var(s),
            t => return Err(WsksError::ParseError(format!("expected a term, found {t:?}"))),
        };
        loop {
            if self.mode == Mode::Ws1s && self.eat("+") {
                match self.next()? {
                    Tok::Num(n) => t = (0..n).fold(t, |t, _| FoTerm::succ(0, t)),
                    other => return Err(WsksError::ParseError(format!("expected an offset, found {other:?}"))),
                }
            } else if self.mode == Mode::Ws2s && self.eat(".") {
                match self.next()? {
                    Tok::Num(a @ (0 | 1)) => t = FoTerm::succ(a as u8, t),
                    other => return Err(WsksError::ParseError(format!("expected 0 or 1, found {other:?}"))),
                }
            } else {
                return Ok(t);
            }
        }
    }

    fn primary(&mut self) -> Result<Formula, WsksError> {
        match self.peek() {
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let f = self.inner()?;
                self.expect(")")?;
                Ok(f)
            }
            Some(Tok::Sym("~")) => {
                self.pos += 1;
                Ok(Formula::Not(Box::new(self.primary()?)))
            }
            Some(Tok::Ident(s)) if s == "true" => {
                self.pos += 1;
                Ok(Formula::True)
            }
            Some(Tok::Ident(s)) if s == "false" => {
                self.pos += 1;
                Ok(Formula::False)
            }
            _ => {
                let t = self.term()?;
                if self.eat("=") {
                    Ok(Formula::Eq(t, self.term()?))
                } else {
                    match self.next()? {
                        Tok::Ident(s) if s == "in" => Ok(Formula::In(t, self.ident()?)),
                        other => Err(WsksError::ParseError(format!("expected `=` or `in`, found {other:?}"))),
                    }
                }
            }
        }
    }

    fn inner(&mut self) -> Result<Formula, WsksError> {
        if let Some(Tok::Ident(kw)) = self.peek() {
            let make: Option<fn(String, Box<Formula>) -> Formula> = match kw.as_str() {
                "ex1" => Some(Formula::Exists1),
                "all1" => Some(Formula::Forall1),
                "ex2" => Some(Formula::Exists2),
                "all2" => Some(Formula::Forall2),
                _ => None,
            };
            if let Some(make) = make {
                self.pos += 1;
                let x = self.ident()?;
                self.expect(":")?;
                return Ok(make(x, Box::new(self.inner()?)));
            }
        }
        let first = self.primary()?;
        match self.peek() {
            Some(Tok::Sym(op @ ("&" | "|"))) => {
                let op = *op;
                let mut v = vec![first];
                while self.eat(op) {
                    v.push(self.primary()?);
                }
                Ok(if op == "&" { Formula::And(v) } else { Formula::Or(v) })
            }
            Some(Tok::Sym("=>")) => {
                self.pos += 1;
                Ok(Formula::Implies(Box::new(first), Box::new(self.primary()?)))
            }
            Some(Tok::Sym("<=>")) => {
                self.pos += 1;
                Ok(Formula::Iff(Box::new(first), Box::new(self.primary()?)))
            }
            _ => Ok(first),
        }
    }
}

/// Reads back a file produced by [`emit_solver`].
pub fn parse_solver(text: &str) -> Result<Wsks, WsksError> {
    let toks = lex(text)?;
    let mode = match toks.first() {
        Some(Tok::Ident(h)) if h == "ws1s" => Mode::Ws1s,
        Some(Tok::Ident(h)) if h == "ws2s" => Mode::Ws2s,
        t => return Err(WsksError::ParseError(format!("expected a ws1s or ws2s header, found {t:?}"))),
    };
    let mut p = Parser { toks, pos: 1, mode };
    p.expect(";")?;
    let mut declared = Vec::new();
    while let Some(Tok::Ident(kw)) = p.peek() {
        let sort = match kw.as_str() {
            "var1" => Sort::First,
            "var2" => Sort::Second,
            _ => break,
        };
        p.pos += 1;
        loop {
            declared.push((p.ident()?, sort));
            if !p.eat(",") {
                break;
            }
        }
        p.expect(";")?;
    }
    let formula = p.inner()?;
    p.expect(";")?;
    if p.pos != p.toks.len() {
        return Err(WsksError::ParseError("trailing input".into()));
    }
    let phi = Wsks::new(mode.kappa(), formula)?;
    for (name, sort) in phi.free_vars() {
        if !declared.contains(&(name.clone(), sort)) {
            return Err(WsksError::ParseError(format!("`{name}` is not declared")));
        }
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Formula {
        Formula::and([
            Formula::forall1(
                "x",
                Formula::iff(Formula::is_in("x", "U1"), Formula::eq(FoTerm::var("x"), FoTerm::Root)),
            ),
            Formula::exists2(
                "R_dn_r1_x",
                Formula::or([
                    Formula::mem(FoTerm::succ(0, FoTerm::succ(0, FoTerm::var("y"))), "R_dn_r1_x"),
                    Formula::not(Formula::is_in("y", "U2")),
                    Formula::implies(Formula::mem(FoTerm::succ(0, FoTerm::Root), "U1"), Formula::is_in("y", "U1")),
                ]),
            ),
        ])
    }

    #[test]
    fn ws1s_text() {
        let phi = Wsks::new(1, sample()).unwrap();
        let text = emit_solver(&phi, Mode::Ws1s).unwrap();
        assert!(text.starts_with("ws1s;\nvar1 y;\nvar2 U1, U2;\n"));
        assert!(text.contains("y+2 in R_dn_r1_x"));
        assert!(text.contains("1 in U1"));
        assert!(text.contains("x = 0"));
        assert_eq!(parse_solver(&text).unwrap(), phi);
    }

    #[test]
    fn ws2s_text() {
        let f = Formula::and([sample(), Formula::mem(FoTerm::succ(1, FoTerm::var("y")), "U2")]);
        let phi = Wsks::new(2, f).unwrap();
        let text = emit_solver(&phi, Mode::Ws2s).unwrap();
        assert!(text.starts_with("ws2s;\n"));
        assert!(text.contains("y.0.0 in R_dn_r1_x"));
        assert!(text.contains("y.1 in U2"));
        assert!(text.contains("root.0 in U1"));
        assert_eq!(parse_solver(&text).unwrap(), phi);
        assert_eq!(emit_solver(&phi, Mode::Ws1s), Err(WsksError::UnsupportedArity(2)));
    }

    #[test]
    fn arity_three_is_rejected() {
        let phi = Wsks::new(3, Formula::mem(FoTerm::succ(2, FoTerm::Root), "X")).unwrap();
        assert_eq!(emit_solver(&phi, Mode::Ws2s), Err(WsksError::UnsupportedArity(3)));
        assert_eq!(Mode::for_kappa(3), Err(WsksError::UnsupportedArity(3)));
    }

    #[test]
    fn malformed_input() {
        assert!(matches!(parse_solver("ws3s; true;"), Err(WsksError::ParseError(_))));
        assert!(matches!(parse_solver("ws1s; x in X;"), Err(WsksError::ParseError(_))));
        assert!(matches!(parse_solver("ws1s; var2 X; (x in X;"), Err(WsksError::ParseError(_))));
    }
}
