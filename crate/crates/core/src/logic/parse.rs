use std::collections::BTreeMap;

use super::{Dialect, Formula, Term};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Dot,
    Eq,
    Bang,
    Amp,
    Pipe,
    Arrow,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = vec![];
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        i += 1;
        let t = match c {
            c if c.is_whitespace() => continue,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            ':' => Tok::Colon,
            '.' => Tok::Dot,
            '=' => Tok::Eq,
            '!' => Tok::Bang,
            '&' => Tok::Amp,
            '|' => Tok::Pipe,
            '-' if chars.get(i).map(|c| c.1) == Some('>') => {
                i += 1;
                Tok::Arrow
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = c.to_string();
                while let Some(&(_, d)) = chars.get(i) {
                    if d.is_ascii_alphanumeric() || d == '_' || d == '\'' {
                        s.push(d);
                        i += 1;
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            _ => {
                return Err(Error::FormulaSyntax {
                    pos,
                    message: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push((pos, t));
    }
    Ok(out)
}

/// `E3` -> 3 for the given prefix letter.
fn indexed(s: &str, prefix: char) -> Option<usize> {
    let rest = s.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    i: usize,
    end: usize,
    dialect: Dialect,
    scope: Vec<(String, usize)>,
    free: BTreeMap<String, usize>,
}

impl Parser {
    fn pos(&self) -> usize {
        self.toks.get(self.i).map(|t| t.0).unwrap_or(self.end)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.1)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.i + 1).map(|t| &t.1)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::FormulaSyntax {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&t) {
            self.i += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) if !is_keyword(s) => {
                let s = s.clone();
                self.i += 1;
                Ok(s)
            }
            _ => self.err("expected a variable"),
        }
    }

    /// `S` or `S<n>` after a colon.
    fn sort(&mut self) -> Result<usize> {
        let at = self.pos();
        let s = self.ident()?;
        if s == "S" {
            return Ok(0);
        }
        match indexed(&s, 'S') {
            Some(n) if n >= 1 => Ok(n),
            _ => Err(Error::FormulaSyntax {
                pos: at,
                message: format!("unknown sort `{s}`"),
            }),
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        let left = self.disjunction()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.i += 1;
            let right = self.formula()?;
            return Ok(left.implies(right));
        }
        Ok(left)
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut f = self.conjunction()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.i += 1;
            f = f.or(self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut f = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.i += 1;
            f = f.and(self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.i += 1;
                Ok(self.unary()?.not())
            }
            Some(Tok::LParen) => {
                self.i += 1;
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Ident(s)) if s == "exists" || s == "forall" => {
                let exists = s == "exists";
                self.i += 1;
                let v = self.ident()?;
                let sort = if self.peek() == Some(&Tok::Colon) {
                    if self.dialect == Dialect::Le {
                        return self.err("sorted variables need the LSTAR dialect");
                    }
                    self.i += 1;
                    self.sort()?
                } else {
                    0
                };
                self.expect(Tok::Dot, "`.` after the bound variable")?;
                self.scope.push((v.clone(), sort));
                let body = Box::new(self.formula());
                self.scope.pop();
                let body = Box::new((*body)?);
                Ok(if exists {
                    Formula::Exists(v, sort, body)
                } else {
                    Formula::Forall(v, sort, body)
                })
            }
            Some(Tok::Ident(s)) if s == "true" => {
                self.i += 1;
                Ok(Formula::True)
            }
            Some(Tok::Ident(s)) if s == "false" => {
                self.i += 1;
                Ok(Formula::False)
            }
            Some(Tok::Ident(s)) if indexed(s, 'E').is_some() && self.peek2() == Some(&Tok::LParen) => self.e_atom(),
            Some(_) => self.equation(),
            None => self.err("unexpected end of formula"),
        }
    }

    fn var_list(&mut self, sort: usize) -> Result<Vec<String>> {
        let mut out = vec![self.var(Some(sort))?.0];
        while self.peek() == Some(&Tok::Comma) {
            self.i += 1;
            out.push(self.var(Some(sort))?.0);
        }
        Ok(out)
    }

    fn e_atom(&mut self) -> Result<Formula> {
        let at = self.pos();
        let Some(Tok::Ident(s)) = self.peek() else { unreachable!() };
        let n = indexed(s, 'E').unwrap();
        if self.dialect == Dialect::LStar {
            return Err(Error::Dialect(format!("position {at}: E{n} atoms belong to LE")));
        }
        self.i += 2;
        let x = self.var_list(0)?;
        self.expect(Tok::Semi, "`;` between the tuples")?;
        let y = self.var_list(0)?;
        self.expect(Tok::RParen, "`)`")?;
        if n == 0 || x.len() != n || y.len() != n {
            return Err(Error::Arity(format!(
                "position {at}: E{n} needs two {n}-tuples, got lengths {} and {}",
                x.len(),
                y.len()
            )));
        }
        Ok(Formula::E(x, y))
    }

    /// A variable occurrence with an optional annotation; returns its sort
    /// if known. `want` is the sort the context requires.
    fn var(&mut self, want: Option<usize>) -> Result<(String, Option<usize>)> {
        let at = self.pos();
        let v = self.ident()?;
        let mut sort = None;
        if self.peek() == Some(&Tok::Colon) && self.dialect == Dialect::LStar {
            self.i += 1;
            sort = Some(self.sort()?);
        }
        let known = self
            .scope
            .iter()
            .rev()
            .find(|(n, _)| *n == v)
            .map(|p| p.1)
            .or_else(|| self.free.get(&v).copied());
        let resolved = match (known, sort.or(want)) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::SortMismatch(format!("position {at}: `{v}` has sort {} here but {} elsewhere", sort_name(b), sort_name(a))))
            }
            (Some(a), _) => Some(a),
            (None, b) => b,
        };
        if let Some(s) = resolved {
            if !self.scope.iter().any(|(n, _)| *n == v) {
                self.free.insert(v.clone(), s);
            }
        }
        Ok((v, resolved))
    }

    fn term(&mut self) -> Result<(Term, Option<usize>)> {
        if self.dialect == Dialect::LStar {
            if let Some(Tok::Ident(s)) = self.peek() {
                if let (Some(n), Some(Tok::LParen)) = (indexed(s, 'f'), self.peek2()) {
                    let at = self.pos();
                    self.i += 2;
                    let xs = self.var_list(0)?;
                    self.expect(Tok::RParen, "`)`")?;
                    if n == 0 || xs.len() != n {
                        return Err(Error::Arity(format!("position {at}: f{n} takes {n} arguments, got {}", xs.len())));
                    }
                    return Ok((Term::Fun(n, xs), Some(n)));
                }
                if let Some(n) = indexed(s, 'c').filter(|&n| n >= 1) {
                    self.i += 1;
                    return Ok((Term::Const(n), Some(n)));
                }
            }
        }
        let (v, s) = self.var(None)?;
        Ok((Term::Var(v), s))
    }

    fn equation(&mut self) -> Result<Formula> {
        let start = self.i;
        let (a, sa) = self.term()?;
        let at = self.pos();
        self.expect(Tok::Eq, "`=`")?;
        let (b, sb) = self.term()?;
        let (sa, sb) = match (sa, sb) {
            (Some(x), Some(y)) => (x, y),
            (Some(x), None) | (None, Some(x)) => (x, x),
            (None, None) => (0, 0),
        };
        if sa != sb {
            return Err(Error::SortMismatch(format!(
                "position {at}: {} = {} compares sorts {} and {}",
                term_text(&a),
                term_text(&b),
                sort_name(sa),
                sort_name(sb)
            )));
        }
        // Re-resolve so later uses see the inferred sort.
        let end = self.i;
        self.i = start;
        let _ = self.term_with(sa)?;
        self.expect(Tok::Eq, "`=`")?;
        let _ = self.term_with(sa)?;
        debug_assert_eq!(self.i, end);
        Ok(Formula::Eq(a, b))
    }

    fn term_with(&mut self, sort: usize) -> Result<Term> {
        match self.peek() {
            Some(Tok::Ident(s))
                if self.dialect == Dialect::LStar
                    && (indexed(s, 'f').is_some() && self.peek2() == Some(&Tok::LParen) || indexed(s, 'c').is_some_and(|n| n >= 1)) =>
            {
                Ok(self.term()?.0)
            }
            _ => Ok(Term::Var(self.var(Some(sort))?.0)),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "exists" | "forall" | "true" | "false")
}

fn sort_name(s: usize) -> String {
    if s == 0 {
        "S".into()
    } else {
        format!("S{s}")
    }
}

pub fn parse_formula(text: &str, dialect: Dialect) -> Result<Formula> {
    Ok(parse_formula_sorted(text, dialect)?.0)
}

/// Also returns the sort of each free variable whose sort is known.
pub fn parse_formula_sorted(text: &str, dialect: Dialect) -> Result<(Formula, BTreeMap<String, usize>)> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        i: 0,
        end: text.len(),
        dialect,
        scope: vec![],
        free: BTreeMap::new(),
    };
    let f = p.formula()?;
    if p.i != p.toks.len() {
        return p.err("trailing input");
    }
    Ok((f, p.free))
}

fn term_text(t: &Term) -> String {
    match t {
        Term::Var(v) => v.clone(),
        Term::Fun(n, xs) => format!("f{n}({})", xs.join(",")),
        Term::Const(n) => format!("c{n}"),
    }
}

pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    write(f, &mut out, true);
    out
}

/// `top`: a quantifier may print without parentheses here.
fn write(f: &Formula, out: &mut String, top: bool) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Eq(a, b) => {
            out.push_str(&term_text(a));
            out.push_str(" = ");
            out.push_str(&term_text(b));
        }
        Formula::E(x, y) => {
            out.push_str(&format!("E{}({};{})", x.len(), x.join(","), y.join(",")));
        }
        Formula::Not(a) => {
            out.push('!');
            if matches!(**a, Formula::Eq(..)) {
                out.push('(');
                write(a, out, true);
                out.push(')');
            } else {
                write(a, out, false);
            }
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            let op = match f {
                Formula::And(..) => " & ",
                Formula::Or(..) => " | ",
                _ => " -> ",
            };
            out.push('(');
            write(a, out, false);
            out.push_str(op);
            write(b, out, false);
            out.push(')');
        }
        Formula::Exists(v, s, a) | Formula::Forall(v, s, a) => {
            if !top {
                out.push('(');
            }
            out.push_str(if matches!(f, Formula::Exists(..)) { "exists " } else { "forall " });
            out.push_str(v);
            if *s != 0 {
                out.push_str(&format!(":S{s}"));
            }
            out.push_str(". ");
            write(a, out, true);
            if !top {
                out.push(')');
            }
        }
    }
}
