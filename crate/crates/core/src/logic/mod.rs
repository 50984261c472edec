//! First-order formulas over `E1..Ek` (dialect LE) and over the sorted
//! language with `f1..fk`, `c1..ck` (dialect LSTAR).

use std::collections::BTreeSet;
use std::fmt;

pub mod eval;
pub mod oracle;
pub mod parse;
pub mod qe;
pub mod translate;

pub use eval::{evaluate, Assignment, Evaluable};
pub use parse::{parse_formula, parse_formula_sorted, print_formula};
pub use qe::{decide_sentence, eliminate_quantifiers, is_valid};
pub use translate::{translate_le_to_lstar, translate_lstar_to_le};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dialect {
    Le,
    LStar,
}

impl std::str::FromStr for Dialect {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "le" => Ok(Dialect::Le),
            "lstar" | "l*" => Ok(Dialect::LStar),
            _ => Err(crate::Error::InvalidInput(format!("unknown dialect `{s}`"))),
        }
    }
}

/// Variables are sort 0 (`S`) unless annotated.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    /// `f<n>` applied to `n` variables of sort `S`.
    Fun(usize, Vec<String>),
    /// `c<n>`.
    Const(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Eq(Term, Term),
    /// `E<n>(x; y)` with both tuples of length `n`.
    E(Vec<String>, Vec<String>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// Bound variable and its sort.
    Exists(String, usize, Box<Formula>),
    Forall(String, usize, Box<Formula>),
}

impl Formula {
    pub fn var_eq(x: &str, y: &str) -> Formula {
        Formula::Eq(Term::Var(x.into()), Term::Var(y.into()))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Formula {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Formula) -> Formula {
        Formula::Implies(Box::new(self), Box::new(other))
    }

    pub fn exists(x: &str, body: Formula) -> Formula {
        Formula::Exists(x.into(), 0, Box::new(body))
    }

    pub fn forall(x: &str, body: Formula) -> Formula {
        Formula::Forall(x.into(), 0, Box::new(body))
    }

    /// Conjunction of `parts`; `true` when empty.
    pub fn conj(parts: impl IntoIterator<Item = Formula>) -> Formula {
        parts.into_iter().reduce(Formula::and).unwrap_or(Formula::True)
    }

    /// Disjunction of `parts`; `false` when empty.
    pub fn disj(parts: impl IntoIterator<Item = Formula>) -> Formula {
        parts.into_iter().reduce(Formula::or).unwrap_or(Formula::False)
    }

    /// The dialect a formula needs, `None` when it is valid in both.
    pub fn dialect(&self) -> Option<Dialect> {
        let mut le = false;
        let mut ls = false;
        self.visit(&mut |f| match f {
            Formula::E(..) => le = true,
            Formula::Eq(a, b) => {
                if !matches!(a, Term::Var(_)) || !matches!(b, Term::Var(_)) {
                    ls = true;
                }
            }
            Formula::Exists(_, s, _) | Formula::Forall(_, s, _) if *s != 0 => ls = true,
            _ => {}
        });
        match (le, ls) {
            (true, _) => Some(Dialect::Le),
            (false, true) => Some(Dialect::LStar),
            (false, false) => None,
        }
    }

    fn visit(&self, f: &mut dyn FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Not(a) | Formula::Exists(_, _, a) | Formula::Forall(_, _, a) => a.visit(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut vec![], &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut add = |v: &String, bound: &Vec<String>| {
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Eq(a, b) => {
                for t in [a, b] {
                    for v in t.vars() {
                        add(v, bound);
                    }
                }
            }
            Formula::E(x, y) => {
                for v in x.iter().chain(y) {
                    add(v, bound);
                }
            }
            Formula::Not(a) => a.collect_free(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(v, _, a) | Formula::Forall(v, _, a) => {
                bound.push(v.clone());
                a.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        let mut qf = true;
        self.visit(&mut |f| {
            if matches!(f, Formula::Exists(..) | Formula::Forall(..)) {
                qf = false;
            }
        });
        qf
    }

    /// Nesting depth of quantifiers.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::Not(a) => a.quantifier_depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.quantifier_depth().max(b.quantifier_depth())
            }
            Formula::Exists(_, _, a) | Formula::Forall(_, _, a) => 1 + a.quantifier_depth(),
            _ => 0,
        }
    }

    /// Number of atoms, counting `true`/`false`.
    pub fn atom_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |f| {
            if matches!(f, Formula::True | Formula::False | Formula::Eq(..) | Formula::E(..)) {
                n += 1;
            }
        });
        n
    }

    /// Largest `n` of an `E<n>` atom or `f<n>`/`c<n>` term.
    pub fn max_arity(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |f| match f {
            Formula::E(x, _) => n = n.max(x.len()),
            Formula::Eq(a, b) => n = n.max(a.arity()).max(b.arity()),
            Formula::Exists(_, s, _) | Formula::Forall(_, s, _) => n = n.max(*s),
            _ => {}
        });
        n
    }

    /// Bound variables renamed `_0, _1, ...` in binding order.
    pub fn normalize_bound(&self) -> Formula {
        fn go(f: &Formula, env: &mut Vec<(String, String)>, next: &mut usize) -> Formula {
            let r = |v: &String, env: &Vec<(String, String)>| {
                env.iter().rev().find(|(a, _)| a == v).map(|(_, b)| b.clone()).unwrap_or_else(|| v.clone())
            };
            let rt = |t: &Term, env: &Vec<(String, String)>| match t {
                Term::Var(v) => Term::Var(r(v, env)),
                Term::Fun(n, xs) => Term::Fun(*n, xs.iter().map(|x| r(x, env)).collect()),
                Term::Const(n) => Term::Const(*n),
            };
            match f {
                Formula::True | Formula::False => f.clone(),
                Formula::Eq(a, b) => Formula::Eq(rt(a, env), rt(b, env)),
                Formula::E(x, y) => Formula::E(x.iter().map(|v| r(v, env)).collect(), y.iter().map(|v| r(v, env)).collect()),
                Formula::Not(a) => go(a, env, next).not(),
                Formula::And(a, b) => go(a, env, next).and(go(b, env, next)),
                Formula::Or(a, b) => go(a, env, next).or(go(b, env, next)),
                Formula::Implies(a, b) => go(a, env, next).implies(go(b, env, next)),
                Formula::Exists(v, s, a) | Formula::Forall(v, s, a) => {
                    let name = format!("_{next}");
                    *next += 1;
                    env.push((v.clone(), name.clone()));
                    let body = Box::new(go(a, env, next));
                    env.pop();
                    if matches!(f, Formula::Exists(..)) {
                        Formula::Exists(name, *s, body)
                    } else {
                        Formula::Forall(name, *s, body)
                    }
                }
            }
        }
        go(self, &mut vec![], &mut 0)
    }
}

impl Term {
    pub fn vars(&self) -> Vec<&String> {
        match self {
            Term::Var(v) => vec![v],
            Term::Fun(_, xs) => xs.iter().collect(),
            Term::Const(_) => vec![],
        }
    }

    fn arity(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::Fun(n, _) | Term::Const(n) => *n,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_variables_skip_binders() {
        let f = parse_formula("exists x. (E1(x;y) & x = z)", Dialect::Le).unwrap();
        let fv: Vec<String> = f.free_vars().into_iter().collect();
        assert_eq!(fv, vec!["y".to_string(), "z".to_string()]);
        assert_eq!(f.quantifier_depth(), 1);
        assert_eq!(f.atom_count(), 2);
    }

    #[test]
    fn alpha_equivalent_formulas_normalize_alike() {
        let a = parse_formula("forall x. exists y. E1(x;y)", Dialect::Le).unwrap();
        let b = parse_formula("forall u. exists v. E1(u;v)", Dialect::Le).unwrap();
        assert_eq!(a.normalize_bound(), b.normalize_bound());
    }
}
