//! Finite consistency of sets of instances `φ(x, a)`: realizable over the
//! host, extensions allowed.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::logic::{evaluate, Assignment, Formula, Term as LTerm};
use crate::te::diagram::{realize_diagram, Atom, Diagram, Realization, Term};
use crate::te::TEStructure;

/// Orders names by alphabetic stem, then numeric suffix: `y2` before `y10`.
pub fn natural_order(vars: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut v: Vec<String> = vars.into_iter().collect();
    v.sort_by_cached_key(|s| {
        let stem = s.trim_end_matches(|c: char| c.is_ascii_digit());
        let num: u64 = s[stem.len()..].parse().unwrap_or(0);
        (stem.to_string(), num, s.clone())
    });
    v
}

/// A quantifier-free LE formula split into object variables `x` and
/// parameter variables `y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamFormula {
    pub formula: Formula,
    pub object: Vec<String>,
    pub params: Vec<String>,
}

#[derive(Clone, Debug)]
enum Lit {
    Eq(String, String, bool),
    E(Vec<String>, Vec<String>, bool),
}

impl ParamFormula {
    /// Without `params`, the free variables outside `object` in natural order.
    pub fn new(formula: Formula, object: Vec<String>, params: Option<Vec<String>>) -> Result<Self> {
        if !formula.is_quantifier_free() {
            return Err(Error::UnsupportedShape(format!("`{formula}` is not quantifier-free")));
        }
        let free = formula.free_vars();
        let params = params.unwrap_or_else(|| natural_order(free.iter().filter(|v| !object.contains(v)).cloned()));
        let named: BTreeSet<&String> = object.iter().chain(&params).collect();
        if named.len() != object.len() + params.len() {
            return Err(Error::InvalidInput("a variable is listed twice".into()));
        }
        if let Some(v) = free.iter().find(|v| !named.contains(v)) {
            return Err(Error::UnboundVariable(v.clone()));
        }
        Ok(ParamFormula { formula, object, params })
    }

    pub fn holds(&self, s: &TEStructure, x: &[usize], a: &[usize]) -> Result<bool> {
        let mut asg = Assignment::new();
        for (v, &e) in self.object.iter().zip(x).chain(self.params.iter().zip(a)) {
            asg.insert(v.clone(), e);
        }
        evaluate(s, &self.formula, &asg)
    }

    /// Disjuncts of `φ(x, a)` as diagram atoms.
    fn instance(&self, a: &[usize]) -> Result<Vec<Vec<Atom>>> {
        if a.len() != self.params.len() {
            return Err(Error::Arity(format!("{} parameters for a tuple of length {}", self.params.len(), a.len())));
        }
        let term = |v: &String| match self.object.iter().position(|o| o == v) {
            Some(i) => Term::Var(i),
            None => Term::Base(a[self.params.iter().position(|p| p == v).unwrap()]),
        };
        Ok(dnf(&self.formula, true)?
            .into_iter()
            .map(|conj| {
                conj.iter()
                    .map(|l| match l {
                        Lit::Eq(x, y, pos) => Atom::Eq(term(x), term(y), *pos),
                        Lit::E(x, y, pos) => Atom::E(x.iter().map(term).collect(), y.iter().map(term).collect(), *pos),
                    })
                    .collect()
            })
            .collect())
    }
}

/// Disjunctive normal form of `f` (or of `¬f` when `!pos`).
fn dnf(f: &Formula, pos: bool) -> Result<Vec<Vec<Lit>>> {
    let product = |a: Vec<Vec<Lit>>, b: Vec<Vec<Lit>>| {
        let mut out = vec![];
        for x in &a {
            for y in &b {
                out.push(x.iter().chain(y).cloned().collect());
            }
        }
        out
    };
    Ok(match (f, pos) {
        (Formula::True, true) | (Formula::False, false) => vec![vec![]],
        (Formula::True, false) | (Formula::False, true) => vec![],
        (Formula::Eq(LTerm::Var(x), LTerm::Var(y)), _) => vec![vec![Lit::Eq(x.clone(), y.clone(), pos)]],
        (Formula::Eq(..), _) => return Err(Error::Dialect(format!("`{f}` is not an LE atom"))),
        (Formula::E(x, y), _) => vec![vec![Lit::E(x.clone(), y.clone(), pos)]],
        (Formula::Not(a), _) => dnf(a, !pos)?,
        (Formula::And(a, b), true) | (Formula::Or(a, b), false) => product(dnf(a, pos)?, dnf(b, pos)?),
        (Formula::Or(a, b), true) | (Formula::And(a, b), false) => {
            let mut v = dnf(a, pos)?;
            v.extend(dnf(b, pos)?);
            v
        }
        (Formula::Implies(a, b), true) => {
            let mut v = dnf(a, false)?;
            v.extend(dnf(b, true)?);
            v
        }
        (Formula::Implies(a, b), false) => product(dnf(a, true)?, dnf(b, false)?),
        (Formula::Exists(..) | Formula::Forall(..), _) => {
            return Err(Error::UnsupportedShape("quantifier in an instance".into()))
        }
    })
}

/// Realizes `{φ(x, a) : a in params}` over `host`, trying every choice of
/// one disjunct per instance.
pub fn realize_instances(host: &TEStructure, phi: &ParamFormula, params: &[&[usize]]) -> Result<Option<Realization>> {
    let parts = params.iter().map(|a| phi.instance(a)).collect::<Result<Vec<_>>>()?;
    fn go(host: &TEStructure, vars: usize, parts: &[Vec<Vec<Atom>>], acc: &mut Vec<Atom>) -> Result<Option<Realization>> {
        let Some((first, rest)) = parts.split_first() else {
            return realize_diagram(&Diagram { variables: vars, atoms: acc.clone() }, host);
        };
        for conj in first {
            let mark = acc.len();
            acc.extend(conj.iter().cloned());
            let r = go(host, vars, rest, acc)?;
            acc.truncate(mark);
            if r.is_some() {
                return Ok(r);
            }
        }
        Ok(None)
    }
    go(host, phi.object.len(), &parts, &mut vec![])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, Dialect};

    fn pf(text: &str) -> ParamFormula {
        ParamFormula::new(parse_formula(text, Dialect::Le).unwrap(), vec!["x".into()], None).unwrap()
    }

    #[test]
    fn natural_order_reads_numbers() {
        let v = natural_order(["y10", "y2", "u", "y1"].map(String::from));
        assert_eq!(v, ["u", "y1", "y2", "y10"]);
    }

    #[test]
    fn disjunction_picks_a_realizable_branch() {
        let host = TEStructure::discrete(2, 1);
        let phi = pf("(x = y & E1(x;x)) | (x = y & !(x = y))");
        assert!(realize_instances(&host, &phi, &[&[0]]).unwrap().is_some());
        assert!(realize_instances(&host, &phi, &[&[0], &[1]]).unwrap().is_none());
    }

    #[test]
    fn implication_and_negation() {
        let host = TEStructure::discrete(2, 1);
        let phi = pf("!(E1(x;y) -> x = y)");
        // x must be a new element in the class of y.
        let r = realize_instances(&host, &phi, &[&[0]]).unwrap().unwrap();
        assert_eq!(r.assignment, vec![2]);
        assert!(realize_instances(&host, &phi, &[&[0], &[1]]).unwrap().is_none());
    }

    #[test]
    fn undeclared_variables_are_rejected() {
        let f = parse_formula("E1(x;z)", Dialect::Le).unwrap();
        assert!(ParamFormula::new(f, vec!["x".into()], Some(vec!["y".into()])).is_err());
    }
}
