use std::collections::BTreeMap;

use super::{Formula, Term};
use crate::error::{Error, Result};
use crate::structure::{Elem, Structure};
use crate::te::TEStructure;

pub type Assignment<V> = BTreeMap<String, V>;

/// Finite models a formula can be evaluated in.
pub trait Evaluable {
    type Value: Clone + std::fmt::Debug;

    /// Values of a quantifier over `sort`.
    fn domain(&self, sort: usize) -> Result<Vec<Self::Value>>;

    fn term(&self, t: &Term, asg: &Assignment<Self::Value>) -> Result<Self::Value>;

    fn equal(&self, a: &Self::Value, b: &Self::Value) -> bool;

    fn e_atom(&self, x: &[Self::Value], y: &[Self::Value]) -> Result<bool>;
}

fn lookup<V: Clone>(asg: &Assignment<V>, v: &str) -> Result<V> {
    asg.get(v).cloned().ok_or_else(|| Error::UnboundVariable(v.into()))
}

impl Evaluable for TEStructure {
    type Value = usize;

    fn domain(&self, sort: usize) -> Result<Vec<usize>> {
        if sort != 0 {
            return Err(Error::Dialect("sorted quantifier over a one-sorted structure".into()));
        }
        Ok((0..self.size()).collect())
    }

    fn term(&self, t: &Term, asg: &Assignment<usize>) -> Result<usize> {
        match t {
            Term::Var(v) => {
                let x = lookup(asg, v)?;
                if x >= self.size() {
                    return Err(Error::CarrierMembership(format!("{v} = {x} with size {}", self.size())));
                }
                Ok(x)
            }
            _ => Err(Error::Dialect(format!("term {t:?} needs the LSTAR dialect"))),
        }
    }

    fn equal(&self, a: &usize, b: &usize) -> bool {
        a == b
    }

    fn e_atom(&self, x: &[usize], y: &[usize]) -> Result<bool> {
        if x.len() > self.maxarity() {
            return Err(Error::Arity(format!("E{} with maxarity {}", x.len(), self.maxarity())));
        }
        Ok(self.related(x, y))
    }
}

impl Evaluable for Structure {
    type Value = Elem;

    fn domain(&self, sort: usize) -> Result<Vec<Elem>> {
        if sort >= self.carriers().len() {
            return Err(Error::SortMismatch(format!("no sort {sort}")));
        }
        Ok((0..self.carrier_size(sort)).map(|i| Elem::new(sort, i)).collect())
    }

    fn term(&self, t: &Term, asg: &Assignment<Elem>) -> Result<Elem> {
        let sig = self.signature().clone();
        match t {
            Term::Var(v) => {
                let e = lookup(asg, v)?;
                if !self.contains(e) {
                    return Err(Error::CarrierMembership(format!("{v} = {}/{}", e.sort, e.index)));
                }
                Ok(e)
            }
            Term::Fun(n, xs) => {
                let f = sig
                    .function_id(&format!("f{n}"))
                    .ok_or_else(|| Error::Dialect(format!("no function f{n}")))?;
                let sym = &sig.functions()[f];
                let mut args = vec![];
                for (x, &s) in xs.iter().zip(&sym.args) {
                    let e = self.term(&Term::Var(x.clone()), asg)?;
                    if e.sort != s {
                        return Err(Error::SortMismatch(format!("argument {x} of f{n}")));
                    }
                    args.push(e.index);
                }
                Ok(Elem::new(sym.result, self.apply(f, &args)))
            }
            Term::Const(n) => {
                let c = sig
                    .constant_id(&format!("c{n}"))
                    .ok_or_else(|| Error::Dialect(format!("no constant c{n}")))?;
                Ok(Elem::new(sig.constants()[c].sort, self.constant(c)))
            }
        }
    }

    fn equal(&self, a: &Elem, b: &Elem) -> bool {
        a == b
    }

    fn e_atom(&self, _: &[Elem], _: &[Elem]) -> Result<bool> {
        Err(Error::Dialect("E atoms need a one-sorted structure".into()))
    }
}

/// Tarskian truth in a finite structure; quantifiers range over the carrier.
pub fn evaluate<M: Evaluable>(m: &M, f: &Formula, asg: &Assignment<M::Value>) -> Result<bool> {
    let mut asg = asg.clone();
    eval(m, f, &mut asg)
}

fn eval<M: Evaluable>(m: &M, f: &Formula, asg: &mut Assignment<M::Value>) -> Result<bool> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Eq(a, b) => {
            let a = m.term(a, asg)?;
            let b = m.term(b, asg)?;
            m.equal(&a, &b)
        }
        Formula::E(x, y) => {
            let xs = x.iter().map(|v| m.term(&Term::Var(v.clone()), asg)).collect::<Result<Vec<_>>>()?;
            let ys = y.iter().map(|v| m.term(&Term::Var(v.clone()), asg)).collect::<Result<Vec<_>>>()?;
            m.e_atom(&xs, &ys)?
        }
        Formula::Not(a) => !eval(m, a, asg)?,
        Formula::And(a, b) => eval(m, a, asg)? && eval(m, b, asg)?,
        Formula::Or(a, b) => eval(m, a, asg)? || eval(m, b, asg)?,
        Formula::Implies(a, b) => !eval(m, a, asg)? || eval(m, b, asg)?,
        Formula::Exists(v, s, a) | Formula::Forall(v, s, a) => {
            let exists = matches!(f, Formula::Exists(..));
            let saved = asg.get(v).cloned();
            let mut result = !exists;
            for x in m.domain(*s)? {
                asg.insert(v.clone(), x);
                if eval(m, a, asg)? == exists {
                    result = exists;
                    break;
                }
            }
            match saved {
                Some(x) => asg.insert(v.clone(), x),
                None => asg.remove(v),
            };
            result
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, Dialect};
    use proptest::prelude::*;

    fn le(s: &str) -> Formula {
        parse_formula(s, Dialect::Le).unwrap()
    }

    #[test]
    fn reflexivity_holds_everywhere() {
        for s in crate::te::class::all_te(2, 1) {
            assert!(evaluate(&s, &le("forall x. E1(x;x)"), &Assignment::new()).unwrap());
        }
    }

    #[test]
    fn two_singletons_have_no_related_pair() {
        let s = TEStructure::discrete(2, 1);
        assert!(!evaluate(&s, &le("exists x. exists y. (!(x = y) & E1(x;y))"), &Assignment::new()).unwrap());
    }

    #[test]
    fn unbound_variable() {
        let s = TEStructure::discrete(2, 1);
        assert_eq!(evaluate(&s, &le("E1(x;y)"), &Assignment::new()), Err(Error::UnboundVariable("x".into())));
    }

    #[test]
    fn dialect_mismatch() {
        let m = crate::te::to_tstar(&TEStructure::discrete(2, 1));
        assert!(matches!(evaluate(&m, &le("E1(x;x)"), &[("x".to_string(), Elem::new(0, 0))].into()), Err(Error::Dialect(_))));
    }

    proptest! {
        #[test]
        fn double_negation(seed in any::<u64>(), size in 1usize..4) {
            let s = crate::te::class::random_te(size, 2, &mut crate::rng(seed));
            let f = le("forall x. exists y. (E2(x,y;y,x) | x = y)");
            let asg = Assignment::new();
            prop_assert_eq!(evaluate(&s, &f, &asg).unwrap(), evaluate(&s, &f.clone().not().not(), &asg).unwrap());
        }
    }
}
