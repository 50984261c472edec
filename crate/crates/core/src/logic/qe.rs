//! Quantifier elimination for the theory of the generic structure.
//!
//! The free variables are split by equality pattern first, so that every
//! variable in scope names a different element. Then `exists x` is either
//! `x` equal to a variable in scope, handled by substitution, or `x` new.
//! For a new `x` the body is a Boolean combination of `E` atoms between
//! repetition-free tuples. Each conjunction of its normal form is a set of
//! merge and separation requests on tuples; it is consistent iff no
//! separated pair is merged, and what it says without `x` is read off the
//! tuples that avoid `x`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Formula, Term};
use crate::error::{Error, Result};
use crate::te::class::rgs;

/// Bound variables renamed `#0, #1, ...`, which no parsed name can clash with.
pub(crate) fn rename_bound(f: &Formula) -> Formula {
    fn go(f: &Formula, env: &mut Vec<(String, String)>, next: &mut usize) -> Formula {
        let r = |v: &String, env: &Vec<(String, String)>| {
            env.iter().rev().find(|(a, _)| a == v).map(|(_, b)| b.clone()).unwrap_or_else(|| v.clone())
        };
        match f {
            Formula::True | Formula::False => f.clone(),
            Formula::Eq(Term::Var(a), Term::Var(b)) => Formula::var_eq(&r(a, env), &r(b, env)),
            Formula::Eq(..) => f.clone(),
            Formula::E(x, y) => Formula::E(x.iter().map(|v| r(v, env)).collect(), y.iter().map(|v| r(v, env)).collect()),
            Formula::Not(a) => go(a, env, next).not(),
            Formula::And(a, b) => go(a, env, next).and(go(b, env, next)),
            Formula::Or(a, b) => go(a, env, next).or(go(b, env, next)),
            Formula::Implies(a, b) => go(a, env, next).implies(go(b, env, next)),
            Formula::Exists(v, s, a) | Formula::Forall(v, s, a) => {
                let name = format!("#{next}");
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
    go(f, &mut vec![], &mut 0)
}

/// Literal atoms: `Eq` with the names ordered, `E` with the tuples ordered.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Lit {
    Eq(String, String),
    E(Vec<String>, Vec<String>),
}

type Conj = BTreeSet<(Lit, bool)>;

fn has_repeat(t: &[String]) -> bool {
    t.iter().enumerate().any(|(i, x)| t[..i].contains(x))
}

/// An atom over pairwise distinct variables: a constant or an `E` literal
/// between repetition-free tuples, tuples ordered.
fn atom(f: &Formula) -> Formula {
    match f {
        Formula::Eq(Term::Var(a), Term::Var(b)) => bool_formula(a == b),
        Formula::E(x, y) => match (has_repeat(x), has_repeat(y)) {
            (true, true) => Formula::True,
            (false, false) if x == y => Formula::True,
            (false, false) if x < y => f.clone(),
            (false, false) => Formula::E(y.clone(), x.clone()),
            _ => Formula::False,
        },
        _ => unreachable!("checked LE"),
    }
}

fn bool_formula(b: bool) -> Formula {
    if b {
        Formula::True
    } else {
        Formula::False
    }
}

fn s_not(a: Formula) -> Formula {
    match a {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Not(b) => *b,
        a => a.not(),
    }
}

fn s_and(a: Formula, b: Formula) -> Formula {
    match (a, b) {
        (Formula::False, _) | (_, Formula::False) => Formula::False,
        (Formula::True, x) | (x, Formula::True) => x,
        (a, b) => a.and(b),
    }
}

fn s_or(a: Formula, b: Formula) -> Formula {
    match (a, b) {
        (Formula::True, _) | (_, Formula::True) => Formula::True,
        (Formula::False, x) | (x, Formula::False) => x,
        (a, b) => a.or(b),
    }
}

/// `f` with free `x` replaced by `y`. Bound names are unique, so nothing
/// is captured.
fn subst(f: &Formula, x: &str, y: &str) -> Formula {
    let r = |v: &String| if v == x { y.to_string() } else { v.clone() };
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Eq(Term::Var(a), Term::Var(b)) => Formula::var_eq(&r(a), &r(b)),
        Formula::Eq(..) => f.clone(),
        Formula::E(p, q) => Formula::E(p.iter().map(r).collect(), q.iter().map(r).collect()),
        Formula::Not(a) => subst(a, x, y).not(),
        Formula::And(a, b) => subst(a, x, y).and(subst(b, x, y)),
        Formula::Or(a, b) => subst(a, x, y).or(subst(b, x, y)),
        Formula::Implies(a, b) => subst(a, x, y).implies(subst(b, x, y)),
        Formula::Exists(v, s, a) if v != x => Formula::Exists(v.clone(), *s, Box::new(subst(a, x, y))),
        Formula::Forall(v, s, a) if v != x => Formula::Forall(v.clone(), *s, Box::new(subst(a, x, y))),
        Formula::Exists(..) | Formula::Forall(..) => f.clone(),
    }
}

/// Quantifier-free equivalent of `f` when the variables in `scope` name
/// pairwise distinct elements.
fn elim(f: &Formula, scope: &mut Vec<String>) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Eq(..) | Formula::E(..) => atom(f),
        Formula::Not(a) => s_not(elim(a, scope)),
        Formula::And(a, b) => s_and(elim(a, scope), elim(b, scope)),
        Formula::Or(a, b) => s_or(elim(a, scope), elim(b, scope)),
        Formula::Implies(a, b) => s_or(s_not(elim(a, scope)), elim(b, scope)),
        Formula::Exists(x, _, a) => exists(x, a, scope),
        Formula::Forall(x, _, a) => s_not(exists(x, &a.as_ref().clone().not(), scope)),
    }
}

fn exists(x: &str, body: &Formula, scope: &mut Vec<String>) -> Formula {
    let mut out = Formula::False;
    for y in scope.clone() {
        out = s_or(out, elim(&subst(body, x, &y), scope));
        if out == Formula::True {
            return out;
        }
    }
    scope.push(x.to_string());
    let inner = elim(body, scope);
    scope.pop();
    let fresh: Vec<Conj> = dnf(&inner).iter().filter_map(|d| forget(x, d)).collect();
    s_or(out, to_formula(&simplify(fresh)))
}

fn collect_lits(f: &Formula, out: &mut Vec<Lit>) {
    match f {
        Formula::E(x, y) => {
            let l = Lit::E(x.clone(), y.clone());
            if !out.contains(&l) {
                out.push(l);
            }
        }
        Formula::Not(a) => collect_lits(a, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            collect_lits(a, out);
            collect_lits(b, out);
        }
        _ => {}
    }
}

/// Value under a partial assignment of the `E` literals.
fn partial(f: &Formula, asg: &HashMap<Lit, bool>) -> Option<bool> {
    match f {
        Formula::True => Some(true),
        Formula::False => Some(false),
        Formula::E(x, y) => asg.get(&Lit::E(x.clone(), y.clone())).copied(),
        Formula::Not(a) => partial(a, asg).map(|b| !b),
        Formula::And(a, b) => match partial(a, asg) {
            Some(false) => Some(false),
            pa => match (pa, partial(b, asg)) {
                (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
        },
        Formula::Or(a, b) => match partial(a, asg) {
            Some(true) => Some(true),
            pa => match (pa, partial(b, asg)) {
                (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
        },
        Formula::Implies(a, b) => partial(&a.as_ref().clone().not().or(b.as_ref().clone()), asg),
        _ => unreachable!("reduced formula"),
    }
}

/// Merge requests through union-find, separations checked at the end.
#[derive(Default)]
struct Classes<'a> {
    id: HashMap<&'a [String], usize>,
    parent: Vec<usize>,
}

impl<'a> Classes<'a> {
    fn of(&mut self, t: &'a [String]) -> usize {
        let n = self.parent.len();
        let i = *self.id.entry(t).or_insert(n);
        if i == n {
            self.parent.push(n);
        }
        i
    }

    fn find(&self, mut i: usize) -> usize {
        while self.parent[i] != i {
            i = self.parent[i];
        }
        i
    }

    /// Builds the classes of `lits`; `None` when a separated pair is merged.
    fn build(lits: impl Iterator<Item = (&'a Lit, bool)>) -> Option<(Classes<'a>, Vec<(usize, usize)>)> {
        let mut c = Classes::default();
        let mut negative = vec![];
        for (l, s) in lits {
            let Lit::E(x, y) = l else { unreachable!("only E literals") };
            let (i, j) = (c.of(x), c.of(y));
            if s {
                let (ri, rj) = (c.find(i), c.find(j));
                c.parent[ri] = rj;
            } else {
                negative.push((i, j));
            }
        }
        if negative.iter().any(|&(i, j)| c.find(i) == c.find(j)) {
            return None;
        }
        Some((c, negative))
    }
}

fn split(f: &Formula, atoms: &[Lit], asg: &mut HashMap<Lit, bool>, out: &mut Vec<Conj>) {
    match partial(f, asg) {
        Some(true) => out.push(asg.iter().map(|(l, b)| (l.clone(), *b)).collect()),
        Some(false) => {}
        None => {
            let l = atoms.iter().find(|l| !asg.contains_key(*l)).expect("undetermined with every atom set").clone();
            for b in [true, false] {
                asg.insert(l.clone(), b);
                if Classes::build(asg.iter().map(|(l, b)| (l, *b))).is_some() {
                    split(f, atoms, asg, out);
                }
            }
            asg.remove(&l);
        }
    }
}

/// Consistent conjunctions of `E` literals whose disjunction is `f`.
fn dnf(f: &Formula) -> Vec<Conj> {
    let mut atoms = vec![];
    collect_lits(f, &mut atoms);
    let mut out = vec![];
    split(f, &atoms, &mut HashMap::new(), &mut out);
    out
}

/// `exists x. d` for a new `x`: the requests between tuples avoiding `x`.
fn forget(x: &str, d: &Conj) -> Option<Conj> {
    let (classes, negative) = Classes::build(d.iter().map(|(l, s)| (l, *s)))?;
    let mut visible: BTreeMap<usize, Vec<&[String]>> = BTreeMap::new();
    let mut tuples: Vec<(&&[String], &usize)> = classes.id.iter().collect();
    tuples.sort();
    for (t, &i) in tuples {
        if !t.iter().any(|v| v == x) {
            visible.entry(classes.find(i)).or_default().push(t);
        }
    }
    let e_lit = |a: &[String], b: &[String], s: bool| {
        if a <= b {
            (Lit::E(a.to_vec(), b.to_vec()), s)
        } else {
            (Lit::E(b.to_vec(), a.to_vec()), s)
        }
    };
    let mut c = Conj::new();
    for ts in visible.values() {
        for t in &ts[1..] {
            c.insert(e_lit(ts[0], t, true));
        }
    }
    for &(i, j) in &negative {
        if let (Some(a), Some(b)) = (visible.get(&classes.find(i)), visible.get(&classes.find(j))) {
            c.insert(e_lit(a[0], b[0], false));
        }
    }
    Some(c)
}

/// Each equality pattern of the free variables of `f` with `f` reduced
/// under it.
fn by_pattern(f: &Formula) -> Vec<(Conj, Formula)> {
    let vars: Vec<String> = f.free_vars().into_iter().collect();
    let mut out = vec![];
    for pattern in rgs(vars.len()) {
        let mut reps: Vec<String> = vec![];
        let mut lits = Conj::new();
        let mut g = f.clone();
        for (i, v) in vars.iter().enumerate() {
            let b = pattern[i] as usize;
            if b == reps.len() {
                reps.push(v.clone());
            } else {
                g = subst(&g, v, &reps[b]);
            }
            for j in 0..i {
                lits.insert((Lit::Eq(vars[j].clone(), v.clone()), pattern[j] == pattern[i]));
            }
        }
        out.push((lits, elim(&g, &mut reps)));
    }
    out
}

/// Merges conjunctions differing in one complementary literal, then drops
/// conjunctions that contain another.
fn simplify(mut dnf: Vec<Conj>) -> Vec<Conj> {
    loop {
        dnf.sort();
        dnf.dedup();
        let mut index: HashMap<(Conj, Lit), (usize, bool)> = HashMap::new();
        let mut used = vec![false; dnf.len()];
        let mut merged = vec![];
        for (ci, c) in dnf.iter().enumerate() {
            for (lit, sign) in c {
                if used[ci] {
                    break;
                }
                let mut rest = c.clone();
                rest.remove(&(lit.clone(), *sign));
                let key = (rest, lit.clone());
                match index.get(&key).copied() {
                    Some((cj, s)) if s != *sign && !used[cj] => {
                        used[cj] = true;
                        used[ci] = true;
                        merged.push(key.0);
                    }
                    _ => {
                        index.insert(key, (ci, *sign));
                    }
                }
            }
        }
        if merged.is_empty() {
            break;
        }
        dnf = dnf.into_iter().zip(used).filter(|(_, u)| !u).map(|(c, _)| c).chain(merged).collect();
    }
    dnf.sort_by_key(|c| c.len());
    let mut out: Vec<Conj> = vec![];
    for c in dnf {
        if !out.iter().any(|k| k.is_subset(&c)) {
            out.push(c);
        }
    }
    out.sort();
    out
}

fn lit_formula((l, sign): &(Lit, bool)) -> Formula {
    let atom = match l {
        Lit::Eq(a, b) => Formula::var_eq(a, b),
        Lit::E(x, y) => Formula::E(x.clone(), y.clone()),
    };
    if *sign {
        atom
    } else {
        atom.not()
    }
}

fn to_formula(dnf: &[Conj]) -> Formula {
    Formula::disj(dnf.iter().map(|c| Formula::conj(c.iter().map(lit_formula))))
}

fn check_le(f: &Formula, k: usize) -> Result<()> {
    if f.dialect() == Some(super::Dialect::LStar) {
        return Err(Error::Dialect("quantifier elimination works on LE formulas".into()));
    }
    if f.max_arity() > k {
        return Err(Error::Arity(format!("E{} with maxarity {k}", f.max_arity())));
    }
    Ok(())
}

/// An equivalent quantifier-free formula in disjunctive normal form: a
/// disjunction over equality patterns of the free variables of `f`.
pub fn eliminate_quantifiers(f: &Formula, k: usize) -> Result<Formula> {
    check_le(f, k)?;
    let parts = by_pattern(&rename_bound(f));
    if parts.iter().all(|(_, g)| *g == Formula::True) {
        return Ok(Formula::True);
    }
    let mut out = vec![];
    for (lits, g) in parts {
        for d in simplify(dnf(&g)) {
            out.push(d.union(&lits).cloned().collect());
        }
    }
    Ok(to_formula(&simplify(out)))
}

/// Truth of the universal closure of `f` in the theory of the generic
/// structure.
pub fn is_valid(f: &Formula, k: usize) -> Result<bool> {
    check_le(f, k)?;
    Ok(by_pattern(&rename_bound(f)).iter().all(|(_, g)| dnf(&s_not(g.clone())).is_empty()))
}

/// Truth of a sentence in the theory of the generic structure.
pub fn decide_sentence(f: &Formula, k: usize) -> Result<bool> {
    if let Some(v) = f.free_vars().into_iter().next() {
        return Err(Error::UnboundVariable(v));
    }
    match eliminate_quantifiers(f, k)? {
        Formula::True => Ok(true),
        Formula::False => Ok(false),
        other => Err(Error::InternalConsistency(format!("sentence reduced to `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{evaluate, parse_formula, Assignment, Dialect};
    use crate::te::{realize_diagram, Atom, Diagram, TEStructure};

    use crate::logic::oracle::agree;
    use proptest::prelude::*;
    use crate::structure::cartesian;

    fn le(s: &str) -> Formula {
        parse_formula(s, Dialect::Le).unwrap()
    }

    #[test]
    fn witness_with_one_free_variable() {
        assert_eq!(eliminate_quantifiers(&le("exists x. (!(x = y) & E1(x;y))"), 1).unwrap(), Formula::True);
    }

    #[test]
    fn contradiction() {
        assert_eq!(eliminate_quantifiers(&le("exists x. (E1(x;y) & !E1(x;y))"), 1).unwrap(), Formula::False);
    }

    #[test]
    fn binary_witness_depends_on_parameters() {
        let q = eliminate_quantifiers(&le("exists x. E2(x,y;u,v)"), 2).unwrap();
        assert!(q.is_quantifier_free());
        let fv: Vec<String> = q.free_vars().into_iter().collect();
        assert!(fv.iter().all(|v| ["u", "v", "y"].contains(&v.as_str())), "{q}");
        // u = v forces the repetition class, which (x,y) can reach only via x = y.
        let s = TEStructure::discrete(2, 2);
        let asg = |y, u, v| Assignment::from([("y".to_string(), y), ("u".to_string(), u), ("v".to_string(), v)]);
        assert!(evaluate(&s, &q, &asg(0, 1, 1)).unwrap());
        assert!(evaluate(&s, &q, &asg(0, 0, 1)).unwrap());
    }

    #[test]
    fn sentences() {
        assert!(decide_sentence(&le("forall x. E1(x;x)"), 2).unwrap());
        assert!(!decide_sentence(&le("exists x. !(x = x)"), 2).unwrap());
        assert!(decide_sentence(&le("exists x. exists y. (!(x = y) & E1(x;y))"), 2).unwrap());
        assert!(decide_sentence(&le("exists x. x = x"), 1).unwrap());
        assert!(!decide_sentence(&le("forall x. forall y. E2(x,y;y,x)"), 2).unwrap());
    }

    #[test]
    fn alternation_reduces_to_parameters() {
        let f = le("forall x. exists y. (!(x = y) & E2(x,y;u,v))");
        let q = eliminate_quantifiers(&f, 2).unwrap();
        assert!(agree(&q, &le("!(u = v)")), "{q}");
        assert!(agree(&f, &q));
    }

    #[test]
    fn arity_above_bound() {
        assert!(matches!(eliminate_quantifiers(&le("E2(x,y;y,x)"), 1), Err(Error::Arity(_))));
    }

    #[test]
    fn decided_values_do_not_depend_on_the_bound() {
        let s = le("forall x. exists y. (!(x = y) & !E1(x;y))");
        assert_eq!(decide_sentence(&s, 1).unwrap(), decide_sentence(&s, 3).unwrap());
    }

    /// Five classes of five: every one-point extension over four elements
    /// is realized at arity 1.
    fn rich_unary() -> TEStructure {
        TEStructure::from_fn(25, 1, |t| (t[0] / 5) as u64)
    }

    fn le_formula(vars: &'static [&'static str], depth: u32, binary: bool) -> impl Strategy<Value = Formula> {
        let v = move || prop::sample::select(vars.to_vec()).prop_map(String::from);
        let mut leaves: Vec<BoxedStrategy<Formula>> = vec![
            (v(), v()).prop_map(|(a, b)| Formula::var_eq(&a, &b)).boxed(),
            (v(), v()).prop_map(|(a, b)| Formula::E(vec![a], vec![b])).boxed(),
        ];
        if binary {
            leaves.push((v(), v(), v(), v()).prop_map(|(a, b, c, d)| Formula::E(vec![a, b], vec![c, d])).boxed());
        }
        let leaf = prop::strategy::Union::new(leaves);
        leaf.prop_recursive(depth, 24, 2, move |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.or(b)),
                (v(), inner.clone()).prop_map(|(x, a)| Formula::exists(&x, a)),
                (v(), inner).prop_map(|(x, a)| Formula::forall(&x, a)),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn unary_elimination_is_sound(f in le_formula(&["x", "y", "z"], 3, false)) {
            prop_assume!(f.quantifier_depth() <= 2);
            let m = rich_unary();
            let q = eliminate_quantifiers(&f, 1).unwrap();
            prop_assert!(q.is_quantifier_free());
            let fv: Vec<String> = f.free_vars().into_iter().collect();
            for vals in cartesian(&vec![vec![0usize, 1, 5, 6, 12]; fv.len()]) {
                let asg: Assignment<usize> = fv.iter().cloned().zip(vals).collect();
                prop_assert_eq!(evaluate(&m, &f, &asg).unwrap(), evaluate(&m, &q, &asg).unwrap(), "{} vs {}", f, q);
            }
        }

        #[test]
        fn binary_elimination_matches_configurations(f in le_formula(&["x", "y", "z"], 3, true)) {
            prop_assume!(f.quantifier_depth() <= 2);
            let q = eliminate_quantifiers(&f, 2).unwrap();
            prop_assert!(q.is_quantifier_free());
            prop_assert!(agree(&f, &q), "{} vs {}", f, q);
        }

        /// `exists x` of a conjunction of literals over a base: the
        /// eliminated form holds at the base tuple iff the diagram is
        /// realizable over the base.
        #[test]
        fn single_witness_matches_realize_diagram(
            seed in any::<u64>(),
            lits in prop::collection::vec((0usize..4, 0usize..4, 0usize..4, 0usize..4, 1usize..3, any::<bool>()), 1..4),
        ) {
            let base = crate::te::class::random_te(3, 2, &mut crate::rng(seed));
            let names = ["x", "a", "b", "c"];
            let term = |i: usize| if i == 0 { crate::te::Term::Var(0) } else { crate::te::Term::Base(i - 1) };
            let mut parts = vec![];
            let mut d = Diagram::new(1);
            for &(p, q, r, s, n, sign) in &lits {
                let (x, y) = if n == 1 { (vec![p], vec![q]) } else { (vec![p, q], vec![r, s]) };
                let atom = Formula::E(x.iter().map(|&i| names[i].to_string()).collect(), y.iter().map(|&i| names[i].to_string()).collect());
                parts.push(if sign { atom } else { atom.not() });
                d = d.with(Atom::E(x.into_iter().map(term).collect(), y.into_iter().map(term).collect(), sign));
            }
            let f = Formula::exists("x", Formula::conj(parts));
            let q = eliminate_quantifiers(&f, 2).unwrap();
            let asg: Assignment<usize> = [("a".to_string(), 0), ("b".to_string(), 1), ("c".to_string(), 2)].into();
            let expected = realize_diagram(&d, &base).unwrap().is_some();
            prop_assert_eq!(evaluate(&base, &q, &asg).unwrap(), expected, "{} gives {}", f, q);
        }
    }
}
