use std::collections::HashMap;
use std::fmt;

use super::{encode, has_repetition, TEStructure, UnionFind};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(usize),
    /// An element of the base structure.
    Base(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    /// `s = t` when the flag is true, `s != t` otherwise.
    Eq(Term, Term, bool),
    /// `E_n(x; y)` or its negation.
    E(Vec<Term>, Vec<Term>, bool),
}

/// A finite set of signed atoms in variables `0..variables` over a base.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Diagram {
    pub variables: usize,
    pub atoms: Vec<Atom>,
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "x{v}"),
            Term::Base(m) => write!(f, "m{m}"),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |ts: &[Term]| ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",");
        match self {
            Atom::Eq(s, t, true) => write!(f, "{s} = {t}"),
            Atom::Eq(s, t, false) => write!(f, "{s} != {t}"),
            Atom::E(x, y, pos) => {
                write!(f, "{}E{}({}; {})", if *pos { "" } else { "!" }, x.len(), list(x), list(y))
            }
        }
    }
}

impl Diagram {
    pub fn new(variables: usize) -> Self {
        Diagram {
            variables,
            atoms: vec![],
        }
    }

    pub fn with(mut self, atom: Atom) -> Self {
        self.atoms.push(atom);
        self
    }

    /// Atoms pinning the quantifier-free type of `tuple` in `s` onto `terms`:
    /// all (in)equalities between positions and every E-literal between
    /// repetition-free position tuples.
    pub fn type_atoms(s: &TEStructure, tuple: &[usize], terms: &[Term]) -> Vec<Atom> {
        assert_eq!(tuple.len(), terms.len());
        let m = tuple.len();
        let mut out = vec![];
        for i in 0..m {
            for j in i + 1..m {
                out.push(Atom::Eq(terms[i], terms[j], tuple[i] == tuple[j]));
            }
        }
        for n in 1..=s.maxarity() {
            let ps: Vec<Vec<usize>> = (0..super::pow(m, n))
                .map(|i| super::decode(i, m, n))
                .filter(|p| !has_repetition(&p.iter().map(|&i| tuple[i]).collect::<Vec<_>>()))
                .collect();
            for (i, p) in ps.iter().enumerate() {
                for q in &ps[i + 1..] {
                    let x: Vec<usize> = p.iter().map(|&i| tuple[i]).collect();
                    let y: Vec<usize> = q.iter().map(|&i| tuple[i]).collect();
                    out.push(Atom::E(
                        p.iter().map(|&i| terms[i]).collect(),
                        q.iter().map(|&i| terms[i]).collect(),
                        s.related(&x, &y),
                    ));
                }
            }
        }
        out
    }

    /// Whether the atoms hold in `s` under `assignment` (base elements are
    /// read as themselves).
    pub fn holds_in(&self, s: &TEStructure, assignment: &[usize]) -> bool {
        let val = |t: &Term| match *t {
            Term::Var(v) => assignment[v],
            Term::Base(m) => m,
        };
        self.atoms.iter().all(|a| match a {
            Atom::Eq(x, y, pos) => (val(x) == val(y)) == *pos,
            Atom::E(x, y, pos) => {
                let xs: Vec<usize> = x.iter().map(val).collect();
                let ys: Vec<usize> = y.iter().map(val).collect();
                s.related(&xs, &ys) == *pos
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Realization {
    /// An extension of the base (base elements keep their indices).
    pub structure: TEStructure,
    pub assignment: Vec<usize>,
}

/// Finds an extension of `base` with elements satisfying `d`.
///
/// Variables are identified with each other or with base elements in every
/// possible way, preferring fresh distinct elements. For each identification,
/// positive atoms are closed transitively over the tuple classes; the choice
/// is rejected if that merges two base classes, links a repetition tuple to a
/// repetition-free one, or forces a negative atom.
pub fn realize_diagram(d: &Diagram, base: &TEStructure) -> Result<Option<Realization>> {
    for a in &d.atoms {
        let terms: Vec<&Term> = match a {
            Atom::Eq(x, y, _) => vec![x, y],
            Atom::E(x, y, _) => {
                if x.len() != y.len() || x.is_empty() || x.len() > base.maxarity() {
                    return Err(Error::Arity(format!("atom {a} with maxarity {}", base.maxarity())));
                }
                x.iter().chain(y).collect()
            }
        };
        for t in terms {
            match *t {
                Term::Var(v) if v >= d.variables => return Err(Error::UnboundVariable(format!("x{v}"))),
                Term::Base(m) if m >= base.size() => {
                    return Err(Error::CarrierMembership(format!("m{m} with base size {}", base.size())))
                }
                _ => {}
            }
        }
    }
    let mut choice = vec![0usize; d.variables];
    Ok(search(d, base, &mut choice, 0, 0))
}

/// `choice[v]` is a base element, or `base.size() + j` for fresh block `j`.
fn search(d: &Diagram, base: &TEStructure, choice: &mut [usize], v: usize, blocks: usize) -> Option<Realization> {
    if v == choice.len() {
        return try_assignment(d, base, choice, blocks);
    }
    let n = base.size();
    // New fresh block, existing fresh blocks, then base elements.
    let options = std::iter::once(n + blocks)
        .chain((0..blocks).map(|j| n + j))
        .chain(0..n);
    for o in options {
        choice[v] = o;
        let nb = if o == n + blocks { blocks + 1 } else { blocks };
        if let Some(r) = search(d, base, choice, v + 1, nb) {
            return Some(r);
        }
    }
    None
}

fn try_assignment(d: &Diagram, base: &TEStructure, assignment: &[usize], blocks: usize) -> Option<Realization> {
    let size = base.size() + blocks;
    let val = |t: &Term| match *t {
        Term::Var(v) => assignment[v],
        Term::Base(m) => m,
    };
    // Node key of a repetition-free tuple: its base class, or its own slot.
    let key = |t: &[usize]| -> u64 {
        if t.iter().all(|&x| x < base.size()) {
            base.class_of(t) as u64
        } else {
            (1u64 << 40) + encode(t, size) as u64
        }
    };
    let mut index: Vec<HashMap<u64, usize>> = vec![HashMap::new(); base.maxarity()];
    let mut pairs: Vec<(usize, usize, usize, bool)> = vec![];
    for a in &d.atoms {
        match a {
            Atom::Eq(x, y, pos) => {
                if (val(x) == val(y)) != *pos {
                    return None;
                }
            }
            Atom::E(x, y, pos) => {
                let xs: Vec<usize> = x.iter().map(val).collect();
                let ys: Vec<usize> = y.iter().map(val).collect();
                match (has_repetition(&xs), has_repetition(&ys)) {
                    (true, true) if !*pos => return None,
                    (true, true) => {}
                    (true, false) | (false, true) if *pos => return None,
                    (true, false) | (false, true) => {}
                    (false, false) => {
                        let n = xs.len();
                        let mut id = |t: &[usize]| {
                            let k = key(t);
                            let next = index[n - 1].len();
                            *index[n - 1].entry(k).or_insert(next)
                        };
                        let (i, j) = (id(&xs), id(&ys));
                        pairs.push((n, i, j, *pos));
                    }
                }
            }
        }
    }
    let mut ufs: Vec<UnionFind> = index.iter().map(|m| UnionFind::new(m.len())).collect();
    for &(n, i, j, pos) in &pairs {
        if pos {
            ufs[n - 1].union(i, j);
        }
    }
    for &(n, i, j, pos) in &pairs {
        if !pos && ufs[n - 1].same(i, j) {
            return None;
        }
    }
    // Representative key per root; two base classes in one root is a merge.
    let mut rep: Vec<HashMap<usize, u64>> = vec![HashMap::new(); base.maxarity()];
    for (n, m) in index.iter().enumerate() {
        let mut keys: Vec<(&u64, &usize)> = m.iter().collect();
        keys.sort();
        for (&k, &i) in keys {
            let root = ufs[n].find(i);
            match rep[n].get(&root) {
                Some(&prev) if prev < (1u64 << 40) && k < (1u64 << 40) => return None,
                Some(_) => {}
                None => {
                    rep[n].insert(root, k);
                }
            }
        }
    }
    let structure = TEStructure::from_fn(size, base.maxarity(), |t| {
        let n = t.len();
        let k = key(t);
        match index[n - 1].get(&k) {
            Some(&i) => {
                let root = ufs[n - 1].find(i);
                rep[n - 1][&root]
            }
            None => k,
        }
    })
    .with_name(base.name());
    debug_assert!(d.holds_in(&structure, assignment));
    Some(Realization {
        structure,
        assignment: assignment.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::te::class::all_te;
    use proptest::prelude::*;
    use Term::{Base, Var};

    fn e(x: &[Term], y: &[Term], pos: bool) -> Atom {
        Atom::E(x.to_vec(), y.to_vec(), pos)
    }

    #[test]
    fn fresh_element_joins_a_base_class() {
        let base = TEStructure::discrete(1, 1);
        let d = Diagram::new(1)
            .with(e(&[Var(0)], &[Base(0)], true))
            .with(Atom::Eq(Var(0), Base(0), false));
        let r = realize_diagram(&d, &base).unwrap().unwrap();
        assert_eq!(r.structure.size(), 2);
        assert_eq!(r.assignment, vec![1]);
        assert!(r.structure.related(&[0], &[1]));
    }

    #[test]
    fn transitivity_is_enforced() {
        let base = TEStructure::discrete(0, 1);
        let d = Diagram::new(3)
            .with(e(&[Var(0)], &[Var(1)], true))
            .with(e(&[Var(1)], &[Var(2)], true))
            .with(e(&[Var(0)], &[Var(2)], false));
        assert!(realize_diagram(&d, &base).unwrap().is_none());
    }

    #[test]
    fn base_classes_cannot_merge() {
        let base = TEStructure::discrete(2, 1);
        let d = Diagram::new(1)
            .with(e(&[Var(0)], &[Base(0)], true))
            .with(e(&[Var(0)], &[Base(1)], true));
        assert!(realize_diagram(&d, &base).unwrap().is_none());
    }

    #[test]
    fn repetition_never_links_to_repetition_free() {
        let base = TEStructure::discrete(2, 2);
        let d = Diagram::new(1).with(e(&[Var(0), Var(0)], &[Base(0), Base(1)], true));
        assert!(realize_diagram(&d, &base).unwrap().is_none());
    }

    fn term(base: usize, vars: usize) -> impl Strategy<Value = Term> {
        prop_oneof![
            (0..vars).prop_map(Var),
            (0..base.max(1)).prop_map(move |m| if base == 0 { Var(0) } else { Base(m) }),
        ]
    }

    fn atom(base: usize, vars: usize) -> impl Strategy<Value = Atom> {
        prop_oneof![
            (term(base, vars), term(base, vars), any::<bool>()).prop_map(|(a, b, p)| Atom::Eq(a, b, p)),
            (proptest::collection::vec(term(base, vars), 1..=2), any::<bool>(), any::<u64>()).prop_map(
                move |(x, p, s)| {
                    // Second tuple of the same length, drawn from the seed.
                    let pool: Vec<Term> = (0..vars).map(Var).chain((0..base).map(Base)).collect();
                    let y = (0..x.len()).map(|i| pool[((s >> (8 * i)) as usize) % pool.len()]).collect();
                    Atom::E(x, y, p)
                }
            ),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]
        #[test]
        fn agrees_with_exhaustive_extensions(
            bseed in 0usize..1000,
            bsize in 0usize..2,
            vars in 1usize..3,
            atoms in proptest::collection::vec(atom(1, 2), 1..4),
        ) {
            let atoms: Vec<Atom> = atoms
                .into_iter()
                .map(|a| clamp(a, bsize, vars))
                .collect();
            let all_base = all_te(bsize, 2);
            let base = all_base[bseed % all_base.len()].clone();
            let d = Diagram { variables: vars, atoms };
            let fast = realize_diagram(&d, &base).unwrap();
            if let Some(r) = &fast {
                prop_assert!(d.holds_in(&r.structure, &r.assignment));
                prop_assert_eq!(r.structure.restrict(&(0..bsize).collect::<Vec<_>>()), base.clone());
            }
            // Oracle: every structure on base + up to `vars` new elements
            // that restricts to the base, with every assignment.
            let mut oracle = false;
            'outer: for extra in 0..=vars {
                for s in all_te(bsize + extra, 2) {
                    if s.restrict(&(0..bsize).collect::<Vec<_>>()) != base {
                        continue;
                    }
                    let total = (bsize + extra).pow(vars as u32);
                    for code in 0..total {
                        let asg = crate::te::decode(code, bsize + extra, vars);
                        if d.holds_in(&s, &asg) {
                            oracle = true;
                            break 'outer;
                        }
                    }
                }
            }
            prop_assert_eq!(fast.is_some(), oracle);
        }
    }

    fn clamp(a: Atom, bsize: usize, vars: usize) -> Atom {
        let fix = |t: Term| match t {
            Var(v) => Var(v % vars),
            Base(m) if bsize > 0 => Base(m % bsize),
            Base(_) => Var(0),
        };
        match a {
            Atom::Eq(x, y, p) => Atom::Eq(fix(x), fix(y), p),
            Atom::E(x, y, p) => Atom::E(x.into_iter().map(fix).collect(), y.into_iter().map(fix).collect(), p),
        }
    }
}
