//! Finite many-sorted first-order structures.
//!
//! Elements are `(sort, index)` pairs and every carrier is an initial segment
//! `0..size` of the naturals, so equality of elements is index equality.

mod embed;
pub(crate) mod fms;
mod qftype;

pub use embed::{find_embeddings, find_embeddings_extending, is_isomorphic, Embedding};
pub use fms::{parse_structure, print_structure};
pub use qftype::{qf_type, QfType};

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};

pub type SortId = usize;

/// Default cap on the number of elements a generated substructure may reach.
pub const DEFAULT_CLOSURE_BOUND: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Elem {
    pub sort: SortId,
    pub index: usize,
}

impl Elem {
    pub fn new(sort: SortId, index: usize) -> Self {
        Elem { sort, index }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RelationSymbol {
    pub name: String,
    pub args: Vec<SortId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunctionSymbol {
    pub name: String,
    pub args: Vec<SortId>,
    pub result: SortId,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConstantSymbol {
    pub name: String,
    pub sort: SortId,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Signature {
    sorts: Vec<String>,
    relations: Vec<RelationSymbol>,
    functions: Vec<FunctionSymbol>,
    constants: Vec<ConstantSymbol>,
}

impl Signature {
    pub fn new(
        sorts: Vec<String>,
        relations: Vec<RelationSymbol>,
        functions: Vec<FunctionSymbol>,
        constants: Vec<ConstantSymbol>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let names = sorts
            .iter()
            .chain(relations.iter().map(|r| &r.name))
            .chain(functions.iter().map(|f| &f.name))
            .chain(constants.iter().map(|c| &c.name));
        for name in names {
            if !seen.insert(name.clone()) {
                return Err(Error::Signature(format!("duplicate symbol `{name}`")));
            }
        }
        let n = sorts.len();
        let check = |s: SortId, what: &str| {
            if s < n {
                Ok(())
            } else {
                Err(Error::Signature(format!("{what} uses undeclared sort #{s}")))
            }
        };
        for r in &relations {
            for &s in &r.args {
                check(s, &r.name)?;
            }
        }
        for f in &functions {
            for &s in f.args.iter().chain(std::iter::once(&f.result)) {
                check(s, &f.name)?;
            }
        }
        for c in &constants {
            check(c.sort, &c.name)?;
        }
        Ok(Signature {
            sorts,
            relations,
            functions,
            constants,
        })
    }

    /// One sort, the given relations over it.
    pub fn one_sorted(sort: &str, relations: &[(&str, usize)]) -> Result<Self> {
        Self::new(
            vec![sort.to_string()],
            relations
                .iter()
                .map(|(name, arity)| RelationSymbol {
                    name: name.to_string(),
                    args: vec![0; *arity],
                })
                .collect(),
            vec![],
            vec![],
        )
    }

    pub fn sorts(&self) -> &[String] {
        &self.sorts
    }
    pub fn relations(&self) -> &[RelationSymbol] {
        &self.relations
    }
    pub fn functions(&self) -> &[FunctionSymbol] {
        &self.functions
    }
    pub fn constants(&self) -> &[ConstantSymbol] {
        &self.constants
    }
    pub fn sort_id(&self, name: &str) -> Option<SortId> {
        self.sorts.iter().position(|s| s == name)
    }
    pub fn relation_id(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }
    pub fn function_id(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }
    pub fn constant_id(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|c| c.name == name)
    }
    pub fn is_relational(&self) -> bool {
        self.functions.is_empty() && self.constants.is_empty()
    }
}

/// A finite structure. Immutable once built; all invariants are checked by
/// [`Structure::new`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    name: String,
    signature: Arc<Signature>,
    carriers: Vec<usize>,
    relations: Vec<BTreeSet<Vec<usize>>>,
    functions: Vec<BTreeMap<Vec<usize>, usize>>,
    constants: Vec<usize>,
}

impl Structure {
    pub fn new(
        name: impl Into<String>,
        signature: Arc<Signature>,
        carriers: Vec<usize>,
        relations: Vec<BTreeSet<Vec<usize>>>,
        functions: Vec<BTreeMap<Vec<usize>, usize>>,
        constants: Vec<usize>,
    ) -> Result<Self> {
        let sig = &*signature;
        if carriers.len() != sig.sorts.len()
            || relations.len() != sig.relations.len()
            || functions.len() != sig.functions.len()
            || constants.len() != sig.constants.len()
        {
            return Err(Error::SignatureMismatch);
        }
        let in_carrier = |sort: SortId, i: usize, what: &str| {
            if i < carriers[sort] {
                Ok(())
            } else {
                Err(Error::CarrierMembership(format!(
                    "{what}: {}/{i} but sort {} has size {}",
                    sig.sorts[sort], sig.sorts[sort], carriers[sort]
                )))
            }
        };
        for (sym, data) in sig.relations.iter().zip(&relations) {
            for t in data {
                if t.len() != sym.args.len() {
                    return Err(Error::Arity(format!("{} expects {}", sym.name, sym.args.len())));
                }
                for (&s, &i) in sym.args.iter().zip(t) {
                    in_carrier(s, i, &sym.name)?;
                }
            }
        }
        for (sym, data) in sig.functions.iter().zip(&functions) {
            for (args, &v) in data {
                if args.len() != sym.args.len() {
                    return Err(Error::Arity(format!("{} expects {}", sym.name, sym.args.len())));
                }
                for (&s, &i) in sym.args.iter().zip(args) {
                    in_carrier(s, i, &sym.name)?;
                }
                in_carrier(sym.result, v, &sym.name)?;
            }
            let domain: usize = sym.args.iter().map(|&s| carriers[s]).product();
            if data.len() != domain {
                return Err(Error::Totality(format!(
                    "{} defined on {} of {} argument tuples",
                    sym.name,
                    data.len(),
                    domain
                )));
            }
        }
        for (sym, &v) in sig.constants.iter().zip(&constants) {
            in_carrier(sym.sort, v, &sym.name)?;
        }
        Ok(Structure {
            name: name.into(),
            signature,
            carriers,
            relations,
            functions,
            constants,
        })
    }

    /// The structure with every carrier empty. Fails when constants exist.
    pub fn empty(signature: Arc<Signature>) -> Result<Self> {
        let n = signature.sorts.len();
        let r = signature.relations.len();
        let f = signature.functions.len();
        Self::new(
            "empty",
            signature,
            vec![0; n],
            vec![BTreeSet::new(); r],
            vec![BTreeMap::new(); f],
            vec![],
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }
    pub fn carrier_size(&self, sort: SortId) -> usize {
        self.carriers[sort]
    }
    pub fn carriers(&self) -> &[usize] {
        &self.carriers
    }
    pub fn total_size(&self) -> usize {
        self.carriers.iter().sum()
    }
    pub fn relation(&self, r: usize) -> &BTreeSet<Vec<usize>> {
        &self.relations[r]
    }
    pub fn function(&self, f: usize) -> &BTreeMap<Vec<usize>, usize> {
        &self.functions[f]
    }
    pub fn holds(&self, r: usize, tuple: &[usize]) -> bool {
        self.relations[r].contains(tuple)
    }
    pub fn apply(&self, f: usize, args: &[usize]) -> usize {
        self.functions[f][args]
    }
    pub fn constant(&self, c: usize) -> usize {
        self.constants[c]
    }
    pub fn constants(&self) -> &[usize] {
        &self.constants
    }

    /// All elements, sort-major, index order.
    pub fn elements(&self) -> impl Iterator<Item = Elem> + '_ {
        self.carriers
            .iter()
            .enumerate()
            .flat_map(|(s, &n)| (0..n).map(move |i| Elem::new(s, i)))
    }

    pub fn contains(&self, e: Elem) -> bool {
        e.sort < self.carriers.len() && e.index < self.carriers[e.sort]
    }

    /// Smallest substructure containing `seed` and the constants and closed
    /// under the functions, together with its inclusion map.
    pub fn generated_substructure(&self, seed: &[Elem]) -> Result<(Structure, Embedding)> {
        self.generated_substructure_bounded(seed, DEFAULT_CLOSURE_BOUND)
    }

    pub fn generated_substructure_bounded(
        &self,
        seed: &[Elem],
        bound: usize,
    ) -> Result<(Structure, Embedding)> {
        let sig = &*self.signature;
        let mut members: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.carriers.len()];
        for &e in seed {
            if !self.contains(e) {
                return Err(Error::CarrierMembership(format!("{}/{}", e.sort, e.index)));
            }
            members[e.sort].insert(e.index);
        }
        for (c, sym) in sig.constants.iter().enumerate() {
            members[sym.sort].insert(self.constants[c]);
        }
        loop {
            let mut added = false;
            for (f, sym) in sig.functions.iter().enumerate() {
                let pools: Vec<Vec<usize>> = sym
                    .args
                    .iter()
                    .map(|&s| members[s].iter().copied().collect())
                    .collect();
                for args in cartesian(&pools) {
                    let v = self.functions[f][&args];
                    if members[sym.result].insert(v) {
                        added = true;
                    }
                }
            }
            let total: usize = members.iter().map(|m| m.len()).sum();
            if total > bound {
                return Err(Error::ClosureBound(format!("closure exceeds {bound} elements")));
            }
            if !added {
                break;
            }
        }
        Ok(self.induced(&members))
    }

    /// Restriction to the given per-sort element sets, which must be closed
    /// under functions and contain all constants.
    fn induced(&self, members: &[BTreeSet<usize>]) -> (Structure, Embedding) {
        let map: Vec<Vec<usize>> = members.iter().map(|m| m.iter().copied().collect()).collect();
        let inverse: Vec<BTreeMap<usize, usize>> = map
            .iter()
            .map(|m| m.iter().enumerate().map(|(i, &v)| (v, i)).collect())
            .collect();
        let sig = &*self.signature;
        let relations = sig
            .relations
            .iter()
            .zip(&self.relations)
            .map(|(sym, data)| {
                data.iter()
                    .filter_map(|t| {
                        t.iter()
                            .zip(&sym.args)
                            .map(|(&i, &s)| inverse[s].get(&i).copied())
                            .collect::<Option<Vec<_>>>()
                    })
                    .collect()
            })
            .collect();
        let functions = sig
            .functions
            .iter()
            .zip(&self.functions)
            .map(|(sym, data)| {
                data.iter()
                    .filter_map(|(args, &v)| {
                        let a = args
                            .iter()
                            .zip(&sym.args)
                            .map(|(&i, &s)| inverse[s].get(&i).copied())
                            .collect::<Option<Vec<_>>>()?;
                        Some((a, inverse[sym.result][&v]))
                    })
                    .collect()
            })
            .collect();
        let constants = sig
            .constants
            .iter()
            .zip(&self.constants)
            .map(|(sym, &v)| inverse[sym.sort][&v])
            .collect();
        let sub = Structure {
            name: format!("{}-sub", self.name),
            signature: self.signature.clone(),
            carriers: map.iter().map(|m| m.len()).collect(),
            relations,
            functions,
            constants,
        };
        (sub, Embedding::from_map(map))
    }
}

/// Free-standing form of [`Structure::generated_substructure`].
pub fn generated_substructure(m: &Structure, seed: &[Elem]) -> Result<(Structure, Embedding)> {
    m.generated_substructure(seed)
}

/// Lexicographic cartesian product of index pools.
pub(crate) fn cartesian<T: Clone>(pools: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![Vec::with_capacity(pools.len())];
    for pool in pools {
        let mut next = Vec::with_capacity(out.len() * pool.len());
        for prefix in &out {
            for x in pool {
                let mut t = prefix.clone();
                t.push(x.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kstar_two() -> Structure {
        // S = {a, b}; S1 = {c1, f1(a), f1(b)}; S2 = {c2, f2(a,b), f2(b,a)}
        let sig = Arc::new(
            Signature::new(
                vec!["S".into(), "S1".into(), "S2".into()],
                vec![],
                vec![
                    FunctionSymbol { name: "f1".into(), args: vec![0], result: 1 },
                    FunctionSymbol { name: "f2".into(), args: vec![0, 0], result: 2 },
                ],
                vec![
                    ConstantSymbol { name: "c1".into(), sort: 1 },
                    ConstantSymbol { name: "c2".into(), sort: 2 },
                ],
            )
            .unwrap(),
        );
        let f1: BTreeMap<_, _> = [(vec![0], 1), (vec![1], 2), (vec![2], 3)].into_iter().collect();
        let mut f2 = BTreeMap::new();
        for a in 0..3 {
            for b in 0..3 {
                let v = if a == b { 0 } else { 1 + a * 3 + b };
                f2.insert(vec![a, b], v);
            }
        }
        Structure::new(
            "k",
            sig,
            vec![3, 4, 10],
            vec![],
            vec![f1, f2],
            vec![0, 0],
        )
        .unwrap()
    }

    #[test]
    fn duplicate_symbols_rejected() {
        let err = Signature::one_sorted("R", &[("R", 1)]).unwrap_err();
        assert!(matches!(err, Error::Signature(_)));
    }

    #[test]
    fn relational_seed_keeps_only_seed() {
        let sig = Arc::new(Signature::one_sorted("P", &[("R", 1)]).unwrap());
        let m = Structure::new(
            "m",
            sig,
            vec![3],
            vec![[vec![0], vec![2]].into_iter().collect()],
            vec![],
            vec![],
        )
        .unwrap();
        let (sub, inc) = m.generated_substructure(&[Elem::new(0, 2)]).unwrap();
        assert_eq!(sub.carriers(), &[1]);
        assert!(sub.holds(0, &[0]));
        assert_eq!(inc.apply(Elem::new(0, 0)), Elem::new(0, 2));
        let (all, _) = m.generated_substructure(&m.elements().collect::<Vec<_>>()).unwrap();
        assert_eq!(all.carriers(), m.carriers());
        assert_eq!(all.relation(0), m.relation(0));
    }

    #[test]
    fn kstar_closure_of_two_points() {
        let m = kstar_two();
        let (sub, _) = m
            .generated_substructure(&[Elem::new(0, 0), Elem::new(0, 1)])
            .unwrap();
        // S: a, b. S1: c1, f1(a), f1(b). S2: c2, f2(a,b), f2(b,a).
        assert_eq!(sub.carriers(), &[2, 3, 3]);
        let (consts, _) = m.generated_substructure(&[]).unwrap();
        assert_eq!(consts.carriers(), &[0, 1, 1]);
    }

    #[test]
    fn totality_enforced() {
        let sig = Arc::new(
            Signature::new(
                vec!["A".into()],
                vec![],
                vec![FunctionSymbol { name: "g".into(), args: vec![0], result: 0 }],
                vec![],
            )
            .unwrap(),
        );
        let err = Structure::new(
            "m",
            sig,
            vec![2],
            vec![],
            vec![[(vec![0], 1)].into_iter().collect()],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Totality(_)));
    }

    #[test]
    fn closure_bound_rejects_runaway() {
        let m = kstar_two();
        let err = m
            .generated_substructure_bounded(&[Elem::new(0, 0), Elem::new(0, 1)], 4)
            .unwrap_err();
        assert!(matches!(err, Error::ClosureBound(_)));
    }
}
