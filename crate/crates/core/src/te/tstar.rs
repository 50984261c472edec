//! Translation between [`TEStructure`] and the many-sorted form with class
//! sorts `S1..Sk`, maps `f<n> : S^n -> S<n>` and constants `c<n>`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{decode, has_repetition, pow, TEStructure, UnionFind, REP};
use crate::error::{Error, Result};
use crate::structure::{ConstantSymbol, FunctionSymbol, Signature, Structure};

/// Sorts `S, S1..Sk`, functions `f1..fk`, constants `c1..ck`.
pub fn tstar_signature(maxarity: usize) -> Signature {
    let mut sorts = vec!["S".to_string()];
    sorts.extend((1..=maxarity).map(|n| format!("S{n}")));
    let funs = (1..=maxarity)
        .map(|n| FunctionSymbol {
            name: format!("f{n}"),
            args: vec![0; n],
            result: n,
        })
        .collect();
    let consts = (1..=maxarity)
        .map(|n| ConstantSymbol {
            name: format!("c{n}"),
            sort: n,
        })
        .collect();
    Signature::new(sorts, vec![], funs, consts).expect("well-formed signature")
}

/// Sort `S<n>` holds the classes of arity `n` followed by `c<n>`.
pub fn to_tstar(s: &TEStructure) -> Structure {
    let k = s.maxarity();
    let sig = Arc::new(tstar_signature(k));
    let mut carriers = vec![s.size()];
    let mut functions = vec![];
    let mut constants = vec![];
    for n in 1..=k {
        let c = s.class_count(n);
        carriers.push(c + 1);
        constants.push(c);
        let graph = s
            .labels(n)
            .iter()
            .enumerate()
            .map(|(idx, &l)| (decode(idx, s.size(), n), if l == REP { c } else { l as usize }))
            .collect::<BTreeMap<_, _>>();
        functions.push(graph);
    }
    Structure::new(s.name(), sig, carriers, vec![], functions, constants).expect("translation is total")
}

/// Reads `E_n(a; b)` as `f_n(a) = f_n(b)` after checking that exactly the
/// tuples with a repetition are sent to `c_n`.
pub fn from_tstar(m: &Structure) -> Result<TEStructure> {
    let sig = m.signature();
    let k = sig.functions().len();
    if **sig != tstar_signature(k) {
        return Err(Error::Signature("expected the S, S1..Sk, f1..fk, c1..ck signature".into()));
    }
    let size = m.carrier_size(0);
    let mut ufs = vec![];
    for n in 1..=k {
        let c = m.constant(n - 1);
        let mut uf = UnionFind::new(pow(size, n));
        let mut first: BTreeMap<usize, usize> = BTreeMap::new();
        for idx in 0..pow(size, n) {
            let t = decode(idx, size, n);
            let v = m.apply(n - 1, &t);
            if has_repetition(&t) != (v == c) {
                return Err(Error::Axiom(format!(
                    "f{n}{t:?} {} c{n} but the tuple {} a repetition",
                    if v == c { "=" } else { "!=" },
                    if has_repetition(&t) { "has" } else { "has no" }
                )));
            }
            match first.get(&v) {
                Some(&j) => {
                    uf.union(j, idx);
                }
                None => {
                    first.insert(v, idx);
                }
            }
        }
        ufs.push(uf);
    }
    Ok(TEStructure::from_union_find(size, k, &mut ufs).with_name(m.name()))
}

/// Class elements of `S<n>` with no preimage (these do not survive
/// [`from_tstar`]).
pub fn unused_class_elements(m: &Structure, n: usize) -> BTreeSet<usize> {
    let used: BTreeSet<usize> = m.function(n - 1).values().copied().collect();
    (0..m.carrier_size(n))
        .filter(|x| !used.contains(x) && *x != m.constant(n - 1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::parse_structure;
    use proptest::prelude::*;

    #[test]
    fn two_singletons_at_arity_one() {
        let s = TEStructure::discrete(2, 1);
        let m = to_tstar(&s);
        assert_eq!(m.carriers(), &[2, 3]);
        let img: BTreeSet<usize> = m.function(0).values().copied().collect();
        assert_eq!(img.len(), 2);
        assert!(!img.contains(&m.constant(0)));
    }

    #[test]
    fn empty_universe_has_only_constants() {
        let m = to_tstar(&TEStructure::discrete(0, 2));
        assert_eq!(m.carriers(), &[0, 1, 1]);
    }

    #[test]
    fn shared_image_gives_one_class() {
        let text = "structure M\nsort S 2\nsort S1 3\nsort S2 2\n\
                    fun f1 : S -> S1\nfun f2 : S S -> S2\nconst c1 : S1 = S1/2\nconst c2 : S2 = S2/1\n\
                    f1 S/0 = S1/0\nf1 S/1 = S1/1\n\
                    f2 S/0 S/0 = S2/1\nf2 S/1 S/1 = S2/1\nf2 S/0 S/1 = S2/0\nf2 S/1 S/0 = S2/0\nend\n";
        let s = from_tstar(&parse_structure(text).unwrap()).unwrap();
        assert!(s.related(&[0, 1], &[1, 0]));
        assert_eq!(s.class_count(2), 1);
    }

    #[test]
    fn repetition_off_constant_is_an_axiom_error() {
        let text = "structure M\nsort S 2\nsort S1 3\nsort S2 3\n\
                    fun f1 : S -> S1\nfun f2 : S S -> S2\nconst c1 : S1 = S1/2\nconst c2 : S2 = S2/2\n\
                    f1 S/0 = S1/0\nf1 S/1 = S1/1\n\
                    f2 S/0 S/0 = S2/1\nf2 S/1 S/1 = S2/2\nf2 S/0 S/1 = S2/0\nf2 S/1 S/0 = S2/0\nend\n";
        assert!(matches!(from_tstar(&parse_structure(text).unwrap()), Err(Error::Axiom(_))));
    }

    proptest! {
        #[test]
        fn round_trip(size in 0usize..5, k in 1usize..3, seed in any::<u64>()) {
            let s = crate::te::class::random_te(size, k, &mut crate::rng(seed));
            prop_assert_eq!(from_tstar(&to_tstar(&s)).unwrap(), s);
        }
    }
}
