//! Many-sorted structures carried by the classes of a one-sorted base.
//!
//! Sort `i` lives on designated repetition-free `E_n`-classes, `n` being the
//! arity assigned to the sort. Relations are stored saturated: a lifted tuple
//! is a concatenation of blocks, one per argument, and every choice of block
//! within the same classes is present.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::structure::{cartesian, Embedding, Signature, Structure};
use crate::te::{has_repetition, with_capacity, CapacityPlan, TEStructure};

pub mod automorphism;
pub mod format;
pub mod induced;

pub use automorphism::{extend_class_automorphism, extend_class_isomorphism, Extension};
pub use format::{parse_te1s, print_te1s};
pub use induced::{induced_structure, pullback, sort_formula_pool, InducedBudget, InducedEntry, InducedReport, InducedStatus};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterpretedStructure {
    pub name: String,
    pub base: TEStructure,
    /// Relational signature of the carried structure.
    pub signature: Arc<Signature>,
    pub sort_arities: Vec<usize>,
    /// Per sort, one repetition-free representative of each designated class.
    pub carriers: Vec<Vec<Vec<usize>>>,
    /// Per relation, concatenated base tuples.
    pub lifted: Vec<BTreeSet<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodeOptions {
    /// Arity for each sort; sort `i` gets `i + 1` when absent.
    pub arities: Option<Vec<usize>>,
    /// Largest base universe tried.
    pub cap: usize,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions { arities: None, cap: 8 }
    }
}

impl InterpretedStructure {
    /// Tuples of the class of `rep`.
    fn members(&self, rep: &[usize]) -> Vec<Vec<usize>> {
        let l = self.base.class_of(rep);
        self.base.classes(rep.len()).swap_remove(l as usize)
    }

    fn blocks<'a>(&self, r: usize, t: &'a [usize]) -> Vec<(usize, &'a [usize])> {
        let mut out = vec![];
        let mut at = 0;
        for &s in &self.signature.relations()[r].args {
            let n = self.sort_arities[s];
            out.push((s, &t[at..at + n]));
            at += n;
        }
        out
    }

    fn block_width(&self, r: usize) -> usize {
        self.signature.relations()[r].args.iter().map(|&s| self.sort_arities[s]).sum()
    }

    /// Designated index of each (arity, class label), per sort.
    fn designation(&self) -> Vec<HashMap<u32, usize>> {
        self.carriers
            .iter()
            .map(|reps| reps.iter().enumerate().map(|(j, t)| (self.base.class_of(t), j)).collect())
            .collect()
    }

    /// All concatenated tuples whose blocks lie in the classes of `reps`.
    fn saturation(&self, reps: &[&[usize]]) -> Vec<Vec<usize>> {
        let pools: Vec<Vec<Vec<usize>>> = reps.iter().map(|r| self.members(r)).collect();
        cartesian(&pools).into_iter().map(|bs| bs.concat()).collect()
    }

    /// Shape checks and E-invariance of the lifted relations.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        let m = self.signature.sorts().len();
        if self.sort_arities.len() != m || self.carriers.len() != m || self.lifted.len() != self.signature.relations().len() {
            return bad("sort or relation count does not match the signature".into());
        }
        let k = self.base.maxarity();
        let mut used: HashMap<(usize, u32), usize> = HashMap::new();
        for (i, reps) in self.carriers.iter().enumerate() {
            let n = self.sort_arities[i];
            if n == 0 || n > k {
                return bad(format!("sort {} has arity {n} but the base has maxarity {k}", self.signature.sorts()[i]));
            }
            for t in reps {
                if t.len() != n || has_repetition(t) || t.iter().any(|&x| x >= self.base.size()) {
                    return bad(format!("{t:?} is not a repetition-free {n}-tuple of the base"));
                }
                if let Some(j) = used.insert((n, self.base.class_of(t)), i) {
                    return bad(format!("class of {t:?} is designated twice (sorts {j} and {i})"));
                }
            }
        }
        let desig = self.designation();
        for (r, set) in self.lifted.iter().enumerate() {
            let name = &self.signature.relations()[r].name;
            let width = self.block_width(r);
            let mut count: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
            for t in set {
                if t.len() != width {
                    return bad(format!("{name}: tuple {t:?} has length {} instead of {width}", t.len()));
                }
                let mut key = vec![];
                for (s, b) in self.blocks(r, t) {
                    if has_repetition(b) || b.iter().any(|&x| x >= self.base.size()) {
                        return bad(format!("{name}: block {b:?} of {t:?} is not repetition-free"));
                    }
                    match desig[s].get(&self.base.class_of(b)) {
                        Some(&j) => key.push(j),
                        None => return bad(format!("{name}: block {b:?} of {t:?} is not in a class of its sort")),
                    }
                }
                *count.entry(key).or_default() += 1;
            }
            for (key, c) in count {
                let reps: Vec<&[usize]> =
                    key.iter().zip(&self.signature.relations()[r].args).map(|(&j, &s)| self.carriers[s][j].as_slice()).collect();
                let full = self.saturation(&reps);
                if full.len() != c {
                    let have = full.iter().find(|t| set.contains(*t)).expect("counted");
                    let missing = full.iter().find(|t| !set.contains(*t)).expect("short");
                    return bad(format!("{name} is not E-invariant: {have:?} is lifted but its E-equivalent mate {missing:?} is not"));
                }
            }
        }
        Ok(())
    }

    /// Adds the saturation of a tuple of designated indices to relation `r`.
    pub fn lift(&mut self, r: usize, elems: &[usize]) {
        let reps: Vec<Vec<usize>> = elems
            .iter()
            .zip(&self.signature.relations()[r].args)
            .map(|(&j, &s)| self.carriers[s][j].clone())
            .collect();
        let refs: Vec<&[usize]> = reps.iter().map(Vec::as_slice).collect();
        let full = self.saturation(&refs);
        self.lifted[r].extend(full);
    }
}

/// Encodes a relational many-sorted structure. Each sort gets exactly as
/// many designated classes as it has elements.
pub fn encode(x: &Structure, seed: u64, opts: &EncodeOptions) -> Result<InterpretedStructure> {
    let sig = x.signature();
    if !sig.is_relational() {
        return Err(Error::InvalidInput("non-relational input: replace functions and constants by their graphs".into()));
    }
    let m = sig.sorts().len();
    let arities = match &opts.arities {
        Some(a) if a.len() != m => {
            return Err(Error::InvalidInput(format!("{} arities given for {m} sorts", a.len())));
        }
        Some(a) if a.contains(&0) => return Err(Error::InvalidInput("sort arity 0".into())),
        Some(a) => a.clone(),
        None => (1..=m).collect(),
    };
    let k = arities.iter().copied().max().unwrap_or(1);
    let mut counts = vec![None; k];
    for (i, &n) in arities.iter().enumerate() {
        let c = x.carrier_size(i);
        if c > 0 {
            counts[n - 1] = Some(counts[n - 1].unwrap_or(0) + c);
        }
    }
    let base = with_capacity(&CapacityPlan::new(counts).with_cap(opts.cap), seed)?.with_name(format!("{}_base", x.name()));
    let mut rng = crate::rng(seed.rotate_left(17) ^ 0x5eed);
    let mut pool: Vec<Vec<Vec<usize>>> = (1..=k)
        .map(|n| {
            let mut reps: Vec<Vec<usize>> = base.classes(n).into_iter().map(|c| c[0].clone()).collect();
            reps.shuffle(&mut rng);
            reps
        })
        .collect();
    let carriers: Vec<Vec<Vec<usize>>> = arities
        .iter()
        .enumerate()
        .map(|(i, &n)| pool[n - 1].drain(..x.carrier_size(i)).collect())
        .collect();
    let mut n = InterpretedStructure {
        name: x.name().to_string(),
        base,
        signature: sig.clone(),
        sort_arities: arities,
        carriers,
        lifted: vec![BTreeSet::new(); sig.relations().len()],
    };
    for r in 0..sig.relations().len() {
        for t in x.relation(r) {
            n.lift(r, t);
        }
    }
    Ok(n)
}

/// The carried structure: designated classes as elements.
pub fn decode(n: &InterpretedStructure) -> Result<Structure> {
    n.validate()?;
    let desig = n.designation();
    let mut relations = vec![BTreeSet::new(); n.lifted.len()];
    for (r, set) in n.lifted.iter().enumerate() {
        for t in set {
            let key: Vec<usize> = n.blocks(r, t).into_iter().map(|(s, b)| desig[s][&n.base.class_of(b)]).collect();
            relations[r].insert(key);
        }
    }
    let sizes = n.carriers.iter().map(Vec::len).collect();
    Structure::new(n.name.clone(), n.signature.clone(), sizes, relations, vec![], vec![])
}

/// Extends an encoding of `x` along an embedding `e: x -> y`. New elements
/// of `y` get fresh base points; the base of `n` embeds as an initial
/// segment.
pub fn encode_along(n: &InterpretedStructure, x: &Structure, y: &Structure, e: &Embedding) -> Result<InterpretedStructure> {
    if !e.is_embedding(x, y) {
        return Err(Error::Precondition("not an embedding of the source into the target".into()));
    }
    let old = n.base.size();
    let fresh: Vec<Vec<usize>> = (0..y.carriers().len())
        .map(|s| (0..y.carrier_size(s)).filter(|j| !e.map()[s].contains(j)).collect())
        .collect();
    let extra: usize = fresh.iter().enumerate().map(|(s, f)| f.len() * n.sort_arities[s]).sum();
    let base = n.base.extend_discrete(extra);
    let mut next = old;
    let mut carriers = vec![];
    for (s, f) in fresh.iter().enumerate() {
        let mut reps = vec![vec![]; y.carrier_size(s)];
        for (i, &j) in e.map()[s].iter().enumerate() {
            reps[j] = n.carriers[s][i].clone();
        }
        for &j in f {
            reps[j] = (next..next + n.sort_arities[s]).collect();
            next += n.sort_arities[s];
        }
        carriers.push(reps);
    }
    let mut out = InterpretedStructure {
        name: y.name().to_string(),
        base,
        signature: y.signature().clone(),
        sort_arities: n.sort_arities.clone(),
        carriers,
        lifted: vec![BTreeSet::new(); y.signature().relations().len()],
    };
    for r in 0..y.signature().relations().len() {
        for t in y.relation(r) {
            out.lift(r, t);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{is_isomorphic, parse_structure, RelationSymbol};
    use proptest::prelude::*;

    fn one_sort() -> Structure {
        parse_structure("structure X\nsort V 2\nrel R : V\nR V/0\nend\n").unwrap()
    }

    #[test]
    fn unary_relation_lifts_to_a_class() {
        let n = encode(&one_sort(), 0, &EncodeOptions::default()).unwrap();
        assert_eq!(n.base.class_count(1), 2);
        assert_eq!(n.lifted[0].len(), n.members(&n.carriers[0][0]).len());
        assert!(is_isomorphic(&decode(&n).unwrap(), &one_sort()).unwrap().is_some());
    }

    #[test]
    fn empty_sort_has_no_classes() {
        let x = parse_structure("structure X\nsort A 0\nsort B 2\nend\n").unwrap();
        let n = encode(&x, 3, &EncodeOptions::default()).unwrap();
        assert!(n.carriers[0].is_empty());
        assert_eq!(n.carriers[1].len(), 2);
        assert_eq!(decode(&n).unwrap().carriers(), &[0, 2]);
    }

    #[test]
    fn deterministic_per_seed() {
        let x = one_sort();
        let o = EncodeOptions::default();
        assert_eq!(encode(&x, 5, &o).unwrap(), encode(&x, 5, &o).unwrap());
        let a = decode(&encode(&x, 5, &o).unwrap()).unwrap();
        let b = decode(&encode(&x, 6, &o).unwrap()).unwrap();
        assert!(is_isomorphic(&a, &b).unwrap().is_some());
    }

    #[test]
    fn missing_mate_is_rejected() {
        let x = parse_structure("structure X\nsort V 1\nsort W 1\nrel R : V W\nR V/0 W/0\nend\n").unwrap();
        let mut n = encode(&x, 1, &EncodeOptions::default()).unwrap();
        let first = n.lifted[0].iter().next().unwrap().clone();
        assert!(n.lifted[0].len() > 1, "binary class has several tuples");
        n.lifted[0] = [first].into();
        assert!(matches!(decode(&n), Err(Error::InvalidInput(m)) if m.contains("mate")));
    }

    #[test]
    fn capacity_and_shape_errors() {
        let x = parse_structure("structure X\nsort V 9\nend\n").unwrap();
        assert!(matches!(encode(&x, 0, &EncodeOptions::default()), Err(Error::Capacity(_))));
        let f = parse_structure("structure F\nsort V 1\nfun g : V -> V\ng V/0 = V/0\nend\n").unwrap();
        assert!(matches!(encode(&f, 0, &EncodeOptions::default()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn embeddings_extend_encodings() {
        let x = one_sort();
        let y = parse_structure("structure Y\nsort V 3\nrel R : V\nR V/2\nR V/1\nend\n").unwrap();
        let e = Embedding::from_map(vec![vec![2, 0]]);
        let n = encode(&x, 0, &EncodeOptions::default()).unwrap();
        let m = encode_along(&n, &x, &y, &e).unwrap();
        m.validate().unwrap();
        assert!(n.base.is_embedding(&m.base, &(0..n.base.size()).collect::<Vec<_>>()));
        assert_eq!(decode(&m).unwrap().relation(0), y.relation(0));
    }

    fn random_structure() -> impl Strategy<Value = Structure> {
        (prop::collection::vec(0usize..=4, 1..=3), any::<u64>()).prop_map(|(sizes, seed)| {
            use rand::Rng;
            let mut rng = crate::rng(seed);
            let m = sizes.len();
            let nrel = rng.gen_range(0..=2);
            let rels: Vec<RelationSymbol> = (0..nrel)
                .map(|r| RelationSymbol {
                    name: format!("R{r}"),
                    args: (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(0..m)).collect(),
                })
                .collect();
            let sig = Signature::new((0..m).map(|i| format!("S{i}")).collect(), rels.clone(), vec![], vec![]).unwrap();
            let data = rels
                .iter()
                .map(|r| {
                    let pools: Vec<Vec<usize>> = r.args.iter().map(|&s| (0..sizes[s]).collect()).collect();
                    cartesian(&pools).into_iter().filter(|_| rng.gen_bool(0.4)).collect()
                })
                .collect();
            Structure::new("X", Arc::new(sig), sizes, data, vec![], vec![]).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn decode_inverts_encode(x in random_structure(), seed in any::<u64>()) {
            let n = encode(&x, seed, &EncodeOptions::default()).unwrap();
            n.validate().unwrap();
            prop_assert!(is_isomorphic(&decode(&n).unwrap(), &x).unwrap().is_some());
        }
    }
}
