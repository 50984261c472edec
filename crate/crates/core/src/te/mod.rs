//! Structures with an equivalence relation on the n-tuples of each arity.
//!
//! A [`TEStructure`] on universe `0..size` stores, for every arity `n` up to
//! `maxarity`, a dense class label for each of the `size^n` tuples. Tuples with
//! a repeated entry all carry [`REP`]; the repetition-free tuples are
//! partitioned by the remaining labels, which are numbered by first occurrence
//! in lexicographic tuple order so that equal partitions have equal labels.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::structure::{Signature, Structure};

pub mod amalgam;
pub mod capacity;
pub mod class;
pub mod diagram;
pub mod format;
pub mod independence;
pub mod tstar;
pub mod uf;

pub use amalgam::free_amalgam;
pub use capacity::{with_capacity, CapacityPlan};
pub use class::{generic_te, KeClass};
pub use diagram::{realize_diagram, Atom, Diagram, Realization, Term};
pub use format::{parse_te, print_te, validate, TeListing};
pub use independence::{amalgamate_independence, IndependenceInput, IndependenceOutput};
pub use tstar::{from_tstar, tstar_signature, to_tstar};
pub use uf::UnionFind;

/// Label of tuples with a repeated entry.
pub const REP: u32 = u32::MAX;

pub fn has_repetition(t: &[usize]) -> bool {
    t.iter().enumerate().any(|(i, x)| t[..i].contains(x))
}

#[derive(Clone, Debug)]
pub struct TEStructure {
    name: String,
    size: usize,
    maxarity: usize,
    labels: Vec<Vec<u32>>,
    counts: Vec<usize>,
}

impl PartialEq for TEStructure {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size && self.maxarity == other.maxarity && self.labels == other.labels
    }
}

impl Eq for TEStructure {}

impl Hash for TEStructure {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.size.hash(state);
        self.maxarity.hash(state);
        self.labels.hash(state);
    }
}

pub(crate) fn pow(base: usize, exp: usize) -> usize {
    base.checked_pow(exp as u32).expect("tuple space overflow")
}

impl TEStructure {
    /// Builds a structure from an arbitrary labelling of the repetition-free
    /// tuples: two tuples are equivalent iff `f` gives them the same key.
    pub fn from_fn(size: usize, maxarity: usize, mut f: impl FnMut(&[usize]) -> u64) -> Self {
        let mut labels = Vec::with_capacity(maxarity);
        let mut counts = Vec::with_capacity(maxarity);
        for n in 1..=maxarity {
            let total = pow(size, n);
            let mut row = vec![REP; total];
            let mut ids: HashMap<u64, u32> = HashMap::new();
            let mut t = vec![0usize; n];
            for (idx, slot) in row.iter_mut().enumerate() {
                decode_into(idx, size, &mut t);
                if has_repetition(&t) {
                    continue;
                }
                let next = ids.len() as u32;
                *slot = *ids.entry(f(&t)).or_insert(next);
            }
            counts.push(ids.len());
            labels.push(row);
        }
        TEStructure {
            name: "te".into(),
            size,
            maxarity,
            labels,
            counts,
        }
    }

    /// Every repetition-free tuple in its own class.
    pub fn discrete(size: usize, maxarity: usize) -> Self {
        let mut i = 0u64;
        Self::from_fn(size, maxarity, |_| {
            i += 1;
            i
        })
    }

    /// From one union-find per arity over dense tuple indices.
    pub fn from_union_find(size: usize, maxarity: usize, ufs: &mut [UnionFind]) -> Self {
        Self::from_fn(size, maxarity, |t| {
            let n = t.len();
            ufs[n - 1].find(encode(t, size)) as u64
        })
    }

    /// From explicit classes; unlisted repetition-free tuples are singletons.
    pub fn from_classes(size: usize, maxarity: usize, classes: &[(usize, Vec<Vec<usize>>)]) -> Result<Self> {
        let mut ufs: Vec<UnionFind> = (1..=maxarity).map(|n| UnionFind::new(pow(size, n))).collect();
        let mut seen: Vec<Vec<bool>> = (1..=maxarity).map(|n| vec![false; pow(size, n)]).collect();
        for (n, class) in classes {
            let n = *n;
            if n == 0 || n > maxarity {
                return Err(Error::Arity(format!("E{n} with maxarity {maxarity}")));
            }
            for t in class {
                if t.len() != n {
                    return Err(Error::Arity(format!("tuple {t:?} in a class of E{n}")));
                }
                if let Some(x) = t.iter().find(|&&x| x >= size) {
                    return Err(Error::CarrierMembership(format!("element {x} with size {size}")));
                }
                if has_repetition(t) {
                    return Err(Error::InvalidInput(format!("tuple {t:?} has a repetition")));
                }
                let idx = encode(t, size);
                if std::mem::replace(&mut seen[n - 1][idx], true) {
                    return Err(Error::InvalidInput(format!("tuple {t:?} listed twice")));
                }
                let first = encode(&class[0], size);
                ufs[n - 1].union(first, idx);
            }
        }
        Ok(Self::from_union_find(size, maxarity, &mut ufs))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn maxarity(&self) -> usize {
        self.maxarity
    }

    /// Dense labels of arity `n`, indexed by [`encode`].
    pub fn labels(&self, n: usize) -> &[u32] {
        &self.labels[n - 1]
    }

    /// Number of repetition-free classes of arity `n`.
    pub fn class_count(&self, n: usize) -> usize {
        self.counts[n - 1]
    }

    pub fn class_of(&self, t: &[usize]) -> u32 {
        self.labels[t.len() - 1][encode(t, self.size)]
    }

    /// E_n(x; y), with all repetition tuples forming one class.
    pub fn related(&self, x: &[usize], y: &[usize]) -> bool {
        assert_eq!(x.len(), y.len());
        self.class_of(x) == self.class_of(y)
    }

    /// Classes of arity `n` as tuple lists, in label order.
    pub fn classes(&self, n: usize) -> Vec<Vec<Vec<usize>>> {
        let mut out = vec![vec![]; self.counts[n - 1]];
        for (idx, &l) in self.labels[n - 1].iter().enumerate() {
            if l != REP {
                out[l as usize].push(decode(idx, self.size, n));
            }
        }
        out
    }

    /// Substructure on `elems`, renumbered in the given order.
    pub fn restrict(&self, elems: &[usize]) -> TEStructure {
        let mut img = vec![];
        Self::from_fn(elems.len(), self.maxarity, |t| {
            img.clear();
            img.extend(t.iter().map(|&i| elems[i]));
            self.class_of(&img) as u64
        })
        .with_name(self.name.clone())
    }

    /// Adds `extra` elements; every new tuple gets its own class.
    pub fn extend_discrete(&self, extra: usize) -> TEStructure {
        let size = self.size + extra;
        Self::from_fn(size, self.maxarity, |t| {
            if t.iter().all(|&x| x < self.size) {
                self.class_of(t) as u64
            } else {
                (1u64 << 40) + encode(t, size) as u64
            }
        })
        .with_name(self.name.clone())
    }

    /// Canonical quantifier-free type key of a tuple.
    ///
    /// The key lists the equality pattern and, for each arity, the labels of
    /// all position tuples renumbered by first occurrence. Equal keys are
    /// exactly equal atomic diagrams over the tuple.
    pub fn qf_key(&self, tuple: &[usize]) -> Vec<u32> {
        let m = tuple.len();
        let mut key = Vec::with_capacity(m + 4);
        key.push(m as u32);
        for (i, x) in tuple.iter().enumerate() {
            key.push(tuple[..i].iter().position(|y| y == x).unwrap_or(i) as u32);
        }
        let mut p = vec![];
        let mut img = vec![];
        let mut seen: Vec<u32> = vec![];
        for n in 1..=self.maxarity {
            seen.clear();
            p.resize(n, 0);
            img.resize(n, 0);
            for idx in 0..pow(m, n) {
                decode_into(idx, m, &mut p);
                for (a, &b) in img.iter_mut().zip(&p) {
                    *a = tuple[b];
                }
                let l = self.class_of(&img);
                let v = if l == REP {
                    REP
                } else {
                    match seen.iter().position(|&s| s == l) {
                        Some(i) => i as u32,
                        None => {
                            seen.push(l);
                            (seen.len() - 1) as u32
                        }
                    }
                };
                key.push(v);
            }
        }
        key
    }

    /// Isomorphism-invariant form: least `qf_key` over all orderings.
    pub fn canonical_form(&self) -> Vec<u32> {
        let mut perm: Vec<usize> = (0..self.size).collect();
        let mut best = self.qf_key(&perm);
        while next_permutation(&mut perm) {
            let k = self.qf_key(&perm);
            if k < best {
                best = k;
            }
        }
        best
    }

    /// Embeddings into `target` (as element maps) agreeing with `partial`,
    /// lexicographic in the image sequence.
    pub fn embeddings_into(&self, target: &TEStructure, partial: &[Option<usize>], limit: usize) -> Vec<Vec<usize>> {
        let mut found = vec![];
        if self.maxarity != target.maxarity || self.size > target.size || limit == 0 {
            return found;
        }
        let mut used = vec![false; target.size];
        for &v in partial.iter().flatten() {
            if v >= target.size || std::mem::replace(&mut used[v], true) {
                return found;
            }
        }
        let prefix_keys: Vec<Vec<u32>> = (0..=self.size)
            .map(|d| self.qf_key(&(0..d).collect::<Vec<_>>()))
            .collect();
        let mut img = Vec::with_capacity(self.size);
        self.embed_rec(target, partial, &prefix_keys, &mut img, &mut used, limit, &mut found);
        found
    }

    #[allow(clippy::too_many_arguments)]
    fn embed_rec(
        &self,
        target: &TEStructure,
        partial: &[Option<usize>],
        keys: &[Vec<u32>],
        img: &mut Vec<usize>,
        used: &mut [bool],
        limit: usize,
        found: &mut Vec<Vec<usize>>,
    ) {
        let d = img.len();
        if d == self.size {
            found.push(img.clone());
            return;
        }
        let fixed = partial.get(d).copied().flatten();
        for c in 0..target.size {
            match fixed {
                Some(v) if v != c => continue,
                None if used[c] => continue,
                _ => {}
            }
            img.push(c);
            if target.qf_key(img) == keys[d + 1] {
                let was = used[c];
                used[c] = true;
                self.embed_rec(target, partial, keys, img, used, limit, found);
                used[c] = was;
            }
            img.pop();
            if found.len() >= limit {
                return;
            }
        }
    }

    pub fn is_embedding(&self, target: &TEStructure, map: &[usize]) -> bool {
        map.len() == self.size
            && !has_repetition(map)
            && map.iter().all(|&x| x < target.size)
            && self.maxarity == target.maxarity
            && self.qf_key(&(0..self.size).collect::<Vec<_>>()) == target.qf_key(map)
    }

    /// The relational rendering over sort `M` with `E<n>` of arity `2n`.
    pub fn to_relational(&self) -> Structure {
        let sig = Arc::new(ke_signature(self.maxarity));
        let relations = (1..=self.maxarity)
            .map(|n| {
                let total = pow(self.size, n);
                let mut rel = std::collections::BTreeSet::new();
                for i in 0..total {
                    for j in 0..total {
                        if self.labels[n - 1][i] == self.labels[n - 1][j] {
                            let mut t = decode(i, self.size, n);
                            t.extend(decode(j, self.size, n));
                            rel.insert(t);
                        }
                    }
                }
                rel
            })
            .collect();
        Structure::new(self.name.clone(), sig, vec![self.size], relations, vec![], vec![])
            .expect("relational rendering is well-formed")
    }

    /// Inverse of [`to_relational`](Self::to_relational); checks that each
    /// `E<n>` is an equivalence whose repetition tuples form one class.
    pub fn from_relational(s: &Structure) -> Result<TEStructure> {
        let sig = s.signature();
        if sig.sorts().len() != 1 || !sig.is_relational() || !sig.constants().is_empty() {
            return Err(Error::Signature("expected one sort and relations E1..Ek".into()));
        }
        let k = sig.relations().len();
        if **sig != ke_signature(k) {
            return Err(Error::Signature("expected relations E1..Ek of arity 2n".into()));
        }
        let size = s.carrier_size(0);
        let mut ufs: Vec<UnionFind> = (1..=k).map(|n| UnionFind::new(pow(size, n))).collect();
        for n in 1..=k {
            for t in s.relation(n - 1) {
                ufs[n - 1].union(encode(&t[..n], size), encode(&t[n..], size));
            }
        }
        let out = Self::from_union_find(size, k, &mut ufs).with_name(s.name());
        if out.to_relational() != *s {
            return Err(Error::Axiom(
                "relations are not equivalences with a single repetition class".into(),
            ));
        }
        Ok(out)
    }
}

pub fn ke_signature(maxarity: usize) -> Signature {
    let names: Vec<(String, usize)> = (1..=maxarity).map(|n| (format!("E{n}"), 2 * n)).collect();
    let refs: Vec<(&str, usize)> = names.iter().map(|(s, a)| (s.as_str(), *a)).collect();
    Signature::one_sorted("M", &refs).expect("distinct names")
}

/// Dense index of a tuple over `0..size` (lexicographic).
pub fn encode(t: &[usize], size: usize) -> usize {
    t.iter().fold(0, |acc, &x| acc * size + x)
}

pub fn decode(idx: usize, size: usize, n: usize) -> Vec<usize> {
    let mut t = vec![0; n];
    decode_into(idx, size, &mut t);
    t
}

fn decode_into(mut idx: usize, size: usize, t: &mut [usize]) {
    for slot in t.iter_mut().rev() {
        *slot = idx % size.max(1);
        idx /= size.max(1);
    }
}

pub(crate) fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{is_isomorphic, qf_type, Elem};

    #[test]
    fn labels_are_canonical() {
        let a = TEStructure::from_classes(3, 1, &[(1, vec![vec![0], vec![2]])]).unwrap();
        let b = TEStructure::from_classes(3, 1, &[(1, vec![vec![2], vec![0]])]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class_count(1), 2);
        assert!(a.related(&[0], &[2]) && !a.related(&[0], &[1]));
    }

    #[test]
    fn repetition_tuples_share_one_class() {
        let s = TEStructure::discrete(3, 2);
        assert!(s.related(&[0, 0], &[2, 2]));
        assert!(!s.related(&[0, 0], &[0, 1]));
        assert_eq!(s.class_count(2), 6);
    }

    #[test]
    fn relational_round_trip() {
        let s = TEStructure::from_classes(3, 2, &[(2, vec![vec![0, 1], vec![1, 2], vec![2, 0]])]).unwrap();
        assert_eq!(TEStructure::from_relational(&s.to_relational()).unwrap(), s);
    }

    #[test]
    fn renamed_copies_are_isomorphic_relationally() {
        let s = TEStructure::from_classes(3, 2, &[(2, vec![vec![0, 1], vec![1, 2]])]).unwrap();
        let r = s.restrict(&[2, 0, 1]);
        assert!(is_isomorphic(&s.to_relational(), &r.to_relational()).unwrap().is_some());
        assert_eq!(s.canonical_form(), r.canonical_form());
    }

    #[test]
    fn qf_key_agrees_with_relational_qf_type() {
        let s = TEStructure::from_classes(
            4,
            2,
            &[(1, vec![vec![0], vec![3]]), (2, vec![vec![0, 1], vec![2, 3], vec![3, 1]])],
        )
        .unwrap();
        let rel = s.to_relational();
        let el = |i| Elem::new(0, i);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let native = s.qf_key(&[a, b]) == s.qf_key(&[c, d]);
                        let generic = qf_type(&rel, &[el(a), el(b)]).unwrap() == qf_type(&rel, &[el(c), el(d)]).unwrap();
                        assert_eq!(native, generic, "{a}{b} vs {c}{d}");
                    }
                }
            }
        }
    }

    #[test]
    fn native_embeddings_match_relational_search() {
        let a = TEStructure::from_classes(2, 2, &[(2, vec![vec![0, 1], vec![1, 0]])]).unwrap();
        let m = TEStructure::from_classes(3, 2, &[(2, vec![vec![0, 1], vec![1, 0]]), (1, vec![vec![1], vec![2]])]).unwrap();
        let native = a.embeddings_into(&m, &[None, None], 100);
        let generic = crate::structure::find_embeddings(&a.to_relational(), &m.to_relational(), 100).unwrap();
        let generic: Vec<Vec<usize>> = generic.iter().map(|e| e.map()[0].clone()).collect();
        assert_eq!(native, generic);
    }
}
