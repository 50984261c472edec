use super::{Elem, Structure};
use crate::error::{Error, Result};

/// A per-sort injective map between carriers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Embedding {
    map: Vec<Vec<usize>>,
}

impl Embedding {
    pub fn from_map(map: Vec<Vec<usize>>) -> Self {
        Embedding { map }
    }

    pub fn identity(s: &Structure) -> Self {
        Embedding {
            map: s.carriers().iter().map(|&n| (0..n).collect()).collect(),
        }
    }

    pub fn map(&self) -> &[Vec<usize>] {
        &self.map
    }

    pub fn apply(&self, e: Elem) -> Elem {
        Elem::new(e.sort, self.map[e.sort][e.index])
    }

    pub fn image(&self, sort: usize, i: usize) -> usize {
        self.map[sort][i]
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Embedding) -> Embedding {
        Embedding {
            map: self
                .map
                .iter()
                .enumerate()
                .map(|(s, m)| m.iter().map(|&i| other.map[s][i]).collect())
                .collect(),
        }
    }

    /// Checks injectivity, relation preservation and reflection, commuting with
    /// functions and constants.
    pub fn is_embedding(&self, source: &Structure, target: &Structure) -> bool {
        if source.signature() != target.signature() || self.map.len() != source.carriers().len() {
            return false;
        }
        for (s, m) in self.map.iter().enumerate() {
            if m.len() != source.carrier_size(s) || m.iter().any(|&i| i >= target.carrier_size(s)) {
                return false;
            }
            let mut seen = m.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != m.len() {
                return false;
            }
        }
        let sig = source.signature().clone();
        for (r, sym) in sig.relations().iter().enumerate() {
            let pools: Vec<Vec<usize>> =
                sym.args.iter().map(|&s| (0..source.carrier_size(s)).collect()).collect();
            for t in super::cartesian(&pools) {
                let img: Vec<usize> =
                    t.iter().zip(&sym.args).map(|(&i, &s)| self.map[s][i]).collect();
                if source.holds(r, &t) != target.holds(r, &img) {
                    return false;
                }
            }
        }
        for (f, sym) in sig.functions().iter().enumerate() {
            for (args, &v) in source.function(f) {
                let img: Vec<usize> =
                    args.iter().zip(&sym.args).map(|(&i, &s)| self.map[s][i]).collect();
                if target.apply(f, &img) != self.map[sym.result][v] {
                    return false;
                }
            }
        }
        for (c, sym) in sig.constants().iter().enumerate() {
            if self.map[sym.sort][source.constant(c)] != target.constant(c) {
                return false;
            }
        }
        true
    }

    pub fn is_bijective(&self, target: &Structure) -> bool {
        self.map
            .iter()
            .enumerate()
            .all(|(s, m)| m.len() == target.carrier_size(s))
    }
}

struct Search<'a> {
    source: &'a Structure,
    target: &'a Structure,
    order: Vec<Elem>,
    assignment: Vec<Vec<Option<usize>>>,
    used: Vec<Vec<bool>>,
    limit: usize,
    found: Vec<Embedding>,
}

impl<'a> Search<'a> {
    fn consistent(&self, e: Elem) -> bool {
        let src = self.source;
        let sig = src.signature().clone();
        let assigned = |x: Elem| self.assignment[x.sort][x.index];
        for (c, sym) in sig.constants().iter().enumerate() {
            if sym.sort == e.sort && src.constant(c) == e.index && assigned(e) != Some(self.target.constant(c)) {
                return false;
            }
        }
        for (r, sym) in sig.relations().iter().enumerate() {
            if !sym.args.contains(&e.sort) {
                continue;
            }
            // Tuples over assigned elements that mention e.
            let pools: Vec<Vec<usize>> = sym
                .args
                .iter()
                .map(|&s| {
                    (0..src.carrier_size(s))
                        .filter(|&i| self.assignment[s][i].is_some())
                        .collect()
                })
                .collect();
            for t in super::cartesian(&pools) {
                if !t.iter().zip(&sym.args).any(|(&i, &s)| s == e.sort && i == e.index) {
                    continue;
                }
                let img: Vec<usize> = t
                    .iter()
                    .zip(&sym.args)
                    .map(|(&i, &s)| self.assignment[s][i].unwrap())
                    .collect();
                if src.holds(r, &t) != self.target.holds(r, &img) {
                    return false;
                }
            }
        }
        for (f, sym) in sig.functions().iter().enumerate() {
            for (args, &v) in src.function(f) {
                let mentions = (sym.result == e.sort && v == e.index)
                    || args.iter().zip(&sym.args).any(|(&i, &s)| s == e.sort && i == e.index);
                if !mentions {
                    continue;
                }
                let img: Option<Vec<usize>> = args
                    .iter()
                    .zip(&sym.args)
                    .map(|(&i, &s)| self.assignment[s][i])
                    .collect();
                if let (Some(img), Some(w)) = (img, self.assignment[sym.result][v]) {
                    if self.target.apply(f, &img) != w {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn run(&mut self, depth: usize) {
        if self.found.len() >= self.limit {
            return;
        }
        if depth == self.order.len() {
            let map = self
                .assignment
                .iter()
                .map(|m| m.iter().map(|x| x.unwrap()).collect())
                .collect();
            self.found.push(Embedding { map });
            return;
        }
        let e = self.order[depth];
        if self.assignment[e.sort][e.index].is_some() {
            // Pre-assigned by the caller; only needs checking.
            if self.consistent(e) {
                self.run(depth + 1);
            }
            return;
        }
        for cand in 0..self.target.carrier_size(e.sort) {
            if self.used[e.sort][cand] {
                continue;
            }
            self.assignment[e.sort][e.index] = Some(cand);
            self.used[e.sort][cand] = true;
            if self.consistent(e) {
                self.run(depth + 1);
            }
            self.used[e.sort][cand] = false;
            self.assignment[e.sort][e.index] = None;
            if self.found.len() >= self.limit {
                return;
            }
        }
    }
}

/// All embeddings of `a` into `m`, lexicographic in the image sequence,
/// truncated at `limit`.
pub fn find_embeddings(a: &Structure, m: &Structure, limit: usize) -> Result<Vec<Embedding>> {
    let partial = a.carriers().iter().map(|&n| vec![None; n]).collect::<Vec<_>>();
    find_embeddings_extending(a, m, &partial, limit)
}

/// Embeddings of `a` into `m` agreeing with the given partial map.
pub fn find_embeddings_extending(
    a: &Structure,
    m: &Structure,
    partial: &[Vec<Option<usize>>],
    limit: usize,
) -> Result<Vec<Embedding>> {
    search(a, m, partial, limit)
}

fn search(
    a: &Structure,
    m: &Structure,
    partial: &[Vec<Option<usize>>],
    limit: usize,
) -> Result<Vec<Embedding>> {
    if a.signature() != m.signature() {
        return Err(Error::SignatureMismatch);
    }
    if a.carriers().iter().zip(m.carriers()).any(|(x, y)| x > y) {
        return Ok(vec![]);
    }
    let mut used: Vec<Vec<bool>> = m.carriers().iter().map(|&n| vec![false; n]).collect();
    for (s, row) in partial.iter().enumerate() {
        for &v in row.iter().flatten() {
            if v >= m.carrier_size(s) || used[s][v] {
                return Ok(vec![]);
            }
            used[s][v] = true;
        }
    }
    let mut search = Search {
        source: a,
        target: m,
        order: a.elements().collect(),
        assignment: partial.to_vec(),
        used,
        limit,
        found: vec![],
    };
    search.run(0);
    Ok(search.found)
}

/// Isomorphism test with a witness.
pub fn is_isomorphic(a: &Structure, b: &Structure) -> Result<Option<Embedding>> {
    if a.signature() != b.signature() {
        return Err(Error::SignatureMismatch);
    }
    if a.carriers() != b.carriers() {
        return Ok(None);
    }
    for r in 0..a.signature().relations().len() {
        if a.relation(r).len() != b.relation(r).len() {
            return Ok(None);
        }
    }
    let partial = a.carriers().iter().map(|&n| vec![None; n]).collect::<Vec<_>>();
    Ok(search(a, b, &partial, 1)?.into_iter().next())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::Signature;
    use std::collections::BTreeSet;
    use std::sync::Arc;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Structure {
        let sig = Arc::new(Signature::one_sorted("V", &[("R", 2)]).unwrap());
        let rel: BTreeSet<Vec<usize>> = edges.iter().map(|&(a, b)| vec![a, b]).collect();
        Structure::new("g", sig, vec![n], vec![rel], vec![], vec![]).unwrap()
    }

    #[test]
    fn counts_injections_without_relations() {
        let a = graph(1, &[]);
        let m = graph(3, &[]);
        assert_eq!(find_embeddings(&a, &m, 100).unwrap().len(), 3);
    }

    #[test]
    fn identity_is_found() {
        let m = graph(3, &[(0, 1), (1, 2)]);
        let all = find_embeddings(&m, &m, 100).unwrap();
        assert!(all.contains(&Embedding::identity(&m)));
    }

    #[test]
    fn relation_must_be_preserved() {
        let a = graph(2, &[(0, 1)]);
        let m = graph(4, &[]);
        assert!(find_embeddings(&a, &m, 100).unwrap().is_empty());
    }

    #[test]
    fn relation_must_be_reflected() {
        let a = graph(2, &[]);
        let m = graph(2, &[(0, 1), (1, 0)]);
        assert!(find_embeddings(&a, &m, 100).unwrap().is_empty());
    }

    #[test]
    fn isomorphism_with_witness() {
        let a = graph(3, &[(0, 1)]);
        let b = graph(3, &[(2, 0)]);
        let w = is_isomorphic(&a, &b).unwrap().unwrap();
        assert!(w.is_embedding(&a, &b) && w.is_bijective(&b));
        assert!(is_isomorphic(&a, &graph(4, &[(0, 1)])).unwrap().is_none());
    }

    #[test]
    fn composition_of_embeddings_embeds() {
        let a = graph(2, &[(0, 1)]);
        let b = graph(3, &[(0, 1), (1, 2)]);
        let c = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        for e1 in find_embeddings(&a, &b, 100).unwrap() {
            for e2 in find_embeddings(&b, &c, 100).unwrap() {
                assert!(e1.then(&e2).is_embedding(&a, &c));
            }
        }
    }

    #[test]
    fn signature_mismatch_is_an_error() {
        let sig = Arc::new(Signature::one_sorted("V", &[("Q", 1)]).unwrap());
        let other = Structure::new("x", sig, vec![1], vec![BTreeSet::new()], vec![], vec![]).unwrap();
        assert_eq!(find_embeddings(&other, &graph(1, &[]), 1), Err(Error::SignatureMismatch));
    }
}
