use std::collections::HashMap;

use super::{decode, InterpretedStructure};
use crate::error::{Error, Result};
use crate::structure::{cartesian, Embedding};
use crate::te::{has_repetition, TEStructure};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Extension {
    /// A base map inducing the requested class map.
    Found(Vec<usize>),
    /// The deepest partial map the search reached. On a finite base this
    /// is a saturation artifact, not a refutation.
    Stuck { partial: Vec<Option<usize>>, reason: String },
}

/// Partial bijections between class labels, one per arity, with an undo log.
struct LabelMap {
    fwd: Vec<HashMap<u32, u32>>,
    inv: Vec<HashMap<u32, u32>>,
    log: Vec<(usize, u32, u32)>,
}

impl LabelMap {
    /// Records `a -> b` at arity `n`; false on a clash.
    fn bind(&mut self, n: usize, a: u32, b: u32) -> bool {
        match (self.fwd[n - 1].get(&a), self.inv[n - 1].get(&b)) {
            (Some(&x), _) => x == b,
            (None, Some(_)) => false,
            (None, None) => {
                self.fwd[n - 1].insert(a, b);
                self.inv[n - 1].insert(b, a);
                self.log.push((n, a, b));
                true
            }
        }
    }

    fn undo(&mut self, mark: usize) {
        while self.log.len() > mark {
            let (n, a, b) = self.log.pop().unwrap();
            self.fwd[n - 1].remove(&a);
            self.inv[n - 1].remove(&b);
        }
    }
}

struct Search<'a> {
    a: &'a TEStructure,
    b: &'a TEStructure,
    map: Vec<Option<usize>>,
    used: Vec<bool>,
    labels: LabelMap,
    best: Vec<Option<usize>>,
    depth: usize,
    nodes: u64,
    limit: u64,
}

impl Search<'_> {
    /// Binds the labels of every repetition-free tuple through `v` over
    /// `0..=v`.
    fn consistent(&mut self, v: usize) -> bool {
        let dom: Vec<usize> = (0..=v).collect();
        for n in 1..=self.a.maxarity().min(v + 1) {
            for t in cartesian(&vec![dom.clone(); n]) {
                if !t.contains(&v) || has_repetition(&t) {
                    continue;
                }
                let img: Vec<usize> = t.iter().map(|&x| self.map[x].unwrap()).collect();
                if !self.labels.bind(n, self.a.class_of(&t), self.b.class_of(&img)) {
                    return false;
                }
            }
        }
        true
    }

    fn run(&mut self, v: usize) -> Option<bool> {
        if v == self.a.size() {
            return Some(true);
        }
        if v > self.depth {
            self.depth = v;
            self.best = self.map.clone();
        }
        for w in 0..self.b.size() {
            if self.used[w] {
                continue;
            }
            self.nodes += 1;
            if self.nodes > self.limit {
                return None;
            }
            let mark = self.labels.log.len();
            self.map[v] = Some(w);
            self.used[w] = true;
            if self.consistent(v) {
                match self.run(v + 1) {
                    Some(false) => {}
                    other => return other,
                }
            }
            self.map[v] = None;
            self.used[w] = false;
            self.labels.undo(mark);
        }
        Some(false)
    }
}

/// Searches for an isomorphism of bases `a.base -> b.base` sending each
/// designated class of sort `i` number `j` to the class `g[i][j]` of `b`.
/// `g` must be an isomorphism of the decoded structures.
pub fn extend_class_isomorphism(
    a: &InterpretedStructure,
    b: &InterpretedStructure,
    g: &[Vec<usize>],
    node_limit: u64,
) -> Result<Extension> {
    let (da, db) = (decode(a)?, decode(b)?);
    if a.sort_arities != b.sort_arities {
        return Err(Error::Precondition("sort arities differ".into()));
    }
    let e = Embedding::from_map(g.to_vec());
    if g.len() != da.carriers().len() || !e.is_embedding(&da, &db) || !e.is_bijective(&db) {
        return Err(Error::Precondition("the class map does not preserve the lifted relations".into()));
    }
    let stuck = |reason: String| Extension::Stuck { partial: vec![None; a.base.size()], reason };
    if a.base.size() != b.base.size() || a.base.maxarity() != b.base.maxarity() {
        return Ok(stuck("bases differ in size or maxarity".into()));
    }
    let k = a.base.maxarity();
    let mut labels = LabelMap { fwd: vec![HashMap::new(); k], inv: vec![HashMap::new(); k], log: vec![] };
    for (s, m) in g.iter().enumerate() {
        let n = a.sort_arities[s];
        for (j, &t) in m.iter().enumerate() {
            let (ra, rb) = (&a.carriers[s][j], &b.carriers[s][t]);
            let (sa, sb) = (a.members(ra).len(), b.members(rb).len());
            if sa != sb {
                return Ok(stuck(format!("class of {ra:?} has {sa} tuples but its image class of {rb:?} has {sb}")));
            }
            labels.bind(n, a.base.class_of(ra), b.base.class_of(rb));
        }
    }
    labels.log.clear();
    let mut search = Search {
        a: &a.base,
        b: &b.base,
        map: vec![None; a.base.size()],
        used: vec![false; b.base.size()],
        labels,
        best: vec![None; a.base.size()],
        depth: 0,
        nodes: 0,
        limit: node_limit,
    };
    Ok(match search.run(0) {
        Some(true) => Extension::Found(search.map.iter().map(|x| x.unwrap()).collect()),
        Some(false) => Extension::Stuck { partial: search.best, reason: "no extension exists on this finite base".into() },
        None => Extension::Stuck { partial: search.best, reason: format!("node limit {node_limit} reached") },
    })
}

pub fn extend_class_automorphism(n: &InterpretedStructure, g: &[Vec<usize>], node_limit: u64) -> Result<Extension> {
    extend_class_isomorphism(n, n, g, node_limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpret::{encode, EncodeOptions};
    use crate::structure::parse_structure;
    use crate::te::generic_te;
    use std::sync::Arc;

    /// Exhaustive check over all permutations of the base.
    fn brute_force(n: &InterpretedStructure, g: &[Vec<usize>]) -> bool {
        let size = n.base.size();
        let k = n.base.maxarity();
        let mut perm: Vec<usize> = (0..size).collect();
        let tuples: Vec<Vec<Vec<usize>>> =
            (1..=k).map(|m| cartesian(&vec![(0..size).collect::<Vec<_>>(); m]).into_iter().filter(|t| !has_repetition(t)).collect()).collect();
        let ok = |p: &[usize]| {
            let img = |t: &[usize]| t.iter().map(|&x| p[x]).collect::<Vec<_>>();
            tuples.iter().all(|ts| ts.iter().all(|t| ts.iter().all(|u| n.base.related(t, u) == n.base.related(&img(t), &img(u)))))
                && g.iter().enumerate().all(|(s, m)| {
                    m.iter().enumerate().all(|(j, &t)| n.base.related(&img(&n.carriers[s][j]), &n.carriers[s][t]))
                })
        };
        fn heap(k: usize, p: &mut Vec<usize>, ok: &dyn Fn(&[usize]) -> bool) -> bool {
            if k <= 1 {
                return ok(p);
            }
            for i in 0..k {
                if heap(k - 1, p, ok) {
                    return true;
                }
                if i + 1 == k {
                    break;
                }
                if k % 2 == 0 {
                    p.swap(i, k - 1);
                } else {
                    p.swap(0, k - 1);
                }
            }
            false
        }
        heap(size, &mut perm, &ok)
    }

    fn pure(base: TEStructure, reps: Vec<Vec<usize>>) -> InterpretedStructure {
        use crate::structure::Signature;
        InterpretedStructure {
            name: "N".into(),
            base,
            signature: Arc::new(Signature::new(vec!["S1".into()], vec![], vec![], vec![]).unwrap()),
            sort_arities: vec![1],
            carriers: vec![reps],
            lifted: vec![],
        }
    }

    #[test]
    fn identity_extends_to_identity() {
        let x = parse_structure("structure X\nsort V 2\nrel R : V\nR V/0\nend\n").unwrap();
        let n = encode(&x, 4, &EncodeOptions::default()).unwrap();
        let found = extend_class_automorphism(&n, &[vec![0, 1]], 100_000).unwrap();
        let Extension::Found(h) = found else { panic!("{found:?}") };
        assert!(n.base.is_embedding(&n.base, &h));
    }

    #[test]
    fn swapping_equal_classes_in_a_generic_base() {
        let base = generic_te(5, 1, 11).unwrap().structure;
        let classes = base.classes(1);
        let (i, j) = (0..classes.len())
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .find(|&(i, j)| classes[i].len() == classes[j].len())
            .expect("two classes of one size");
        let n = pure(base.clone(), vec![classes[i][0].clone(), classes[j][0].clone()]);
        let g = vec![vec![1, 0]];
        let r = extend_class_automorphism(&n, &g, 1_000_000).unwrap();
        assert!(matches!(r, Extension::Found(_)), "{r:?}");
        assert!(brute_force(&n, &g));
    }

    #[test]
    fn unequal_sizes_are_stuck() {
        let base = TEStructure::from_fn(3, 1, |t| (t[0] == 0) as u64);
        let n = pure(base, vec![vec![0], vec![1]]);
        let g = vec![vec![1, 0]];
        let r = extend_class_automorphism(&n, &g, 1000).unwrap();
        assert!(matches!(r, Extension::Stuck { .. }));
        assert!(!brute_force(&n, &g));
    }

    #[test]
    fn relation_breaking_map_is_a_precondition_error() {
        let x = parse_structure("structure X\nsort V 2\nrel R : V\nR V/0\nend\n").unwrap();
        let n = encode(&x, 4, &EncodeOptions::default()).unwrap();
        assert!(matches!(extend_class_automorphism(&n, &[vec![1, 0]], 1000), Err(Error::Precondition(_))));
    }

    #[test]
    fn search_agrees_with_brute_force_on_small_bases() {
        for seed in 0..30 {
            let base = crate::te::class::random_te(5, 2, &mut crate::rng(seed));
            let classes = base.classes(1);
            if classes.len() < 2 {
                continue;
            }
            let n = pure(base, vec![classes[0][0].clone(), classes[1][0].clone()]);
            let g = vec![vec![1, 0]];
            let fast = matches!(extend_class_automorphism(&n, &g, u64::MAX).unwrap(), Extension::Found(_));
            assert_eq!(fast, brute_force(&n, &g), "seed {seed}");
        }
    }

    #[test]
    fn isomorphism_between_two_encodings() {
        use crate::structure::is_isomorphic;
        let x = parse_structure("structure X\nsort V 3\nrel R : V V\nR V/0 V/1\nR V/1 V/2\nend\n").unwrap();
        let opts = EncodeOptions { arities: Some(vec![1]), cap: 8 };
        for seed in 0..10 {
            let a = encode(&x, seed, &opts).unwrap();
            let b = encode(&x, seed + 100, &opts).unwrap();
            let g = is_isomorphic(&decode(&a).unwrap(), &decode(&b).unwrap()).unwrap().unwrap();
            let r = extend_class_isomorphism(&a, &b, g.map(), 1_000_000).unwrap();
            let Extension::Found(h) = r else { panic!("seed {seed}: {r:?}") };
            assert!(a.base.is_embedding(&b.base, &h));
            for t in &a.lifted[0] {
                assert!(b.lifted[0].contains(&t.iter().map(|&v| h[v]).collect::<Vec<_>>()));
            }
        }
    }
}
