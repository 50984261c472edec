use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{decode, has_repetition, pow, TEStructure, UnionFind};
use crate::error::{Error, Result};

/// Amalgam of `B <-f- A -g-> C`.
///
/// The universe is `B` followed by the elements of `C` outside `g(A)`. Classes
/// of `B` and `C` are glued along the classes of `A` (the transitive closure
/// of both sides), and the result is rejected if that merges two classes of
/// either side. Tuples meeting both `B∖A` and `C∖A` are unconstrained: without
/// `rng` each gets its own class. With `rng` each joins an existing class at
/// random, and classes of `C` away from `A` may be identified with unused
/// classes of `B`.
pub fn free_amalgam(
    a: &TEStructure,
    b: &TEStructure,
    c: &TEStructure,
    f: &[usize],
    g: &[usize],
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<(TEStructure, Vec<usize>, Vec<usize>)> {
    let k = a.maxarity();
    if b.maxarity() != k || c.maxarity() != k {
        return Err(Error::Amalgamation("maxarity differs across the span".into()));
    }
    if !a.is_embedding(b, f) || !a.is_embedding(c, g) {
        return Err(Error::Amalgamation("span maps are not embeddings".into()));
    }
    let mut c_to_d = vec![usize::MAX; c.size()];
    for (i, &gi) in g.iter().enumerate() {
        c_to_d[gi] = f[i];
    }
    let mut next = b.size();
    for slot in c_to_d.iter_mut().filter(|s| **s == usize::MAX) {
        *slot = next;
        next += 1;
    }
    let size = next;
    let b_to_d: Vec<usize> = (0..b.size()).collect();
    // Inverse of c_to_d on D.
    let mut d_to_c = vec![usize::MAX; size];
    for (i, &d) in c_to_d.iter().enumerate() {
        d_to_c[d] = i;
    }

    let mut nodes: Vec<Vec<u64>> = Vec::with_capacity(k);
    for n in 1..=k {
        let nb = b.class_count(n);
        let nc = c.class_count(n);
        let mut uf = UnionFind::new(nb + nc);
        let mut ta = vec![0; n];
        let mut tb = vec![0; n];
        let mut tc = vec![0; n];
        for idx in 0..pow(a.size(), n) {
            ta.copy_from_slice(&decode(idx, a.size(), n));
            if has_repetition(&ta) {
                continue;
            }
            for i in 0..n {
                tb[i] = f[ta[i]];
                tc[i] = g[ta[i]];
            }
            uf.union(b.class_of(&tb) as usize, nb + c.class_of(&tc) as usize);
        }
        let mut roots_b: Vec<usize> = (0..nb).map(|x| uf.find(x)).collect();
        let mut roots_c: Vec<usize> = (nb..nb + nc).map(|x| uf.find(x)).collect();
        roots_b.sort_unstable();
        roots_b.dedup();
        roots_c.sort_unstable();
        roots_c.dedup();
        if roots_b.len() != nb || roots_c.len() != nc {
            return Err(Error::Amalgamation(format!("closure merges distinct E{n} classes")));
        }
        if let Some(r) = rng.as_deref_mut() {
            // A class of C missing A may be identified with one of B missing A;
            // each B class takes at most one, so neither side collapses.
            let mut free_b: Vec<usize> = roots_b.iter().copied().filter(|x| roots_c.binary_search(x).is_err()).collect();
            let only_c: Vec<usize> = roots_c.iter().copied().filter(|x| roots_b.binary_search(x).is_err()).collect();
            for x in only_c {
                if !free_b.is_empty() && r.gen_bool(0.5) {
                    let y = free_b.swap_remove(r.gen_range(0..free_b.len()));
                    uf.union(x, y);
                }
            }
        }
        // Node id per dense D-tuple (REP-free tuples only).
        let mut ids = vec![u64::MAX; pow(size, n)];
        let mut existing: Vec<u64> = {
            let mut r: Vec<usize> = (0..nb + nc).map(|x| uf.find(x)).collect();
            r.sort_unstable();
            r.dedup();
            r.into_iter().map(|x| x as u64).collect()
        };
        let mut fresh = (nb + nc) as u64;
        let mut t = vec![0; n];
        for (idx, slot) in ids.iter_mut().enumerate() {
            t.copy_from_slice(&decode(idx, size, n));
            if has_repetition(&t) {
                continue;
            }
            if t.iter().all(|&x| x < b.size()) {
                *slot = uf.find(b.class_of(&t) as usize) as u64;
            } else if t.iter().all(|&x| d_to_c[x] != usize::MAX) {
                let tc: Vec<usize> = t.iter().map(|&x| d_to_c[x]).collect();
                *slot = uf.find(nb + c.class_of(&tc) as usize) as u64;
            } else {
                let join = match rng.as_deref_mut() {
                    Some(r) if !existing.is_empty() => Some(existing[r.gen_range(0..existing.len())]),
                    _ => None,
                };
                *slot = join.unwrap_or_else(|| {
                    fresh += 1;
                    existing.push(fresh);
                    fresh
                });
            }
        }
        nodes.push(ids);
    }
    let d = TEStructure::from_fn(size, k, |t| nodes[t.len() - 1][super::encode(t, size)]);
    debug_assert!(b.is_embedding(&d, &b_to_d) && c.is_embedding(&d, &c_to_d));
    Ok((d, b_to_d, c_to_d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::te::class::random_te;
    use proptest::prelude::*;

    #[test]
    fn arity_one_span_from_the_checks() {
        // A = {x}; B adds y ~ x; C adds z !~ x.
        let a = TEStructure::discrete(1, 1);
        let b = TEStructure::from_classes(2, 1, &[(1, vec![vec![0], vec![1]])]).unwrap();
        let c = TEStructure::discrete(2, 1);
        let (d, fb, fc) = free_amalgam(&a, &b, &c, &[0], &[0], None).unwrap();
        assert_eq!(d.size(), 3);
        assert!(b.is_embedding(&d, &fb) && c.is_embedding(&d, &fc));
        assert!(!d.related(&[1], &[2]));
    }

    proptest! {
        #[test]
        fn amalgams_are_conservative(seed in any::<u64>(), k in 1usize..3, na in 0usize..3, nb in 0usize..3, nc in 0usize..3) {
            let mut r = crate::rng(seed);
            let whole = random_te(na + nb + nc, k, &mut r);
            let shared: Vec<usize> = (0..na).collect();
            let a = whole.restrict(&shared);
            let b = whole.restrict(&(0..na + nb).collect::<Vec<_>>());
            let c = whole.restrict(&shared.iter().copied().chain(na + nb..na + nb + nc).collect::<Vec<_>>());
            let (d, fb, fc) = free_amalgam(&a, &b, &c, &shared, &shared, Some(&mut r)).unwrap();
            prop_assert_eq!(d.size(), na + nb + nc);
            prop_assert!(b.is_embedding(&d, &fb));
            prop_assert!(c.is_embedding(&d, &fc));
        }
    }
}
