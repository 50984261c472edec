//! Amalgamation of two copies of a tuple over independent parameters.
//!
//! Given `d'a ≡_F d'b ≡_F d''b ≡_F d''c` with `a ∩ c ⊆ F`, a new tuple `d` is
//! built over `a c` with `d a ≡_F d' a` and `d c ≡_F d'' c`, by closing the
//! structure on `AC` together with the copies of `AD'` and `CD''` transitively.

use std::collections::BTreeSet;

use super::diagram::{realize_diagram, Diagram, Term};
use super::{decode, has_repetition, pow, TEStructure, UnionFind};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependenceInput {
    /// Structure containing all tuples.
    pub host: TEStructure,
    pub f: Vec<usize>,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
    pub d1: Vec<usize>,
    pub d2: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependenceOutput {
    /// Structure on `A ∪ C ∪ D`.
    pub structure: TEStructure,
    /// Host element behind each element of `A ∪ C` (a prefix of the universe).
    pub from_host: Vec<usize>,
    pub a: Vec<usize>,
    pub c: Vec<usize>,
    pub f: Vec<usize>,
    pub d: Vec<usize>,
}

fn cat(parts: &[&[usize]]) -> Vec<usize> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

/// `x ≡_F y` in `s`: same quantifier-free type with `F` as parameters.
pub fn same_type_over(s: &TEStructure, x: &[usize], y: &[usize], f: &[usize]) -> bool {
    x.len() == y.len() && s.qf_key(&cat(&[x, f])) == s.qf_key(&cat(&[y, f]))
}

fn distinct(xs: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    xs.into_iter().filter(|x| seen.insert(*x)).collect()
}

pub fn check_hypotheses(inp: &IndependenceInput) -> Result<()> {
    let s = &inp.host;
    let all = cat(&[&inp.f, &inp.a, &inp.b, &inp.c, &inp.d1, &inp.d2]);
    if let Some(x) = all.iter().find(|&&x| x >= s.size()) {
        return Err(Error::CarrierMembership(format!("element {x} with host size {}", s.size())));
    }
    if inp.a.len() != inp.b.len() || inp.b.len() != inp.c.len() || inp.d1.len() != inp.d2.len() {
        return Err(Error::Precondition("a, b, c (and d', d'') must have equal lengths".into()));
    }
    if let Some(x) = inp.a.iter().find(|x| inp.c.contains(x) && !inp.f.contains(x)) {
        return Err(Error::Precondition(format!("a and c share {x}, which is not in F")));
    }
    let f = &inp.f;
    let chain = [
        ("d'a", cat(&[&inp.d1, &inp.a])),
        ("d'b", cat(&[&inp.d1, &inp.b])),
        ("d''b", cat(&[&inp.d2, &inp.b])),
        ("d''c", cat(&[&inp.d2, &inp.c])),
    ];
    for w in chain.windows(2) {
        if !same_type_over(s, &w[0].1, &w[1].1, f) {
            return Err(Error::Precondition(format!("{} ≡_F {} fails", w[0].0, w[1].0)));
        }
    }
    Ok(())
}

pub fn amalgamate_independence(inp: &IndependenceInput) -> Result<IndependenceOutput> {
    check_hypotheses(inp)?;
    let s = &inp.host;
    let k = s.maxarity();
    let big_a = distinct(cat(&[&inp.a, &inp.f]));
    let big_c = distinct(cat(&[&inp.c, &inp.f]));
    let a_set: BTreeSet<usize> = big_a.iter().copied().collect();
    let c_set: BTreeSet<usize> = big_c.iter().copied().collect();
    for (x, set, name) in [(&inp.d1, &a_set, "A ∩ D'"), (&inp.d2, &c_set, "C ∩ D''")] {
        if let Some(e) = x.iter().find(|e| set.contains(e) && !inp.f.contains(e)) {
            return Err(Error::InternalConsistency(format!("{name} contains {e} outside F")));
        }
    }
    // Universe: A, then C ∖ A, then the new elements of d.
    let from_host = distinct(cat(&[&big_a, &big_c]));
    let pos = |h: usize| from_host.iter().position(|&x| x == h);
    let mut size = from_host.len();
    let mut d = Vec::with_capacity(inp.d1.len());
    for (i, (&x, &y)) in inp.d1.iter().zip(&inp.d2).enumerate() {
        if inp.f.contains(&x) {
            if x != y {
                return Err(Error::InternalConsistency(format!("d'_{i} = {x} in F but d''_{i} = {y}")));
            }
            d.push(pos(x).unwrap());
        } else if let Some(j) = inp.d1[..i].iter().position(|&z| z == x) {
            d.push(d[j]);
        } else {
            d.push(size);
            size += 1;
        }
    }
    // Translations into the new universe: σ' on A ∪ D', σ'' on C ∪ D''.
    let sigma = |dd: &[usize], h: usize| -> usize {
        match dd.iter().position(|&z| z == h) {
            Some(i) if !inp.f.contains(&h) => d[i],
            _ => pos(h).unwrap(),
        }
    };
    let ad1 = distinct(cat(&[&big_a, &inp.d1]));
    let cd2 = distinct(cat(&[&big_c, &inp.d2]));
    let ac: Vec<usize> = from_host.clone();

    let mut ufs: Vec<UnionFind> = (1..=k).map(|n| UnionFind::new(pow(size, n))).collect();
    // Glue every rep-free tuple over `dom` to the first tuple of its host class.
    let glue = |ufs: &mut Vec<UnionFind>, dom: &[usize], map: &dyn Fn(usize) -> usize| {
        for n in 1..=k {
            let mut first: std::collections::HashMap<u32, usize> = Default::default();
            for idx in 0..pow(dom.len(), n) {
                let t: Vec<usize> = decode(idx, dom.len(), n).into_iter().map(|i| dom[i]).collect();
                if has_repetition(&t) {
                    continue;
                }
                let img: Vec<usize> = t.iter().map(|&h| map(h)).collect();
                let here = super::encode(&img, size);
                let l = s.class_of(&t);
                match first.get(&l) {
                    Some(&j) => {
                        ufs[n - 1].union(j, here);
                    }
                    None => {
                        first.insert(l, here);
                    }
                }
            }
        }
    };
    glue(&mut ufs, &ac, &|h| pos(h).unwrap());
    glue(&mut ufs, &ad1, &|h| sigma(&inp.d1, h));
    glue(&mut ufs, &cd2, &|h| sigma(&inp.d2, h));
    let out = TEStructure::from_union_find(size, k, &mut ufs).with_name(format!("{}-independent", s.name()));

    let a_out: Vec<usize> = inp.a.iter().map(|&h| pos(h).unwrap()).collect();
    let c_out: Vec<usize> = inp.c.iter().map(|&h| pos(h).unwrap()).collect();
    let f_out: Vec<usize> = inp.f.iter().map(|&h| pos(h).unwrap()).collect();
    check_conditions(inp, &big_a, &big_c, &d, &pos, &sigma)?;

    if out.restrict(&(0..ac.len()).collect::<Vec<_>>()) != s.restrict(&ac) {
        return Err(Error::InternalConsistency("structure on AC changed".into()));
    }
    let target_a = s.qf_key(&cat(&[&inp.d1, &inp.a, &inp.f]));
    if out.qf_key(&cat(&[&d, &a_out, &f_out])) != target_a {
        return Err(Error::InternalConsistency("da ≡_F d'a fails".into()));
    }
    let target_c = s.qf_key(&cat(&[&inp.d2, &inp.c, &inp.f]));
    if out.qf_key(&cat(&[&d, &c_out, &f_out])) != target_c {
        return Err(Error::InternalConsistency("dc ≡_F d''c fails".into()));
    }
    Ok(IndependenceOutput {
        structure: out,
        from_host,
        a: a_out,
        c: c_out,
        f: f_out,
        d,
    })
}

/// Any two of `E'(x,z)`, `E''(z,y)`, `E(y,x)` force the third, over all n-tuples
/// `x ∈ A`, `y ∈ C`, `z ∈ DF` of the new universe.
fn check_conditions(
    inp: &IndependenceInput,
    big_a: &[usize],
    big_c: &[usize],
    d: &[usize],
    pos: &dyn Fn(usize) -> Option<usize>,
    sigma: &dyn Fn(&[usize], usize) -> usize,
) -> Result<()> {
    let s = &inp.host;
    let xs: Vec<usize> = big_a.iter().map(|&h| pos(h).unwrap()).collect();
    let ys: Vec<usize> = big_c.iter().map(|&h| pos(h).unwrap()).collect();
    let zs: Vec<usize> = distinct(d.iter().copied().chain(inp.f.iter().map(|&h| pos(h).unwrap())));
    // Back-translations from the new universe to the host.
    let back_ac = |e: usize| -> usize {
        // `xs`/`ys` positions are a prefix of the universe.
        let all = distinct(cat(&[big_a, big_c]));
        all[e]
    };
    let back = |dd: &[usize], e: usize| -> usize {
        for (h_i, &h) in dd.iter().enumerate() {
            if sigma(dd, h) == e {
                return dd[h_i];
            }
        }
        back_ac(e)
    };
    let e0 = |x: &[usize], y: &[usize]| {
        let hx: Vec<usize> = x.iter().map(|&e| back_ac(e)).collect();
        let hy: Vec<usize> = y.iter().map(|&e| back_ac(e)).collect();
        s.related(&hx, &hy)
    };
    let e1 = |x: &[usize], z: &[usize]| {
        let hx: Vec<usize> = x.iter().map(|&e| back(&inp.d1, e)).collect();
        let hz: Vec<usize> = z.iter().map(|&e| back(&inp.d1, e)).collect();
        s.related(&hx, &hz)
    };
    let e2 = |z: &[usize], y: &[usize]| {
        let hz: Vec<usize> = z.iter().map(|&e| back(&inp.d2, e)).collect();
        let hy: Vec<usize> = y.iter().map(|&e| back(&inp.d2, e)).collect();
        s.related(&hz, &hy)
    };
    for n in 1..=s.maxarity() {
        let tuples = |dom: &[usize]| -> Vec<Vec<usize>> {
            (0..pow(dom.len(), n))
                .map(|i| decode(i, dom.len(), n).into_iter().map(|j| dom[j]).collect())
                .collect()
        };
        let (tx, ty, tz) = (tuples(&xs), tuples(&ys), tuples(&zs));
        for x in &tx {
            for y in &ty {
                let r0 = e0(y, x);
                for z in &tz {
                    let (r1, r2) = (e1(x, z), e2(z, y));
                    if r1 && r2 && !r0 {
                        return Err(Error::InternalConsistency(format!("x E' z and z E'' y without y E x at x={x:?} y={y:?} z={z:?}")));
                    }
                    if r2 && r0 && !r1 {
                        return Err(Error::InternalConsistency(format!("z E'' y and y E x without x E' z at x={x:?} y={y:?} z={z:?}")));
                    }
                    if r0 && r1 && !r2 {
                        return Err(Error::InternalConsistency(format!("y E x and x E' z without z E'' y at x={x:?} y={y:?} z={z:?}")));
                    }
                }
            }
        }
    }
    Ok(())
}

/// All quantifier-free types of `len`-tuples at maxarity `k`, each as a
/// structure on exactly the tuple's elements together with the tuple.
pub fn all_tuple_types(len: usize, k: usize) -> Vec<(TEStructure, Vec<usize>)> {
    let mut seen = BTreeSet::new();
    let mut out = vec![];
    for size in 0..=len {
        for s in super::class::all_te(size, k) {
            for code in 0..pow(size, len) {
                let t = decode(code, size, len);
                if distinct(t.iter().copied()).len() != size {
                    continue;
                }
                if seen.insert(s.qf_key(&t)) {
                    out.push((s.clone(), t));
                }
            }
        }
    }
    out
}

/// Every hypothesis-satisfying configuration with singleton `a, b, c, d', d''`
/// and `|F| = fsize`, up to the data the construction reads.
///
/// A configuration is fixed by the type `p` of `d'aF` (shared by all four
/// pairs) and the type `q` of `acF`; the host is the freest structure
/// realizing all five, when one exists.
pub fn singleton_configurations(k: usize, fsize: usize) -> Vec<IndependenceInput> {
    let len = 2 + fsize;
    let types = all_tuple_types(len, k);
    let mut out = vec![];
    // Variables: d' d'' a b c f...
    let (vd1, vd2, va, vb, vc) = (0, 1, 2, 3, 4);
    let fv: Vec<usize> = (5..5 + fsize).collect();
    for (ps, pt) in &types {
        let p_af = ps.qf_key(&pt[1..]);
        for (qs, qt) in &types {
            // `a F` and `c F` both carry the restriction of `p`.
            let q_af: Vec<usize> = [qt[0]].iter().chain(&qt[2..]).copied().collect();
            if qs.qf_key(&q_af) != p_af || qs.qf_key(&qt[1..]) != p_af {
                continue;
            }
            let mut dg = Diagram::new(5 + fsize);
            let terms = |x: usize, y: usize| -> Vec<Term> {
                [x, y].iter().chain(&fv).map(|&v| Term::Var(v)).collect()
            };
            for (x, y) in [(vd1, va), (vd1, vb), (vd2, vb), (vd2, vc)] {
                dg.atoms.extend(Diagram::type_atoms(ps, pt, &terms(x, y)));
            }
            dg.atoms.extend(Diagram::type_atoms(qs, qt, &terms(va, vc)));
            let Ok(Some(r)) = realize_diagram(&dg, &TEStructure::discrete(0, k)) else {
                continue;
            };
            let g = |v: usize| r.assignment[v];
            let inp = IndependenceInput {
                host: r.structure.clone().with_name("config"),
                f: fv.iter().map(|&v| g(v)).collect(),
                a: vec![g(va)],
                b: vec![g(vb)],
                c: vec![g(vc)],
                d1: vec![g(vd1)],
                d2: vec![g(vd2)],
            };
            if check_hypotheses(&inp).is_ok() {
                out.push(inp);
            }
        }
    }
    out
}

/// Brute force: the types over `AC` (as `qf_key` of `ac ++ d`) of all
/// one-point (or in-`F`) choices of `d` over the host's `AC` satisfying both
/// required types. `d` is a single element.
pub fn brute_force_witness_types(inp: &IndependenceInput) -> BTreeSet<Vec<u32>> {
    assert_eq!(inp.d1.len(), 1);
    let s = &inp.host;
    let ac = distinct(cat(&[&inp.a, &inp.f, &inp.c, &inp.f]));
    let base = s.restrict(&ac);
    let pos = |h: usize| ac.iter().position(|&x| x == h).unwrap();
    let a: Vec<usize> = inp.a.iter().map(|&h| pos(h)).collect();
    let c: Vec<usize> = inp.c.iter().map(|&h| pos(h)).collect();
    let f: Vec<usize> = inp.f.iter().map(|&h| pos(h)).collect();
    let ta = s.qf_key(&cat(&[&inp.d1, &inp.a, &inp.f]));
    let tc = s.qf_key(&cat(&[&inp.d2, &inp.c, &inp.f]));
    let all: Vec<usize> = (0..ac.len()).collect();
    let mut out = BTreeSet::new();
    // d inside the base.
    for x in 0..ac.len() {
        if base.qf_key(&cat(&[&[x], &a, &f])) == ta && base.qf_key(&cat(&[&[x], &c, &f])) == tc {
            out.insert(base.qf_key(&cat(&[&all, &[x]])));
        }
    }
    // d a new element: every structure on base + 1 extending base.
    let m = ac.len();
    super::class::one_point_extensions(&base, &mut |ext| {
        if ext.qf_key(&cat(&[&[m], &a, &f])) == ta && ext.qf_key(&cat(&[&[m], &c, &f])) == tc {
            out.insert(ext.qf_key(&cat(&[&all, &[m]])));
        }
    });
    out
}
