//! Refuting finite SOP2 configurations by independent amalgamation: with
//! `a = a_00`, `b = a_<>`, `c = a_01`, `d' = d_000` and `d'' = d_010`, a
//! single `d` realizes `φ(x, a_00) ∧ φ(x, a_01)`.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;

use super::consistency::ParamFormula;
use super::{TreeFamily, TreeNode};
use crate::error::{Error, Result};
use crate::logic::Formula;
use crate::report::{CheckReport, Counterexample};
use crate::structure::cartesian;
use crate::te::class::random_te;
use crate::te::independence::{check_hypotheses, same_type_over};
use crate::te::{amalgamate_independence, generic_te, has_repetition, print_te, IndependenceInput, TEStructure, UnionFind};

fn node(s: &[u8]) -> TreeNode {
    TreeNode(s.to_vec())
}

/// The amalgamation input read off the family, or the unmet hypotheses.
pub(crate) fn configuration(fam: &TreeFamily, phi: &ParamFormula) -> Result<std::result::Result<IndependenceInput, Vec<String>>> {
    let mut unmet = vec![];
    let get = |m: &BTreeMap<TreeNode, Vec<usize>>, n: &[u8], what: &str, unmet: &mut Vec<String>| {
        let found = m.get(&node(n)).cloned();
        if found.is_none() {
            unmet.push(format!("no {what} at {}", node(n)));
        }
        found
    };
    let b = get(&fam.map, &[], "tuple", &mut unmet);
    let a = get(&fam.map, &[0, 0], "tuple", &mut unmet);
    let c = get(&fam.map, &[0, 1], "tuple", &mut unmet);
    let d1 = get(&fam.realizers, &[0, 0, 0], "realizer", &mut unmet);
    let d2 = get(&fam.realizers, &[0, 1, 0], "realizer", &mut unmet);
    let (Some(a), Some(b), Some(c), Some(d1), Some(d2)) = (a, b, c, d1, d2) else {
        return Ok(Err(unmet));
    };
    if d1.len() != phi.object.len() || a.len() != phi.params.len() {
        return Err(Error::Arity("formula variables do not match the family".into()));
    }
    let mut f: Vec<usize> = vec![];
    for &x in &a {
        if c.contains(&x) && !f.contains(&x) {
            f.push(x);
        }
    }
    for i in 0..a.len() {
        if [a[i], c[i]].iter().any(|x| f.contains(x)) && !(a[i] == b[i] && b[i] == c[i]) {
            unmet.push(format!("F element at position {i} is not placed alike in a_00, a_<>, a_01"));
        }
    }
    let s = &fam.host;
    if !phi.holds(s, &d1, &a)? {
        unmet.push("φ(d_000, a_00) fails".into());
    }
    if !phi.holds(s, &d2, &c)? {
        unmet.push("φ(d_010, a_01) fails".into());
    }
    let cat = |x: &[usize], y: &[usize]| [x, y].concat();
    let chain = [
        ("d'a", cat(&d1, &a)),
        ("d'b", cat(&d1, &b)),
        ("d''b", cat(&d2, &b)),
        ("d''c", cat(&d2, &c)),
    ];
    for w in chain.windows(2) {
        if !same_type_over(s, &w[0].1, &w[1].1, &f) {
            unmet.push(format!("{} ≡_F {} fails", w[0].0, w[1].0));
        }
    }
    if !unmet.is_empty() {
        return Ok(Err(unmet));
    }
    Ok(Ok(IndependenceInput { host: s.clone(), f, a, b, c, d1, d2 }))
}

pub fn refute_sop2_config(fam: &TreeFamily, phi: &ParamFormula) -> Result<CheckReport> {
    let inp = match configuration(fam, phi)? {
        Ok(inp) => inp,
        Err(unmet) => {
            let mut r = CheckReport::inconclusive(0, "hypotheses not met");
            r.details.extend(unmet);
            return Ok(r);
        }
    };
    let out = amalgamate_independence(&inp)?;
    let (x_a, x_c) = (phi.holds(&out.structure, &out.d, &out.a)?, phi.holds(&out.structure, &out.d, &out.c)?);
    let text = format!(
        "F = {:?}\nd = {:?} over a = {:?}, c = {:?}\n{}",
        out.f,
        out.d,
        out.a,
        out.c,
        print_te(&out.structure)
    );
    if x_a && x_c {
        Ok(CheckReport::pass(1)
            .with_detail("SOP₂ configuration refuted")
            .with_detail(format!("d = {:?} realizes φ(x, a_00) ∧ φ(x, a_01)", out.d))
            .with_detail(text))
    } else {
        Ok(CheckReport::fail(Counterexample::Witness(text), 1).with_detail("the amalgamated d does not realize both instances"))
    }
}

/// Copies of one template type for `d y` placed on `d'a`, `d'b`, `d''b` and
/// `d''c`, with `F` at random shared positions; the template is cut from a
/// generic base (a random one when that is too small). Nodes below `00` carry `a`, below `01` carry `c`, the rest `b`.
pub fn random_sop2_config(seed: u64, tuple_length: usize, maxarity: usize, depth: usize) -> Result<(TreeFamily, ParamFormula)> {
    if depth < 3 || tuple_length == 0 || maxarity == 0 {
        return Err(Error::InvalidInput("need depth ≥ 3 and positive tuple length and maxarity".into()));
    }
    let mut rng = crate::rng(seed);
    let len = tuple_length;
    let ld = rng.gen_range(1..=2usize);
    let mut positions: Vec<usize> = (0..len).collect();
    positions.shuffle(&mut rng);
    positions.truncate(rng.gen_range(0..=len));
    let mut generic = generic_te(2 * (ld + len), maxarity, rng.gen())?.structure;
    if generic.size() < ld + len {
        // Low arity drains the construction early.
        generic = random_te(ld + len, maxarity, &mut rng);
    }
    let mut pick: Vec<usize> = (0..generic.size()).collect();
    pick.shuffle(&mut rng);
    pick.truncate(ld + len);
    let tpl = generic.restrict(&pick);

    // Host layout: F, then a, b, c outside F, then d', d''.
    let mut next = 0;
    let mut fresh = |k: usize| {
        let v: Vec<usize> = (next..next + k).collect();
        next += k;
        v
    };
    let fpos = fresh(positions.len());
    let free = len - positions.len();
    let tuples: Vec<Vec<usize>> = (0..3)
        .map(|_| {
            let own = fresh(free);
            let mut it = own.into_iter();
            (0..len)
                .map(|i| match positions.iter().position(|&p| p == i) {
                    Some(j) => fpos[j],
                    None => it.next().unwrap(),
                })
                .collect()
        })
        .collect();
    let (d1, d2) = (fresh(ld), fresh(ld));
    let size = next;
    let copies = [(&d1, &tuples[0]), (&d1, &tuples[1]), (&d2, &tuples[1]), (&d2, &tuples[2])];
    let mut ufs: Vec<UnionFind> = (1..=maxarity).map(|n| UnionFind::new(size.pow(n as u32))).collect();
    let dom: Vec<usize> = (0..ld + len).collect();
    for (d, y) in copies {
        let map: Vec<usize> = d.iter().chain(y.iter()).copied().collect();
        for n in 1..=maxarity {
            let mut first: HashMap<u32, usize> = HashMap::new();
            for t in cartesian(&vec![dom.clone(); n]) {
                if has_repetition(&t) {
                    continue;
                }
                let img: Vec<usize> = t.iter().map(|&i| map[i]).collect();
                let here = crate::te::encode(&img, size);
                match first.get(&tpl.class_of(&t)) {
                    Some(&j) => {
                        ufs[n - 1].union(j, here);
                    }
                    None => {
                        first.insert(tpl.class_of(&t), here);
                    }
                }
            }
        }
    }
    let host = TEStructure::from_union_find(size, maxarity, &mut ufs).with_name(format!("sop2-{seed}"));

    // φ: a few literals of the template type, each touching x.
    let name = |i: usize| if i < ld { format!("x{i}") } else { format!("y{}", i - ld) };
    let mut lits = vec![];
    for _ in 0..rng.gen_range(1..=3) {
        let n = rng.gen_range(1..=maxarity.min(ld + len));
        let mut draw = || {
            let mut v = dom.clone();
            v.shuffle(&mut rng);
            v.truncate(n);
            v
        };
        let (mut t, u) = (draw(), draw());
        if !t.iter().chain(&u).any(|&i| i < ld) {
            t[0] = 0;
            if has_repetition(&t) {
                continue;
            }
        }
        let atom = Formula::E(t.iter().map(|&i| name(i)).collect(), u.iter().map(|&i| name(i)).collect());
        lits.push(if tpl.related(&t, &u) { atom } else { atom.not() });
    }
    if rng.gen_bool(0.5) {
        lits.push(Formula::var_eq(&name(0), &name(ld + rng.gen_range(0..len))).not());
    }
    let object: Vec<String> = (0..ld).map(name).collect();
    let params: Vec<String> = (ld..ld + len).map(name).collect();
    let phi = ParamFormula::new(Formula::conj(lits), object, Some(params))?;

    let map: BTreeMap<TreeNode, Vec<usize>> = TreeNode::all_to_depth(depth, 2)
        .into_iter()
        .map(|n| {
            let t = match n.0.get(..2) {
                Some([0, 0]) => &tuples[0],
                Some([0, 1]) => &tuples[2],
                _ => &tuples[1],
            };
            (n, t.clone())
        })
        .collect();
    let realizers = BTreeMap::from([(node(&[0, 0, 0]), d1), (node(&[0, 1, 0]), d2)]);
    let fam = TreeFamily::new(host, depth, 2, map, realizers)?;
    match configuration(&fam, &phi)? {
        Ok(inp) if check_hypotheses(&inp).is_ok() => Ok((fam, phi)),
        Ok(_) => Err(Error::InternalConsistency("generated configuration fails the amalgamation hypotheses".into())),
        Err(unmet) => Err(Error::InternalConsistency(format!("generated configuration: {}", unmet.join("; ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Verdict;
    use crate::te::independence::brute_force_witness_types;
    use proptest::prelude::*;

    #[test]
    fn disjoint_tuples_are_refuted() {
        let (fam, phi) = (0..50)
            .map(|s| random_sop2_config(s, 2, 2, 3).unwrap())
            .find(|(f, _)| {
                let a = f.tuple(&node(&[0, 0]));
                !f.tuple(&node(&[0, 1])).iter().any(|x| a.contains(x))
            })
            .expect("a configuration with empty F");
        let r = refute_sop2_config(&fam, &phi).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.details[0], "SOP₂ configuration refuted");
    }

    #[test]
    fn shared_elements_are_refuted() {
        let (fam, phi) = (0..80)
            .map(|s| random_sop2_config(s, 3, 2, 3).unwrap())
            .find(|(f, _)| {
                let a = f.tuple(&node(&[0, 0]));
                let c = f.tuple(&node(&[0, 1]));
                c.iter().any(|x| a.contains(x)) && a != c
            })
            .expect("a configuration with nonempty F");
        assert!(refute_sop2_config(&fam, &phi).unwrap().passed());
    }

    #[test]
    fn broken_chain_is_reported() {
        let (mut fam, phi) = (0..50)
            .map(|s| random_sop2_config(s, 1, 1, 3).unwrap())
            .find(|(f, _)| {
                let (b, d2) = (f.tuple(&TreeNode::root()), &f.realizers[&node(&[0, 1, 0])]);
                d2.len() == 1 && !f.host.related(b, d2)
            })
            .unwrap();
        // Put d'' in the class of a_<> so d'b and d''b differ.
        let b = fam.tuple(&TreeNode::root())[0];
        let d2 = fam.realizers[&node(&[0, 1, 0])][0];
        let old = fam.host.clone();
        fam.host = TEStructure::from_fn(old.size(), 1, |t| old.class_of(&[if t[0] == d2 { b } else { t[0] }]) as u64);
        let r = refute_sop2_config(&fam, &phi).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.details.iter().any(|d| d.contains("≡_F")), "{:?}", r.details);
    }

    #[test]
    fn misplaced_f_is_reported() {
        let (mut fam, phi) = (0..80)
            .map(|s| random_sop2_config(s, 2, 1, 3).unwrap())
            .find(|(f, _)| f.tuple(&node(&[0, 0])) == f.tuple(&node(&[0, 1])))
            .expect("a configuration with F everywhere");
        let a = fam.map[&node(&[0, 1])].clone();
        fam.map.insert(node(&[0, 1]), vec![a[1], a[0]]);
        let r = refute_sop2_config(&fam, &phi).unwrap();
        assert!(r.details.iter().any(|d| d.contains("placed alike")), "{:?}", r.details);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn generated_configurations_are_refuted(seed in any::<u64>(), len in 1usize..=3, k in 1usize..=2) {
            let (fam, phi) = random_sop2_config(seed, len, k, 3).unwrap();
            let r = refute_sop2_config(&fam, &phi).unwrap();
            prop_assert!(r.passed(), "{:?}", r);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn witness_agrees_with_brute_force(seed in 0u64..10_000, len in 1usize..=2, k in 1usize..=2) {
            let (fam, phi) = random_sop2_config(seed, len, k, 3).unwrap();
            prop_assume!(phi.object.len() == 1 && len * k <= 2);
            let inp = configuration(&fam, &phi).unwrap().unwrap();
            let out = amalgamate_independence(&inp).unwrap();
            let all: Vec<usize> = (0..out.from_host.len()).collect();
            let key = out.structure.qf_key(&[all, out.d.clone()].concat());
            prop_assert!(brute_force_witness_types(&inp).contains(&key));
            prop_assert!(refute_sop2_config(&fam, &phi).unwrap().passed());
        }
    }
}
