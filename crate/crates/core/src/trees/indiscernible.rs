use std::collections::HashMap;

use super::consistency::natural_order;
use super::{is_cap_closed, iso_key, nodes_text, TreeFamily, TreeNode};
use crate::error::{Error, Result};
use crate::logic::{evaluate, Assignment, Formula};
use crate::report::{CheckReport, Counterexample};

/// Tuple enumeration stops here and the check turns inconclusive.
const TUPLE_LIMIT: u64 = 2_000_000;

/// How many nodes `f` takes, and its variables in that order.
fn shape(f: &Formula, tuple_length: usize) -> Result<(usize, Vec<String>)> {
    if !f.is_quantifier_free() {
        return Err(Error::UnsupportedShape(format!("`{f}` is not quantifier-free")));
    }
    let vars = natural_order(f.free_vars());
    if tuple_length == 0 || vars.len() % tuple_length != 0 {
        return Err(Error::Arity(format!("`{f}` has {} free variables; tuples have length {tuple_length}", vars.len())));
    }
    Ok((vars.len() / tuple_length, vars))
}

/// Calls `visit` on every ∩-closed `d`-tuple of nodes of `fam`.
fn closed_tuples(fam: &TreeFamily, d: usize, mut visit: impl FnMut(&[TreeNode]) -> Result<bool>) -> Result<bool> {
    let nodes = fam.nodes();
    let mut idx = vec![0usize; d];
    loop {
        let t: Vec<TreeNode> = idx.iter().map(|&i| nodes[i].clone()).collect();
        if is_cap_closed(&t) && !visit(&t)? {
            return Ok(false);
        }
        let Some(p) = (0..d).rev().find(|&p| idx[p] + 1 < nodes.len()) else {
            return Ok(true);
        };
        idx[p] += 1;
        idx[p + 1..].iter_mut().for_each(|i| *i = 0);
    }
}

fn value(fam: &TreeFamily, f: &Formula, vars: &[String], eta: &[TreeNode]) -> Result<bool> {
    let asg: Assignment<usize> = vars.iter().cloned().zip(fam.tuple_of(eta)).collect();
    evaluate(&fam.host, f, &asg)
}

fn cost(fam: &TreeFamily, d: usize) -> u64 {
    (fam.map.len() as u64).saturating_pow(d as u32)
}

/// Every listed formula has one truth value on each isomorphism class of
/// ∩-closed node tuples of length at most `tuple_budget`.
pub fn check_indiscernible_tree(fam: &TreeFamily, formulas: &[Formula], tuple_budget: usize) -> Result<CheckReport> {
    let mut used = 0u64;
    for f in formulas {
        let (d, vars) = shape(f, fam.tuple_length)?;
        if d > tuple_budget || cost(fam, d).saturating_add(used) > TUPLE_LIMIT {
            return Ok(CheckReport::inconclusive(used, format!("`{f}` needs {d}-tuples of nodes, beyond the budget")));
        }
        let mut seen: HashMap<Vec<bool>, (Vec<TreeNode>, bool)> = HashMap::new();
        let mut clash = None;
        closed_tuples(fam, d, |eta| {
            used += 1;
            let v = value(fam, f, &vars, eta)?;
            match seen.get(&iso_key(eta, fam.alphabet)) {
                Some((nu, w)) if *w != v => {
                    clash = Some((nu.clone(), *w, eta.to_vec(), v));
                    Ok(false)
                }
                Some(_) => Ok(true),
                None => {
                    seen.insert(iso_key(eta, fam.alphabet), (eta.to_vec(), v));
                    Ok(true)
                }
            }
        })?;
        if let Some((nu, w, eta, v)) = clash {
            let text = format!("formula {f}\neta {} gives {w}\nnu {} gives {v}", nodes_text(&nu), nodes_text(&eta));
            return Ok(CheckReport::fail(Counterexample::Witness(text), used)
                .with_detail(format!("`{f}` separates isomorphic node tuples")));
        }
    }
    Ok(CheckReport::pass(used).with_detail(format!("{} formula(s), tuples up to length {tuple_budget}", formulas.len())))
}

/// Every truth value of a listed formula on an ∩-closed tuple of `fam_b`
/// also occurs on an isomorphic tuple of `fam_a`.
pub fn check_models(fam_a: &TreeFamily, fam_b: &TreeFamily, formulas: &[Formula], tuple_budget: usize) -> Result<CheckReport> {
    if fam_a.tuple_length != fam_b.tuple_length || fam_a.alphabet != fam_b.alphabet {
        return Err(Error::Precondition("families differ in tuple length or alphabet".into()));
    }
    let mut used = 0u64;
    for f in formulas {
        let (d, vars) = shape(f, fam_a.tuple_length)?;
        if d > tuple_budget || cost(fam_a, d).saturating_add(cost(fam_b, d)).saturating_add(used) > TUPLE_LIMIT {
            return Ok(CheckReport::inconclusive(used, format!("`{f}` needs {d}-tuples of nodes, beyond the budget")));
        }
        let mut found: HashMap<Vec<bool>, [bool; 2]> = HashMap::new();
        closed_tuples(fam_a, d, |nu| {
            used += 1;
            let v = value(fam_a, f, &vars, nu)?;
            found.entry(iso_key(nu, fam_a.alphabet)).or_default()[v as usize] = true;
            Ok(true)
        })?;
        let mut missing = None;
        closed_tuples(fam_b, d, |eta| {
            used += 1;
            let v = value(fam_b, f, &vars, eta)?;
            if found.get(&iso_key(eta, fam_b.alphabet)).map_or(true, |s| !s[v as usize]) {
                missing = Some((eta.to_vec(), v));
                return Ok(false);
            }
            Ok(true)
        })?;
        if let Some((eta, v)) = missing {
            let text = format!("formula {f}\neta {} gives {v}\nno isomorphic tuple of the first family agrees", nodes_text(&eta));
            return Ok(CheckReport::fail(Counterexample::Witness(text), used)
                .with_detail(format!("`{f}` is not modeled at {}", nodes_text(&eta))));
        }
    }
    Ok(CheckReport::pass(used))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, Dialect};
    use crate::te::TEStructure;
    use std::collections::BTreeMap;

    fn le(s: &str) -> Formula {
        parse_formula(s, Dialect::Le).unwrap()
    }

    fn family(host: TEStructure, depth: usize, f: impl Fn(&TreeNode) -> Vec<usize>) -> TreeFamily {
        let map: BTreeMap<TreeNode, Vec<usize>> = TreeNode::all_to_depth(depth, 2).into_iter().map(|n| (n.clone(), f(&n))).collect();
        TreeFamily::new(host, depth, 2, map, BTreeMap::new()).unwrap()
    }

    #[test]
    fn constant_family_is_indiscernible() {
        let fam = family(TEStructure::discrete(2, 2), 2, |_| vec![0, 1]);
        let fs = [le("E2(x0,x1;x2,x3)"), le("x0 = x3"), le("E1(x0;x1)")];
        assert!(check_indiscernible_tree(&fam, &fs, 2).unwrap().passed());
        assert!(check_indiscernible_tree(&fam, &[], 2).unwrap().passed());
    }

    /// `(<>, 0)` and `(0, 00)` are isomorphic but E1 holds only on the second.
    fn split_family() -> TreeFamily {
        let host = TEStructure::discrete(3, 1);
        family(host, 2, |n| vec![if n.is_empty() { 0 } else if n.0[0] == 0 { 1 } else { 2 }])
    }

    #[test]
    fn separated_classes_fail_with_an_isomorphic_pair() {
        let fam = split_family();
        let r = check_indiscernible_tree(&fam, &[le("E1(x0;x1)")], 2).unwrap();
        assert!(!r.passed());
        let Some(Counterexample::Witness(w)) = &r.counterexample else { panic!() };
        // Oracle: scan all isomorphic closed pairs at depth 2 by hand.
        let nodes = fam.nodes();
        let mut bad = 0;
        for a in &nodes {
            for b in &nodes {
                for c in &nodes {
                    for d in &nodes {
                        let (x, y) = (vec![a.clone(), b.clone()], vec![c.clone(), d.clone()]);
                        if is_cap_closed(&x) && is_cap_closed(&y) && super::super::tree_iso(&x, &y).unwrap() {
                            let v = |t: &[TreeNode]| fam.host.related(&fam.map[&t[0]], &fam.map[&t[1]]);
                            bad += (v(&x) != v(&y)) as usize;
                        }
                    }
                }
            }
        }
        assert!(bad > 0, "{w}");
    }

    #[test]
    fn over_budget_is_inconclusive() {
        let fam = split_family();
        let r = check_indiscernible_tree(&fam, &[le("E1(x0;x1)")], 1).unwrap();
        assert_eq!(r.verdict, crate::report::Verdict::Inconclusive);
    }

    #[test]
    fn modeling_checks() {
        let fam = split_family();
        let fs = [le("E1(x0;x1)"), le("x0 = x1")];
        assert!(check_models(&fam, &fam, &fs, 2).unwrap().passed());
        let constant = family(TEStructure::discrete(1, 1), 2, |_| vec![0]);
        assert!(check_models(&constant, &constant, &[le("x0 = x1")], 2).unwrap().passed());
        // Distinct nodes never share an element in the injective family.
        let nodes = fam.nodes();
        let injective = family(TEStructure::discrete(nodes.len(), 1), 2, |n| vec![nodes.binary_search(n).unwrap()]);
        let r = check_models(&injective, &constant, &[le("x0 = x1")], 2).unwrap();
        assert!(!r.passed());
        assert!(!check_models(&constant, &injective, &[le("x0 = x1")], 2).unwrap().passed());
    }
}
