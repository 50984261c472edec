use super::consistency::{realize_instances, ParamFormula};
use super::{nodes_text, TreeFamily, TreeNode};
use crate::error::{Error, Result};
use crate::logic::{parse_formula, Dialect};
use crate::report::{CheckReport, Counterexample};
use crate::structure::cartesian;
use crate::te::diagram::{realize_diagram, Atom, Diagram, Term};
use crate::te::TEStructure;

#[derive(Clone, Debug)]
pub struct Tp2Witness {
    pub structure: TEStructure,
    /// `array[i][j] = (b_i, c_j, d_j)`.
    pub array: Vec<Vec<Vec<usize>>>,
    /// `E2(x,y; u,v)` with parameters `y, u, v`.
    pub phi: ParamFormula,
    pub report: CheckReport,
}

pub fn tp2_formula() -> ParamFormula {
    let f = parse_formula("E2(x,y;u,v)", Dialect::Le).expect("fixed formula");
    ParamFormula::new(f, vec!["x".into()], Some(vec!["y".into(), "u".into(), "v".into()])).expect("fixed formula")
}

fn instance(a: &[usize]) -> Atom {
    Atom::E(vec![Term::Var(0), Term::Base(a[0])], vec![Term::Base(a[1]), Term::Base(a[2])], true)
}

/// Rows `i < m`, columns `j < n` over a discrete base on the elements `b_i`,
/// `c_j`, `d_j`.
pub fn build_tp2_witness(m: usize, n: usize) -> Result<Tp2Witness> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("rows and columns must be positive".into()));
    }
    let structure = TEStructure::discrete(m + 2 * n, 2).with_name(format!("tp2-{m}x{n}"));
    let (c, d) = (|j: usize| m + 2 * j, |j: usize| m + 2 * j + 1);
    let array: Vec<Vec<Vec<usize>>> = (0..m).map(|i| (0..n).map(|j| vec![i, c(j), d(j)]).collect()).collect();
    let mut used = 0u64;
    let mut bad = vec![];
    for j in 0..n {
        for k in 0..j {
            if structure.related(&[c(j), d(j)], &[c(k), d(k)]) {
                bad.push(format!("E2(c{j} d{j}; c{k} d{k}) holds in the base"));
            }
        }
    }
    for (i, row) in array.iter().enumerate() {
        for j in 0..n {
            for k in 0..j {
                used += 1;
                let dg = Diagram { variables: 1, atoms: vec![instance(&row[j]), instance(&row[k])] };
                if let Some(r) = realize_diagram(&dg, &structure)? {
                    bad.push(format!("row {i}: columns {k} and {j} are jointly realized by x = {}", r.assignment[0]));
                }
            }
        }
    }
    let mut paths = 0u64;
    for eta in cartesian(&vec![(0..n).collect::<Vec<_>>(); m]) {
        used += 1;
        paths += 1;
        let dg = Diagram { variables: 1, atoms: (0..m).map(|i| instance(&array[i][eta[i]])).collect() };
        if realize_diagram(&dg, &structure)?.is_none() {
            bad.push(format!("path {eta:?} is not realizable"));
        }
    }
    let report = if bad.is_empty() {
        CheckReport::pass(used)
            .with_detail(format!("{m} row(s) 2-inconsistent over {n} column(s)"))
            .with_detail(format!("{paths} path(s) consistent"))
    } else {
        let mut r = CheckReport::fail(Counterexample::Witness(bad.join("\n")), used);
        r.details = bad;
        r
    };
    Ok(Tp2Witness { structure, array, phi: tp2_formula(), report })
}

/// Paths through the tree up to `depth` are realizable and incomparable
/// nodes are not jointly realizable. Depth 0 checks nothing.
pub fn check_sop2_witness(fam: &TreeFamily, phi: &ParamFormula, depth: usize) -> Result<CheckReport> {
    if depth > fam.depth {
        return Err(Error::Precondition(format!("the family has depth {} < {depth}", fam.depth)));
    }
    if phi.params.len() != fam.tuple_length {
        return Err(Error::Arity(format!("{} parameters for tuples of length {}", phi.params.len(), fam.tuple_length)));
    }
    if depth == 0 {
        return Ok(CheckReport::pass(0).with_detail("depth 0: nothing to check"));
    }
    let nodes = TreeNode::all_to_depth(depth, fam.alphabet);
    let mut used = 0u64;
    for leaf in nodes.iter().filter(|n| n.len() == depth) {
        used += 1;
        let path: Vec<TreeNode> = leaf.prefixes().collect();
        let params: Vec<&[usize]> = path.iter().map(|n| fam.tuple(n)).collect();
        if realize_instances(&fam.host, phi, &params)?.is_none() {
            let w = format!("path {} is not realizable", nodes_text(&path));
            return Ok(CheckReport::fail(Counterexample::Witness(w.clone()), used).with_detail(w));
        }
    }
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[..i] {
            if a.comparable(b) {
                continue;
            }
            used += 1;
            if let Some(r) = realize_instances(&fam.host, phi, &[fam.tuple(a), fam.tuple(b)])? {
                let w = format!("incomparable nodes {b} and {a} are jointly realized by x = {:?}", r.assignment);
                return Ok(CheckReport::fail(Counterexample::Witness(w.clone()), used).with_detail(w));
            }
        }
    }
    Ok(CheckReport::pass(used).with_detail(format!("depth {depth}, alphabet {}", fam.alphabet)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn two_by_two() {
        let w = build_tp2_witness(2, 2).unwrap();
        assert!(w.report.passed(), "{:?}", w.report);
        assert!(!w.structure.related(&[2, 3], &[4, 5]));
        // Both instances of a row would force E2(c_j d_j; c_k d_k).
        for j in 0..2 {
            for k in 0..2 {
                let (x, y) = (&w.array[0][j], &w.array[0][k]);
                assert_eq!(w.structure.related(&x[1..], &y[1..]), j == k);
            }
        }
    }

    #[test]
    fn single_row_is_degenerate() {
        assert!(build_tp2_witness(1, 3).unwrap().report.passed());
    }

    #[test]
    fn all_sizes_up_to_four() {
        for m in 2..=4 {
            for n in 2..=4 {
                let w = build_tp2_witness(m, n).unwrap();
                assert!(w.report.passed(), "{m}x{n}");
                assert_eq!(w.report.details[1], format!("{} path(s) consistent", n.pow(m as u32)));
            }
        }
    }

    fn tree(host: TEStructure, depth: usize, f: impl Fn(&TreeNode) -> Vec<usize>) -> TreeFamily {
        let map = TreeNode::all_to_depth(depth, 2).into_iter().map(|n| (n.clone(), f(&n))).collect();
        TreeFamily::new(host, depth, 2, map, BTreeMap::new()).unwrap()
    }

    #[test]
    fn tp2_rows_are_not_an_sop2_tree() {
        let w = build_tp2_witness(2, 2).unwrap();
        // Root and first child in row 0, second child in row 1.
        let fam = tree(w.structure.clone(), 1, |n| if n.0 == [1] { w.array[1][0].clone() } else { w.array[0][0].clone() });
        let r = check_sop2_witness(&fam, &w.phi, 1).unwrap();
        assert!(!r.passed());
        assert!(r.details[0].contains("incomparable"), "{:?}", r.details);
        assert!(realize_instances(&fam.host, &w.phi, &[&w.array[0][0], &w.array[1][0]]).unwrap().is_some());
    }

    #[test]
    fn incompatible_singletons_pass_at_depth_one() {
        let host = TEStructure::discrete(3, 1);
        let f = parse_formula("x = y | y = z", Dialect::Le).unwrap();
        let phi = ParamFormula::new(f, vec!["x".into()], None).unwrap();
        // The root tuple makes the instance trivial; the children pin x apart.
        let fam = tree(host.clone(), 1, |n| match n.0.as_slice() {
            [] => vec![0, 0],
            [0] => vec![0, 1],
            _ => vec![1, 2],
        });
        assert!(check_sop2_witness(&fam, &phi, 1).unwrap().passed());
        let bad = tree(host, 1, |n| if n.is_empty() { vec![0, 0] } else { vec![0, 1] });
        assert!(!check_sop2_witness(&bad, &phi, 1).unwrap().passed());
    }

    #[test]
    fn depth_zero_is_vacuous() {
        let fam = tree(TEStructure::discrete(1, 1), 0, |_| vec![0]);
        let phi = ParamFormula::new(parse_formula("!(x = x)", Dialect::Le).unwrap(), vec!["x".into()], Some(vec!["y".into()])).unwrap();
        assert!(check_sop2_witness(&fam, &phi, 0).unwrap().passed());
    }
}
