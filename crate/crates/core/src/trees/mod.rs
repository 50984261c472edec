//! Trees of tuples indexed by finite strings: meets, tree isomorphism of
//! meet-closed node tuples, and witness checks for tree properties.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::te::TEStructure;

pub mod consistency;
pub mod format;
pub mod indiscernible;
pub mod refute;
pub mod witness;

pub use consistency::ParamFormula;
pub use format::{parse_family, print_family};
pub use indiscernible::{check_indiscernible_tree, check_models};
pub use refute::{random_sop2_config, refute_sop2_config};
pub use witness::{build_tp2_witness, check_sop2_witness, Tp2Witness};

/// A finite string over `0..alphabet`; the empty string is the root.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TreeNode(pub Vec<u8>);

impl TreeNode {
    pub fn root() -> Self {
        TreeNode(vec![])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self ⊴ other`.
    pub fn is_prefix_of(&self, other: &TreeNode) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn comparable(&self, other: &TreeNode) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    pub fn meet(&self, other: &TreeNode) -> TreeNode {
        let n = self.0.iter().zip(&other.0).take_while(|(a, b)| a == b).count();
        TreeNode(self.0[..n].to_vec())
    }

    pub fn child(&self, t: u8) -> TreeNode {
        let mut v = self.0.clone();
        v.push(t);
        TreeNode(v)
    }

    pub fn prefixes(&self) -> impl Iterator<Item = TreeNode> + '_ {
        (0..=self.len()).map(|n| TreeNode(self.0[..n].to_vec()))
    }

    /// All strings of length at most `depth`, shortest first.
    pub fn all_to_depth(depth: usize, alphabet: u8) -> Vec<TreeNode> {
        let mut out = vec![TreeNode::root()];
        let mut level = vec![TreeNode::root()];
        for _ in 0..depth {
            level = level.iter().flat_map(|n| (0..alphabet).map(move |t| n.child(t))).collect();
            out.extend(level.iter().cloned());
        }
        out
    }
}

impl Ord for TreeNode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.len(), &self.0).cmp(&(other.len(), &other.0))
    }
}

impl PartialOrd for TreeNode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("<>");
        }
        for &t in &self.0 {
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for TreeNode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "<>" || s.is_empty() {
            return Ok(TreeNode::root());
        }
        s.chars()
            .map(|c| c.to_digit(10).map(|d| d as u8))
            .collect::<Option<Vec<u8>>>()
            .map(TreeNode)
            .ok_or_else(|| Error::InvalidInput(format!("`{s}` is not a node string")))
    }
}

pub fn nodes_text(nodes: &[TreeNode]) -> String {
    let parts: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
    format!("({})", parts.join(", "))
}

pub fn is_cap_closed<'a>(nodes: impl IntoIterator<Item = &'a TreeNode>) -> bool {
    let set: BTreeSet<&TreeNode> = nodes.into_iter().collect();
    set.iter().all(|a| set.iter().all(|b| set.contains(&a.meet(b))))
}

pub fn cap_closure(nodes: &BTreeSet<TreeNode>) -> BTreeSet<TreeNode> {
    // Meets of meets are meets of the original pair, so one round suffices.
    let mut out = nodes.clone();
    for a in nodes {
        for b in nodes {
            out.insert(a.meet(b));
        }
    }
    out
}

/// The data compared by tree isomorphism: `η_i ⊴ η_j` and `η_i⌢t ⊴ η_j`.
pub(crate) fn iso_key(eta: &[TreeNode], alphabet: u8) -> Vec<bool> {
    let mut key = Vec::with_capacity(eta.len() * eta.len() * (alphabet as usize + 1));
    for a in eta {
        for b in eta {
            key.push(a.is_prefix_of(b));
            for t in 0..alphabet {
                key.push(a.child(t).is_prefix_of(b));
            }
        }
    }
    key
}

fn alphabet_of(tuples: &[&[TreeNode]]) -> u8 {
    let top = tuples.iter().flat_map(|t| t.iter()).flat_map(|n| n.0.iter().copied()).max();
    top.map_or(2, |m| (m + 1).max(2))
}

pub fn tree_iso(eta: &[TreeNode], nu: &[TreeNode]) -> Result<bool> {
    for (name, t) in [("first", eta), ("second", nu)] {
        if !is_cap_closed(t) {
            return Err(Error::Precondition(format!("{name} tuple {} is not ∩-closed", nodes_text(t))));
        }
    }
    if eta.len() != nu.len() {
        return Err(Error::Precondition("node tuples differ in length".into()));
    }
    let alphabet = alphabet_of(&[eta, nu]);
    Ok(iso_key(eta, alphabet) == iso_key(nu, alphabet))
}

/// Tuples `a_η` of one length, one per string of length at most `depth`,
/// with optional realizer tuples `d_η` on any nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeFamily {
    pub host: TEStructure,
    pub depth: usize,
    pub alphabet: u8,
    pub tuple_length: usize,
    pub map: BTreeMap<TreeNode, Vec<usize>>,
    pub realizers: BTreeMap<TreeNode, Vec<usize>>,
}

impl TreeFamily {
    pub fn new(
        host: TEStructure,
        depth: usize,
        alphabet: u8,
        map: BTreeMap<TreeNode, Vec<usize>>,
        realizers: BTreeMap<TreeNode, Vec<usize>>,
    ) -> Result<Self> {
        if !(1..=10).contains(&alphabet) {
            return Err(Error::InvalidInput(format!("alphabet size {alphabet} outside 1..=10")));
        }
        let tuple_length = map.values().next().map_or(0, Vec::len);
        for n in TreeNode::all_to_depth(depth, alphabet) {
            if !map.contains_key(&n) {
                return Err(Error::InvalidInput(format!("node {n} has no tuple")));
            }
        }
        for (n, t) in &map {
            if n.len() > depth || n.0.iter().any(|&c| c >= alphabet) {
                return Err(Error::InvalidInput(format!("node {n} lies outside the tree of depth {depth}")));
            }
            if t.len() != tuple_length {
                return Err(Error::InvalidInput(format!("tuple at {n} has length {} not {tuple_length}", t.len())));
            }
        }
        let realizer_len = realizers.values().next().map(Vec::len);
        for (n, t) in map.iter().chain(&realizers) {
            if let Some(x) = t.iter().find(|&&x| x >= host.size()) {
                return Err(Error::CarrierMembership(format!("element {x} at node {n} with host size {}", host.size())));
            }
        }
        if let Some((n, _)) = realizers.iter().find(|(_, t)| Some(t.len()) != realizer_len) {
            return Err(Error::InvalidInput(format!("realizer at {n} differs in length")));
        }
        Ok(TreeFamily { host, depth, alphabet, tuple_length, map, realizers })
    }

    pub fn nodes(&self) -> Vec<TreeNode> {
        self.map.keys().cloned().collect()
    }

    pub fn tuple(&self, n: &TreeNode) -> &[usize] {
        &self.map[n]
    }

    /// `a_{η_0} ... a_{η_{d-1}}` concatenated.
    pub fn tuple_of(&self, eta: &[TreeNode]) -> Vec<usize> {
        eta.iter().flat_map(|n| self.map[n].iter().copied()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(s: &str) -> TreeNode {
        s.parse().unwrap()
    }

    fn set(xs: &[&str]) -> BTreeSet<TreeNode> {
        xs.iter().map(|s| n(s)).collect()
    }

    #[test]
    fn closure_adds_meets() {
        assert_eq!(cap_closure(&set(&["00", "01"])), set(&["00", "01", "0"]));
        assert_eq!(cap_closure(&set(&["0", "00", "01"])), set(&["0", "00", "01"]));
        assert_eq!(cap_closure(&set(&["000", "010", "1"])), set(&["000", "010", "1", "0", "<>"]));
    }

    #[test]
    fn iso_examples() {
        let t = |xs: &[&str]| xs.iter().map(|s| n(s)).collect::<Vec<_>>();
        assert!(tree_iso(&t(&["0", "00", "01"]), &t(&["1", "10", "11"])).unwrap());
        // Both conditions only ask for prefixes, so a gap in length is invisible.
        assert!(tree_iso(&t(&["<>", "0"]), &t(&["<>", "00"])).unwrap());
        assert!(!tree_iso(&t(&["<>", "0"]), &t(&["<>", "1"])).unwrap());
        assert!(tree_iso(&t(&["0", "1", "<>"]), &t(&["0", "1", "<>"])).unwrap());
        assert!(matches!(tree_iso(&t(&["00", "01"]), &t(&["00", "01"])), Err(Error::Precondition(_))));
    }

    #[test]
    fn iso_is_an_equivalence_at_depth_three() {
        let nodes = TreeNode::all_to_depth(3, 2);
        let mut pairs = vec![];
        for a in &nodes {
            for b in &nodes {
                let t = vec![a.clone(), b.clone()];
                if is_cap_closed(&t) {
                    pairs.push(t);
                }
            }
        }
        let iso = |x: &Vec<TreeNode>, y: &Vec<TreeNode>| tree_iso(x, y).unwrap();
        for x in &pairs {
            assert!(iso(x, x));
            for y in &pairs {
                assert_eq!(iso(x, y), iso(y, x));
                if iso(x, y) {
                    for z in pairs.iter().step_by(3) {
                        assert_eq!(iso(y, z), iso(x, z));
                    }
                }
            }
        }
    }

    fn node_strategy() -> impl Strategy<Value = TreeNode> {
        proptest::collection::vec(0u8..2, 0..5).prop_map(TreeNode)
    }

    proptest! {
        #[test]
        fn closure_is_idempotent_and_minimal(nodes in proptest::collection::btree_set(node_strategy(), 1..6)) {
            let c = cap_closure(&nodes);
            prop_assert!(is_cap_closed(&c));
            prop_assert_eq!(cap_closure(&c), c.clone());
            // Every added node is a meet of inputs, so no smaller closed set works.
            for x in c.difference(&nodes) {
                prop_assert!(nodes.iter().any(|a| nodes.iter().any(|b| &a.meet(b) == x)));
            }
        }
    }

    #[test]
    fn family_must_cover_the_tree() {
        let host = TEStructure::discrete(2, 1);
        let mut map = BTreeMap::new();
        map.insert(TreeNode::root(), vec![0]);
        map.insert(n("0"), vec![1]);
        assert!(TreeFamily::new(host.clone(), 1, 2, map.clone(), BTreeMap::new()).is_err());
        map.insert(n("1"), vec![1]);
        assert!(TreeFamily::new(host, 1, 2, map, BTreeMap::new()).is_ok());
    }
}
