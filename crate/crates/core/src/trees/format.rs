//! Tree families: a `.te` block followed by
//!
//! ```text
//! alphabet <k>                  (optional, default 2)
//! node <string> -> (<elem>,...)  one per node, `<>` for the root
//! realizer <string> -> (<elem>,...)
//! ```
//!
//! The depth is the length of the longest node string.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{TreeFamily, TreeNode};
use crate::error::{Error, Result};
use crate::structure::fms::significant_lines;
use crate::te::format::{parse_te_block, parse_tuples, print_te, tuple_text, validate};

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax { line, message: message.into() }
}

pub fn parse_family(text: &str) -> Result<TreeFamily> {
    let lines = significant_lines(text);
    let (listing, rest) = parse_te_block(&lines)?;
    if let Some((no, l)) = listing.extras.first() {
        return Err(syntax(*no, format!("unknown line `{l}`")));
    }
    let report = validate(&listing);
    if !report.passed() {
        return Err(Error::InvalidInput(report.details.join("; ")));
    }
    let host = listing.to_structure()?;
    let mut alphabet = 2u8;
    let mut map = BTreeMap::new();
    let mut realizers = BTreeMap::new();
    for &(no, line) in rest {
        let (head, tail) = line.split_once(' ').unwrap_or((line, ""));
        match head {
            "alphabet" => {
                alphabet = tail.trim().parse().map_err(|_| syntax(no, "expected `alphabet <k>`"))?;
            }
            "node" | "realizer" => {
                let (name, tuple) = tail.split_once("->").ok_or_else(|| syntax(no, "expected `<string> -> (...)`"))?;
                let node: TreeNode = name.trim().parse().map_err(|e: Error| syntax(no, e.to_string()))?;
                let mut ts = parse_tuples(tuple, no)?;
                if ts.len() != 1 {
                    return Err(syntax(no, "expected exactly one tuple"));
                }
                let target = if head == "node" { &mut map } else { &mut realizers };
                if target.insert(node.clone(), ts.pop().unwrap()).is_some() {
                    return Err(syntax(no, format!("{head} {node} given twice")));
                }
            }
            _ => return Err(syntax(no, format!("unknown line `{line}`"))),
        }
    }
    let depth = map.keys().map(TreeNode::len).max().unwrap_or(0);
    TreeFamily::new(host.with_name(listing.name.clone()), depth, alphabet, map, realizers)
}

pub fn print_family(f: &TreeFamily) -> String {
    let mut out = print_te(&f.host);
    if f.alphabet != 2 {
        let _ = writeln!(out, "alphabet {}", f.alphabet);
    }
    for (n, t) in &f.map {
        let _ = writeln!(out, "node {n} -> {}", tuple_text(t));
    }
    for (n, t) in &f.realizers {
        let _ = writeln!(out, "realizer {n} -> {}", tuple_text(t));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "te H\nsize 3\nmaxarity 1\nclass E1 (0) (1)\nend\nnode <> -> (2)\nnode 0 -> (0)\nnode 1 -> (1)\nrealizer 00 -> (2)\n";

    #[test]
    fn parse_and_print() {
        let f = parse_family(SMALL).unwrap();
        assert_eq!(f.depth, 1);
        assert_eq!(f.tuple(&"1".parse().unwrap()), &[1]);
        assert_eq!(f.realizers.len(), 1);
        assert_eq!(parse_family(&print_family(&f)).unwrap(), f);
    }

    #[test]
    fn missing_node_is_rejected() {
        let text = SMALL.replace("node 1 -> (1)\n", "");
        assert!(matches!(parse_family(&text), Err(Error::InvalidInput(m)) if m.contains("node 1")));
    }

    #[test]
    fn bad_arrow_is_a_syntax_error() {
        let text = SMALL.replace("node 0 -> (0)", "node 0 (0)");
        assert!(matches!(parse_family(&text), Err(Error::Syntax { line: 7, .. })));
    }
}
