//! The `.te1s` format: a `.te` block followed by
//!
//! ```text
//! name S<i> <sort name>            (optional)
//! carrier S<i> [arity <n>] class (<tuple>) ...
//! lift <R> : S<i> ... S<j>
//! (<block>) ... (<block>)          one line per lifted tuple
//! ```
//!
//! Sorts are numbered from 1. The arity of a carrier defaults to the length
//! of its tuples, or to `i` when the carrier is empty.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use super::InterpretedStructure;
use crate::error::{Error, Result};
use crate::structure::fms::significant_lines;
use crate::structure::{RelationSymbol, Signature};
use crate::te::format::{parse_te_block, parse_tuples, print_te, tuple_text, validate};

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        message: message.into(),
    }
}

fn sort_index(tok: &str, line: usize) -> Result<usize> {
    tok.strip_prefix('S')
        .and_then(|d| d.parse::<usize>().ok())
        .filter(|&i| i >= 1)
        .map(|i| i - 1)
        .ok_or_else(|| syntax(line, format!("expected S<i>, got `{tok}`")))
}

pub fn parse_te1s(text: &str) -> Result<InterpretedStructure> {
    let lines = significant_lines(text);
    let (listing, rest) = parse_te_block(&lines)?;
    if let Some((no, l)) = listing.extras.first() {
        return Err(syntax(*no, format!("unknown line `{l}`")));
    }
    let report = validate(&listing);
    if !report.passed() {
        return Err(Error::InvalidInput(report.details.join("; ")));
    }
    let base = listing.to_structure()?;
    let mut names: Vec<Option<String>> = vec![];
    let mut carriers: Vec<Option<(usize, Vec<Vec<usize>>)>> = vec![];
    let mut rels: Vec<RelationSymbol> = vec![];
    let mut lifted: Vec<BTreeSet<Vec<usize>>> = vec![];
    fn grow<T: Clone>(v: &mut Vec<Option<T>>, i: usize) {
        if v.len() <= i {
            v.resize(i + 1, None);
        }
    }
    for &(no, line) in rest {
        if line.starts_with('(') {
            let Some(set) = lifted.last_mut() else {
                return Err(syntax(no, "tuple before any `lift` line"));
            };
            set.insert(parse_tuples(line, no)?.concat());
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "name" if toks.len() == 3 => {
                let i = sort_index(toks[1], no)?;
                grow(&mut names, i);
                names[i] = Some(toks[2].to_string());
            }
            "carrier" if toks.len() >= 3 => {
                let i = sort_index(toks[1], no)?;
                let mut at = 2;
                let mut arity = None;
                if toks[2] == "arity" {
                    arity = Some(toks.get(3).and_then(|t| t.parse::<usize>().ok()).ok_or_else(|| syntax(no, "expected `arity <n>`"))?);
                    at = 4;
                }
                if toks.get(at) != Some(&"class") {
                    return Err(syntax(no, "expected `carrier S<i> [arity <n>] class ...`"));
                }
                let reps = parse_tuples(&toks[at + 1..].join(" "), no)?;
                let n = arity.or_else(|| reps.first().map(Vec::len)).unwrap_or(i + 1);
                grow(&mut carriers, i);
                if carriers[i].is_some() {
                    return Err(syntax(no, format!("carrier S{} given twice", i + 1)));
                }
                carriers[i] = Some((n, reps));
            }
            "lift" if toks.len() >= 3 && toks[2] == ":" => {
                let args = toks[3..].iter().map(|t| sort_index(t, no)).collect::<Result<Vec<_>>>()?;
                rels.push(RelationSymbol { name: toks[1].to_string(), args });
                lifted.push(BTreeSet::new());
            }
            _ => return Err(syntax(no, format!("unknown line `{line}`"))),
        }
    }
    let m = carriers.len().max(names.len());
    if let Some(i) = (0..m).find(|&i| carriers.get(i).map_or(true, Option::is_none)) {
        return Err(Error::InvalidInput(format!("no carrier line for S{}", i + 1)));
    }
    let (sort_arities, carriers): (Vec<usize>, Vec<Vec<Vec<usize>>>) = carriers.into_iter().map(Option::unwrap).unzip();
    let sorts = (0..m).map(|i| names.get(i).cloned().flatten().unwrap_or_else(|| format!("S{}", i + 1))).collect();
    let signature = Signature::new(sorts, rels, vec![], vec![]).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let n = InterpretedStructure {
        name: listing.name.clone(),
        base,
        signature: Arc::new(signature),
        sort_arities,
        carriers,
        lifted,
    };
    n.validate()?;
    Ok(n)
}

pub fn print_te1s(n: &InterpretedStructure) -> String {
    let mut out = print_te(&n.base.clone().with_name(n.name.clone()));
    for (i, name) in n.signature.sorts().iter().enumerate() {
        if *name != format!("S{}", i + 1) {
            let _ = writeln!(out, "name S{} {name}", i + 1);
        }
    }
    for (i, reps) in n.carriers.iter().enumerate() {
        let implied = reps.first().map_or(i + 1, Vec::len);
        let arity = if implied == n.sort_arities[i] { String::new() } else { format!(" arity {}", n.sort_arities[i]) };
        let parts: Vec<String> = reps.iter().map(|t| tuple_text(t)).collect();
        let _ = writeln!(out, "carrier S{}{arity} class {}", i + 1, parts.join(" "));
    }
    for (r, sym) in n.signature.relations().iter().enumerate() {
        let args: Vec<String> = sym.args.iter().map(|s| format!("S{}", s + 1)).collect();
        let _ = writeln!(out, "lift {} : {}", sym.name, args.join(" "));
        for t in &n.lifted[r] {
            let blocks: Vec<String> = n.blocks(r, t).iter().map(|(_, b)| tuple_text(b)).collect();
            let _ = writeln!(out, "{}", blocks.join(" "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpret::{decode, encode, EncodeOptions};
    use crate::structure::parse_structure;

    #[test]
    fn print_parse_round_trip() {
        let x = parse_structure("structure X\nsort A 0\nsort V 2\nrel R : V V\nR V/0 V/1\nend\n").unwrap();
        let opts = EncodeOptions { arities: Some(vec![3, 1]), cap: 8 };
        let n = encode(&x, 2, &opts).unwrap();
        let text = print_te1s(&n);
        let back = parse_te1s(&text).unwrap();
        assert_eq!(back.carriers, n.carriers);
        assert_eq!(back.sort_arities, vec![3, 1]);
        assert_eq!(back.lifted, n.lifted);
        assert_eq!(decode(&back).unwrap(), decode(&n).unwrap());
    }

    #[test]
    fn missing_mate_in_a_file() {
        let text = "te N\nsize 2\nmaxarity 1\nclass E1 (0) (1)\nend\ncarrier S1 class (0)\nlift R : S1\n(0)\n";
        assert!(matches!(parse_te1s(text), Err(Error::InvalidInput(m)) if m.contains("mate")));
    }

    #[test]
    fn tuple_without_lift() {
        let text = "te N\nsize 1\nmaxarity 1\nend\ncarrier S1 class (0)\n(0)\n";
        assert!(matches!(parse_te1s(text), Err(Error::Syntax { line: 6, .. })));
    }
}
