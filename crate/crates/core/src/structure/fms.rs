//! The line-based `.fms` structure format.
//!
//! ```text
//! structure <name>
//! sort <S> <size>
//! rel <R> : <S1> ... <Sk>
//! fun <f> : <S1> ... <Sk> -> <S0>
//! const <c> : <S> = <S>/<i>
//! <R> <S1>/<i1> ... <Sk>/<ik>
//! <f> <S1>/<i1> ... = <S0>/<j>
//! end
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use super::{ConstantSymbol, FunctionSymbol, RelationSymbol, Signature, Structure};
use crate::error::{Error, Result};

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        message: message.into(),
    }
}

/// Strips comments and blank lines, keeping 1-based line numbers.
pub(crate) fn significant_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, l)| {
            let l = l.split('#').next().unwrap_or("").trim();
            (!l.is_empty()).then_some((i + 1, l))
        })
        .collect()
}

pub fn parse_structure(text: &str) -> Result<Structure> {
    let lines = significant_lines(text);
    let (s, rest) = parse_structure_block(&lines)?;
    if let Some((n, _)) = rest.first() {
        return Err(syntax(*n, "trailing content after `end`"));
    }
    Ok(s)
}

/// Parses one `structure ... end` block, returning the remaining lines.
pub(crate) fn parse_structure_block<'a>(
    lines: &'a [(usize, &'a str)],
) -> Result<(Structure, &'a [(usize, &'a str)])> {
    let Some(&(first_no, first)) = lines.first() else {
        return Err(syntax(0, "empty input"));
    };
    let name = first
        .strip_prefix("structure")
        .map(str::trim)
        .filter(|n| !n.is_empty())
        .ok_or_else(|| syntax(first_no, "expected `structure <name>`"))?;
    let end = lines
        .iter()
        .position(|(_, l)| *l == "end")
        .ok_or_else(|| syntax(first_no, "missing `end`"))?;
    let body = &lines[1..end];

    let mut sorts: Vec<String> = vec![];
    let mut sizes: Vec<usize> = vec![];
    let mut rels = vec![];
    let mut funs = vec![];
    let mut consts: Vec<(ConstantSymbol, String, usize)> = vec![];
    let sort_of = |sorts: &[String], tok: &str, line: usize| {
        sorts
            .iter()
            .position(|s| s == tok)
            .ok_or_else(|| syntax(line, format!("unknown sort `{tok}`")))
    };
    for &(no, line) in body {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "sort" => {
                if toks.len() != 3 {
                    return Err(syntax(no, "expected `sort <S> <size>`"));
                }
                let n = toks[2]
                    .parse()
                    .map_err(|_| syntax(no, format!("bad size `{}`", toks[2])))?;
                sorts.push(toks[1].to_string());
                sizes.push(n);
            }
            "rel" => {
                if toks.len() < 3 || toks[2] != ":" {
                    return Err(syntax(no, "expected `rel <R> : <S1> ...`"));
                }
                let args = toks[3..]
                    .iter()
                    .map(|t| sort_of(&sorts, t, no))
                    .collect::<Result<_>>()?;
                rels.push(RelationSymbol { name: toks[1].into(), args });
            }
            "fun" => {
                let arrow = toks.iter().position(|t| *t == "->");
                match arrow {
                    Some(a) if toks.len() >= 4 && toks[2] == ":" && a + 2 == toks.len() => {
                        let args = toks[3..a]
                            .iter()
                            .map(|t| sort_of(&sorts, t, no))
                            .collect::<Result<_>>()?;
                        let result = sort_of(&sorts, toks[a + 1], no)?;
                        funs.push(FunctionSymbol { name: toks[1].into(), args, result });
                    }
                    _ => return Err(syntax(no, "expected `fun <f> : <S1> ... -> <S0>`")),
                }
            }
            "const" => {
                if toks.len() != 6 || toks[2] != ":" || toks[4] != "=" {
                    return Err(syntax(no, "expected `const <c> : <S> = <S>/<i>`"));
                }
                let sort = sort_of(&sorts, toks[3], no)?;
                consts.push((
                    ConstantSymbol { name: toks[1].into(), sort },
                    toks[5].to_string(),
                    no,
                ));
            }
            _ => {}
        }
    }
    let signature = Arc::new(
        Signature::new(
            sorts.clone(),
            rels,
            funs,
            consts.iter().map(|(c, _, _)| c.clone()).collect(),
        )
        .map_err(|e| syntax(first_no, e.to_string()))?,
    );
    let sig = &*signature;

    let element = |tok: &str, expected: usize, line: usize| -> Result<usize> {
        let (s, i) = tok
            .split_once('/')
            .ok_or_else(|| syntax(line, format!("expected <S>/<i>, got `{tok}`")))?;
        let sort = sort_of(&sorts, s, line)?;
        if sort != expected {
            return Err(Error::SortMismatch(format!(
                "line {line}: `{tok}` where sort {} expected",
                sorts[expected]
            )));
        }
        let i: usize = i
            .parse()
            .map_err(|_| syntax(line, format!("bad index in `{tok}`")))?;
        if i >= sizes[sort] {
            return Err(Error::CarrierMembership(format!(
                "line {line}: {tok} but sort {s} has size {}",
                sizes[sort]
            )));
        }
        Ok(i)
    };

    let mut relations: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); sig.relations().len()];
    let mut functions: Vec<BTreeMap<Vec<usize>, usize>> = vec![BTreeMap::new(); sig.functions().len()];
    for &(no, line) in body {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if matches!(toks[0], "sort" | "rel" | "fun" | "const") {
            continue;
        }
        if let Some(r) = sig.relation_id(toks[0]) {
            let sym = &sig.relations()[r];
            if toks.len() - 1 != sym.args.len() {
                return Err(Error::Arity(format!(
                    "line {no}: {} expects {} arguments",
                    sym.name,
                    sym.args.len()
                )));
            }
            let t = toks[1..]
                .iter()
                .zip(&sym.args)
                .map(|(tok, &s)| element(tok, s, no))
                .collect::<Result<Vec<_>>>()?;
            relations[r].insert(t);
        } else if let Some(f) = sig.function_id(toks[0]) {
            let sym = &sig.functions()[f];
            if toks.len() != sym.args.len() + 3 || toks[toks.len() - 2] != "=" {
                return Err(syntax(no, format!("expected `{} <args> = <value>`", sym.name)));
            }
            let args = toks[1..=sym.args.len()]
                .iter()
                .zip(&sym.args)
                .map(|(tok, &s)| element(tok, s, no))
                .collect::<Result<Vec<_>>>()?;
            let v = element(toks[toks.len() - 1], sym.result, no)?;
            if functions[f].insert(args, v).is_some() {
                return Err(Error::Totality(format!("line {no}: {} defined twice", sym.name)));
            }
        } else {
            return Err(syntax(no, format!("unknown symbol `{}`", toks[0])));
        }
    }
    let constants = consts
        .iter()
        .map(|(c, tok, no)| element(tok, c.sort, *no))
        .collect::<Result<Vec<_>>>()?;
    let s = Structure::new(name, signature.clone(), sizes, relations, functions, constants)?;
    Ok((s, &lines[end + 1..]))
}

pub fn print_structure(s: &Structure) -> String {
    let sig = s.signature();
    let sorts = sig.sorts();
    let el = |sort: usize, i: usize| format!("{}/{}", sorts[sort], i);
    let mut out = String::new();
    let _ = writeln!(out, "structure {}", s.name());
    for (i, name) in sorts.iter().enumerate() {
        let _ = writeln!(out, "sort {} {}", name, s.carrier_size(i));
    }
    for r in sig.relations() {
        let args: Vec<&str> = r.args.iter().map(|&a| sorts[a].as_str()).collect();
        let _ = writeln!(out, "rel {} : {}", r.name, args.join(" "));
    }
    for f in sig.functions() {
        let args: Vec<&str> = f.args.iter().map(|&a| sorts[a].as_str()).collect();
        let _ = writeln!(out, "fun {} : {} -> {}", f.name, args.join(" "), sorts[f.result]);
    }
    for (c, sym) in sig.constants().iter().enumerate() {
        let _ = writeln!(
            out,
            "const {} : {} = {}",
            sym.name,
            sorts[sym.sort],
            el(sym.sort, s.constant(c))
        );
    }
    for (r, sym) in sig.relations().iter().enumerate() {
        for t in s.relation(r) {
            let args: Vec<String> = t.iter().zip(&sym.args).map(|(&i, &a)| el(a, i)).collect();
            let _ = writeln!(out, "{} {}", sym.name, args.join(" "));
        }
    }
    for (f, sym) in sig.functions().iter().enumerate() {
        for (args, &v) in s.function(f) {
            let a: Vec<String> = args.iter().zip(&sym.args).map(|(&i, &x)| el(x, i)).collect();
            let _ = writeln!(out, "{} {} = {}", sym.name, a.join(" "), el(sym.result, v));
        }
    }
    out.push_str("end\n");
    // Nullary relation declarations print as `rel R : ` with a trailing space.
    out.lines()
        .map(str::trim_end)
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_minimal_example() {
        let s = parse_structure("structure X\nsort P1 2\nrel R : P1\nR P1/0\nend\n").unwrap();
        assert_eq!(s.carriers(), &[2]);
        assert_eq!(s.relation(0).iter().collect::<Vec<_>>(), vec![&vec![0]]);
    }

    #[test]
    fn out_of_range_element() {
        let err = parse_structure("structure X\nsort P1 2\nrel R : P1\nR P1/5\nend\n").unwrap_err();
        assert!(matches!(err, Error::CarrierMembership(_)), "{err:?}");
    }

    #[test]
    fn wrong_sort_element() {
        let text = "structure X\nsort A 1\nsort B 1\nrel R : A\nR B/0\nend\n";
        assert!(matches!(parse_structure(text).unwrap_err(), Error::SortMismatch(_)));
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = "structure X\n# comment\nsort A\nend\n";
        assert_eq!(parse_structure(text).unwrap_err(), syntax(3, "expected `sort <S> <size>`"));
    }

    #[test]
    fn partial_function_rejected() {
        let text = "structure X\nsort A 2\nfun g : A -> A\ng A/0 = A/1\nend\n";
        assert!(matches!(parse_structure(text).unwrap_err(), Error::Totality(_)));
    }

    #[test]
    fn prints_and_reparses_with_functions_and_constants() {
        let text = "structure K\nsort S 2\nsort S1 3\nfun f1 : S -> S1\nconst c1 : S1 = S1/0\n\
                    f1 S/0 = S1/1\nf1 S/1 = S1/2\nend\n";
        let s = parse_structure(text).unwrap();
        let again = parse_structure(&print_structure(&s)).unwrap();
        assert_eq!(s, again);
    }
}
