//! The `.te` format.
//!
//! ```text
//! te <name>
//! size <n>
//! maxarity <k>
//! class E<i> (<a>,<b>,...) (<a>,<b>,...) ...
//! end
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{encode, has_repetition, TEStructure};
use crate::error::{Error, Result};
use crate::report::{CheckReport, Counterexample};
use crate::structure::fms::significant_lines;

/// A `.te` block as written, before any partition checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TeListing {
    pub name: String,
    pub size: usize,
    pub maxarity: usize,
    /// (arity, tuples) per `class` line.
    pub classes: Vec<(usize, Vec<Vec<usize>>)>,
    /// Lines this format does not know, kept for extended formats.
    pub extras: Vec<(usize, String)>,
}

impl TeListing {
    pub fn from_structure(s: &TEStructure) -> TeListing {
        let mut classes = vec![];
        for n in 1..=s.maxarity() {
            for c in s.classes(n) {
                if c.len() > 1 {
                    classes.push((n, c));
                }
            }
        }
        TeListing {
            name: s.name().to_string(),
            size: s.size(),
            maxarity: s.maxarity(),
            classes,
            extras: vec![],
        }
    }

    pub fn to_structure(&self) -> Result<TEStructure> {
        Ok(TEStructure::from_classes(self.size, self.maxarity, &self.classes)?.with_name(self.name.clone()))
    }
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        message: message.into(),
    }
}

/// Parses `(a,b) (c,d) ...`.
pub(crate) fn parse_tuples(text: &str, line: usize) -> Result<Vec<Vec<usize>>> {
    let mut out = vec![];
    let mut rest = text.trim();
    while !rest.is_empty() {
        let inner = rest
            .strip_prefix('(')
            .ok_or_else(|| syntax(line, format!("expected `(` at `{rest}`")))?;
        let close = inner.find(')').ok_or_else(|| syntax(line, "unclosed `(`"))?;
        let body = inner[..close].trim();
        let t = if body.is_empty() {
            vec![]
        } else {
            body.split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| syntax(line, format!("bad element `{}`", x.trim())))
                })
                .collect::<Result<Vec<usize>>>()?
        };
        out.push(t);
        rest = inner[close + 1..].trim_start();
    }
    Ok(out)
}

pub(crate) fn tuple_text(t: &[usize]) -> String {
    let parts: Vec<String> = t.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

pub fn parse_te_listing(text: &str) -> Result<TeListing> {
    let lines = significant_lines(text);
    let (listing, rest) = parse_te_block(&lines)?;
    if let Some((n, _)) = rest.first() {
        return Err(syntax(*n, "trailing content after `end`"));
    }
    Ok(listing)
}

pub(crate) fn parse_te_block<'a>(lines: &'a [(usize, &'a str)]) -> Result<(TeListing, &'a [(usize, &'a str)])> {
    let Some(&(first_no, first)) = lines.first() else {
        return Err(syntax(0, "empty input"));
    };
    let name = first
        .strip_prefix("te ")
        .map(str::trim)
        .filter(|n| !n.is_empty())
        .ok_or_else(|| syntax(first_no, "expected `te <name>`"))?;
    let end = lines
        .iter()
        .position(|(_, l)| *l == "end")
        .ok_or_else(|| syntax(first_no, "missing `end`"))?;
    let mut size = None;
    let mut maxarity = None;
    let mut classes = vec![];
    let mut extras = vec![];
    for &(no, line) in &lines[1..end] {
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let number = |what: &str| -> Result<usize> {
            rest.trim()
                .parse()
                .map_err(|_| syntax(no, format!("expected `{what} <count>`")))
        };
        match head {
            "size" => size = Some(number("size")?),
            "maxarity" => maxarity = Some(number("maxarity")?),
            "class" => {
                let rest = rest.trim_start();
                let (rel, tuples) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                let n: usize = rel
                    .strip_prefix('E')
                    .and_then(|d| d.parse().ok())
                    .ok_or_else(|| syntax(no, format!("expected `E<i>`, got `{rel}`")))?;
                let ts = parse_tuples(tuples, no)?;
                if let Some(t) = ts.iter().find(|t| has_repetition(t)) {
                    return Err(syntax(
                        no,
                        format!("tuple {} has a repeated entry", tuple_text(t)),
                    ));
                }
                classes.push((n, ts));
            }
            _ => extras.push((no, line.to_string())),
        }
    }
    let size = size.ok_or_else(|| syntax(first_no, "missing `size`"))?;
    let maxarity = maxarity.ok_or_else(|| syntax(first_no, "missing `maxarity`"))?;
    Ok((
        TeListing {
            name: name.to_string(),
            size,
            maxarity,
            classes,
            extras,
        },
        &lines[end + 1..],
    ))
}

/// Parses and validates a plain `.te` file.
pub fn parse_te(text: &str) -> Result<TEStructure> {
    let listing = parse_te_listing(text)?;
    if let Some((no, l)) = listing.extras.first() {
        return Err(syntax(*no, format!("unknown line `{l}`")));
    }
    let report = validate(&listing);
    if !report.passed() {
        return Err(Error::InvalidInput(report.details.join("; ")));
    }
    listing.to_structure()
}

pub fn print_te(s: &TEStructure) -> String {
    print_listing(&TeListing::from_structure(s))
}

pub fn print_listing(l: &TeListing) -> String {
    let mut out = format!("te {}\nsize {}\nmaxarity {}\n", l.name, l.size, l.maxarity);
    for (n, ts) in &l.classes {
        let parts: Vec<String> = ts.iter().map(|t| tuple_text(t)).collect();
        let _ = writeln!(out, "class E{n} {}", parts.join(" "));
    }
    for (_, e) in &l.extras {
        let _ = writeln!(out, "{e}");
    }
    out.push_str("end\n");
    out
}

/// Checks that the listed classes form partitions of repetition-free tuples.
pub fn validate(l: &TeListing) -> CheckReport {
    let mut owner: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut checked = 0u64;
    let fail = |msg: String, checked: u64| {
        CheckReport::fail(Counterexample::Witness(msg.clone()), checked).with_detail(msg)
    };
    for (ci, (n, ts)) in l.classes.iter().enumerate() {
        if *n == 0 || *n > l.maxarity {
            return fail(format!("class {ci}: E{n} outside arities 1..={}", l.maxarity), checked);
        }
        if ts.is_empty() {
            return fail(format!("class {ci}: E{n} class is empty"), checked);
        }
        for t in ts {
            checked += 1;
            if t.len() != *n {
                return fail(format!("class {ci}: tuple {} is not an {n}-tuple", tuple_text(t)), checked);
            }
            if let Some(x) = t.iter().find(|&&x| x >= l.size) {
                return fail(
                    format!("class {ci}: tuple {} mentions {x} outside size {}", tuple_text(t), l.size),
                    checked,
                );
            }
            if has_repetition(t) {
                return fail(
                    format!("class {ci}: repetition tuple {} in an explicit E{n} class", tuple_text(t)),
                    checked,
                );
            }
            if let Some(prev) = owner.insert((*n, encode(t, l.size)), ci) {
                let msg = if prev == ci {
                    format!("class {ci}: tuple {} listed twice", tuple_text(t))
                } else {
                    format!("not a partition: tuple {} in classes {prev} and {ci}", tuple_text(t))
                };
                return fail(msg, checked);
            }
        }
    }
    CheckReport::pass(checked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Verdict;

    fn listing(size: usize, k: usize, classes: Vec<(usize, Vec<Vec<usize>>)>) -> TeListing {
        TeListing {
            name: "t".into(),
            size,
            maxarity: k,
            classes,
            extras: vec![],
        }
    }

    #[test]
    fn two_singleton_classes_pass() {
        let l = listing(2, 2, vec![(2, vec![vec![0, 1]]), (2, vec![vec![1, 0]])]);
        assert_eq!(validate(&l).verdict, Verdict::Pass);
    }

    #[test]
    fn repetition_tuple_fails() {
        let r = validate(&listing(2, 2, vec![(2, vec![vec![0, 0]])]));
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.details[0].contains("repetition tuple (0,0)"));
    }

    #[test]
    fn overlapping_classes_fail() {
        let l = listing(2, 2, vec![(2, vec![vec![0, 1]]), (2, vec![vec![0, 1], vec![1, 0]])]);
        let r = validate(&l);
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.details[0].contains("not a partition"));
    }

    #[test]
    fn repeated_entry_is_a_parse_error() {
        let e = parse_te("te x\nsize 2\nmaxarity 2\nclass E2 (0,0)\nend\n").unwrap_err();
        assert!(matches!(e, Error::Syntax { line: 4, .. }), "{e:?}");
    }

    #[test]
    fn print_parse_round_trip() {
        let text = "te x\nsize 3\nmaxarity 2\nclass E1 (0) (2)\nclass E2 (0,1) (1,2) (2,0)\nend\n";
        let s = parse_te(text).unwrap();
        assert_eq!(print_te(&s), text);
        assert_eq!(parse_te(&print_te(&s)).unwrap(), s);
    }
}
