//! Check verdicts and replayable counterexamples.

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::structure::fms::significant_lines;
use crate::structure::{Elem, Embedding};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Counterexample {
    /// A member with a seed whose generated substructure is not a member.
    Hp { member: String, seed: Vec<Elem> },
    /// Two members with no joint embedding found.
    Jep { left: String, right: String },
    /// A span with no amalgam found.
    Ap {
        base: String,
        left: String,
        right: String,
        to_left: Embedding,
        to_right: Embedding,
    },
    /// A one-step extension of the substructure generated by `seed` that is
    /// not realized in `host` over it.
    Extension {
        host: String,
        seed: Vec<Elem>,
        base: String,
        extension: String,
        inclusion: Embedding,
    },
    /// A partial isomorphism `from -> to` that cannot be extended to `stuck`
    /// (forth when `forth`, else back).
    PartialIso {
        host: String,
        from: Vec<Elem>,
        to: Vec<Elem>,
        stuck: Elem,
        forth: bool,
    },
    /// Free-form witness for checks whose data is not a structure.
    Witness(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub counterexample: Option<Counterexample>,
    pub budget_used: u64,
    pub details: Vec<String>,
}

impl CheckReport {
    pub fn pass(budget_used: u64) -> Self {
        CheckReport {
            verdict: Verdict::Pass,
            counterexample: None,
            budget_used,
            details: vec![],
        }
    }

    pub fn fail(cex: Counterexample, budget_used: u64) -> Self {
        CheckReport {
            verdict: Verdict::Fail,
            counterexample: Some(cex),
            budget_used,
            details: vec![],
        }
    }

    pub fn inconclusive(budget_used: u64, why: impl Into<String>) -> Self {
        CheckReport {
            verdict: Verdict::Inconclusive,
            counterexample: None,
            budget_used,
            details: vec![why.into()],
        }
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.details.push(d.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("verdict {}\nbudget {}\n", self.verdict, self.budget_used);
        for d in &self.details {
            let _ = writeln!(out, "detail {d}");
        }
        if let Some(c) = &self.counterexample {
            let _ = writeln!(out, "counterexample {}", c.kind());
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "verdict": self.verdict,
            "budget_used": self.budget_used,
            "details": self.details,
            "counterexample": self.counterexample.as_ref().map(|c| c.to_text()),
        })
    }
}

fn elems_text(es: &[Elem]) -> String {
    es.iter()
        .map(|e| format!("{}/{}", e.sort, e.index))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_elems(toks: &[&str], line: usize) -> Result<Vec<Elem>> {
    toks.iter()
        .map(|t| {
            let bad = || Error::Syntax { line, message: format!("expected <sort>/<index>, got `{t}`") };
            let (s, i) = t.split_once('/').ok_or_else(bad)?;
            Ok(Elem::new(s.parse().map_err(|_| bad())?, i.parse().map_err(|_| bad())?))
        })
        .collect()
}

fn embedding_text(e: &Embedding) -> String {
    e.map()
        .iter()
        .map(|row| row.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join(" | ")
}

fn parse_embedding(text: &str, line: usize) -> Result<Embedding> {
    let rows = text
        .split('|')
        .map(|row| {
            row.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse().map_err(|_| Error::Syntax {
                        line,
                        message: format!("bad embedding entry `{t}`"),
                    })
                })
                .collect::<Result<Vec<usize>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Embedding::from_map(rows))
}

fn push_block(out: &mut String, block: &str) {
    out.push_str(block);
    if !block.ends_with('\n') {
        out.push('\n');
    }
}

/// Splits member blocks (`structure ...`/`te ...` through `end`).
fn split_blocks(lines: &[(usize, &str)]) -> Result<Vec<String>> {
    let mut blocks = vec![];
    let mut cur: Option<String> = None;
    for &(no, l) in lines {
        match cur.as_mut() {
            None => {
                if !(l.starts_with("structure") || l.starts_with("te ")) {
                    return Err(Error::Syntax { line: no, message: format!("unexpected `{l}`") });
                }
                cur = Some(format!("{l}\n"));
            }
            Some(b) => {
                b.push_str(l);
                b.push('\n');
                if l == "end" {
                    blocks.push(cur.take().unwrap());
                }
            }
        }
    }
    if cur.is_some() {
        return Err(Error::Syntax { line: lines.last().map_or(0, |l| l.0), message: "missing `end`".into() });
    }
    Ok(blocks)
}

impl Counterexample {
    pub fn kind(&self) -> &'static str {
        match self {
            Counterexample::Hp { .. } => "hp",
            Counterexample::Jep { .. } => "jep",
            Counterexample::Ap { .. } => "ap",
            Counterexample::Extension { .. } => "extension",
            Counterexample::PartialIso { .. } => "partial-iso",
            Counterexample::Witness(_) => "witness",
        }
    }

    /// Text form: a header line, key lines, then member blocks.
    pub fn to_text(&self) -> String {
        let mut out = format!("counterexample {}\n", self.kind());
        match self {
            Counterexample::Hp { member, seed } => {
                let _ = writeln!(out, "seed {}", elems_text(seed));
                push_block(&mut out, member);
            }
            Counterexample::Jep { left, right } => {
                push_block(&mut out, left);
                push_block(&mut out, right);
            }
            Counterexample::Ap { base, left, right, to_left, to_right } => {
                let _ = writeln!(out, "to-left {}", embedding_text(to_left));
                let _ = writeln!(out, "to-right {}", embedding_text(to_right));
                push_block(&mut out, base);
                push_block(&mut out, left);
                push_block(&mut out, right);
            }
            Counterexample::Extension { host, seed, base, extension, inclusion } => {
                let _ = writeln!(out, "seed {}", elems_text(seed));
                let _ = writeln!(out, "inclusion {}", embedding_text(inclusion));
                push_block(&mut out, host);
                push_block(&mut out, base);
                push_block(&mut out, extension);
            }
            Counterexample::PartialIso { host, from, to, stuck, forth } => {
                let _ = writeln!(out, "from {}", elems_text(from));
                let _ = writeln!(out, "to {}", elems_text(to));
                let dir = if *forth { "forth" } else { "back" };
                let _ = writeln!(out, "stuck {dir} {}", elems_text(&[*stuck]));
                push_block(&mut out, host);
            }
            Counterexample::Witness(w) => {
                for l in w.lines() {
                    let _ = writeln!(out, "| {l}");
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        // Witness lines may contain '#', so they are read raw.
        let raw: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let Some(&(no, head)) = raw.first() else {
            return Err(Error::Syntax { line: 0, message: "empty counterexample".into() });
        };
        let kind = head
            .strip_prefix("counterexample ")
            .ok_or_else(|| Error::Syntax { line: no, message: "expected `counterexample <kind>`".into() })?
            .trim();
        if kind == "witness" {
            let body: Vec<&str> = raw[1..]
                .iter()
                .map(|(_, l)| l.strip_prefix("| ").unwrap_or(l.strip_prefix('|').unwrap_or(l)))
                .collect();
            return Ok(Counterexample::Witness(body.join("\n")));
        }
        let lines = significant_lines(text);
        let mut keys: Vec<(usize, &str, &str)> = vec![];
        let mut rest = &lines[1..];
        while let Some(&(n, l)) = rest.first() {
            if l.starts_with("structure") || l.starts_with("te ") {
                break;
            }
            let (k, v) = l.split_once(' ').unwrap_or((l, ""));
            keys.push((n, k, v));
            rest = &rest[1..];
        }
        let mut blocks = split_blocks(rest)?;
        let key = |k: &str| {
            keys.iter()
                .find(|(_, name, _)| *name == k)
                .map(|(n, _, v)| (*n, *v))
                .ok_or_else(|| Error::Syntax { line: no, message: format!("missing `{k}` line") })
        };
        let need = |n: usize| {
            if blocks.len() == n {
                Ok(())
            } else {
                Err(Error::Syntax {
                    line: no,
                    message: format!("expected {n} structures, found {}", blocks.len()),
                })
            }
        };
        fn words(v: &str) -> Vec<&str> {
            v.split_whitespace().collect()
        }
        Ok(match kind {
            "hp" => {
                need(1)?;
                let (n, v) = key("seed")?;
                Counterexample::Hp { member: blocks.remove(0), seed: parse_elems(&words(v), n)? }
            }
            "jep" => {
                need(2)?;
                let right = blocks.pop().unwrap();
                let left = blocks.pop().unwrap();
                Counterexample::Jep { left, right }
            }
            "ap" => {
                need(3)?;
                let (n1, l) = key("to-left")?;
                let (n2, r) = key("to-right")?;
                let right = blocks.pop().unwrap();
                let left = blocks.pop().unwrap();
                let base = blocks.pop().unwrap();
                Counterexample::Ap {
                    base,
                    left,
                    right,
                    to_left: parse_embedding(l, n1)?,
                    to_right: parse_embedding(r, n2)?,
                }
            }
            "extension" => {
                need(3)?;
                let (n1, s) = key("seed")?;
                let (n2, inc) = key("inclusion")?;
                let extension = blocks.pop().unwrap();
                let base = blocks.pop().unwrap();
                let host = blocks.pop().unwrap();
                Counterexample::Extension {
                    host,
                    seed: parse_elems(&words(s), n1)?,
                    base,
                    extension,
                    inclusion: parse_embedding(inc, n2)?,
                }
            }
            "partial-iso" => {
                need(1)?;
                let (n1, f) = key("from")?;
                let (n2, t) = key("to")?;
                let (n3, s) = key("stuck")?;
                let sw = words(s);
                if sw.len() != 2 {
                    return Err(Error::Syntax { line: n3, message: "expected `stuck forth|back <elem>`".into() });
                }
                Counterexample::PartialIso {
                    host: blocks.remove(0),
                    from: parse_elems(&words(f), n1)?,
                    to: parse_elems(&words(t), n2)?,
                    stuck: parse_elems(&sw[1..], n3)?[0],
                    forth: sw[0] == "forth",
                }
            }
            other => {
                return Err(Error::Syntax { line: no, message: format!("unknown counterexample kind `{other}`") })
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extension_counterexample_text_round_trip() {
        let cex = Counterexample::Extension {
            host: "structure H\nsort M 2\nrel E : M M\nE M/0 M/1\nend\n".into(),
            seed: vec![Elem::new(0, 1)],
            base: "te A\nsize 1\nmaxarity 1\nend\n".into(),
            extension: "te B\nsize 2\nmaxarity 1\nclass E1 (0) (1)\nend\n".into(),
            inclusion: Embedding::from_map(vec![vec![0]]),
        };
        assert_eq!(Counterexample::parse(&cex.to_text()).unwrap(), cex);
    }

    #[test]
    fn witness_keeps_hash_characters() {
        let cex = Counterexample::Witness("tuple (0,1) # in two classes".into());
        assert_eq!(Counterexample::parse(&cex.to_text()).unwrap(), cex);
    }
}
