//! Structure induced on the carried sorts by the base theory.
//!
//! A sort-language formula has variables of sorts `S1, S2, ...` and equality
//! only. Its pullback replaces a variable of a sort with arity `n` by `n`
//! distinct base variables and equality by `E_n`. After elimination, each
//! equality pattern of the free sort variables must force the result one way,
//! which makes it equivalent to a pure equality formula.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::InterpretedStructure;
use crate::error::{Error, Result};
use crate::logic::{eliminate_quantifiers, is_valid, Formula, Term};
use crate::structure::cartesian;
use crate::te::class::rgs;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedBudget {
    /// Formulas with more quantifiers are left inconclusive.
    pub max_quantifiers: usize,
    /// Largest number of equality patterns of the free variables examined.
    pub max_patterns: usize,
}

impl Default for InducedBudget {
    fn default() -> Self {
        InducedBudget { max_quantifiers: 2, max_patterns: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InducedStatus {
    /// Equivalent to this quantifier-free sort-language formula.
    EqualityForm(Formula),
    /// Some equality pattern leaves the value open; the pattern is named.
    NotEqualityForm(String),
    Inconclusive(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedEntry {
    pub formula: Formula,
    /// Free variables and their sorts, numbered from 1.
    pub free: BTreeMap<String, usize>,
    pub eliminated: Option<Formula>,
    pub status: InducedStatus,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedReport {
    pub entries: Vec<InducedEntry>,
    /// Set when the triviality claim does not apply.
    pub declined: Option<String>,
}

impl InducedReport {
    pub fn all_trivial(&self) -> bool {
        self.declined.is_none() && self.entries.iter().all(|e| matches!(e.status, InducedStatus::EqualityForm(_)))
    }
}

fn components(v: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{v}.{i}")).collect()
}

fn distinct(xs: &[String]) -> Formula {
    let mut parts = vec![];
    for j in 0..xs.len() {
        for i in 0..j {
            parts.push(Formula::var_eq(&xs[i], &xs[j]).not());
        }
    }
    Formula::conj(parts)
}

fn nest(quantifier: fn(&str, Formula) -> Formula, vars: &[String], body: Formula) -> Formula {
    vars.iter().rev().fold(body, |acc, v| quantifier(v, acc))
}

/// The base formula of a sort-language formula, and the hypothesis that
/// its free blocks are repetition-free.
pub fn pullback(f: &Formula, free: &BTreeMap<String, usize>, arities: &[usize]) -> Result<(Formula, Formula)> {
    let arity = |s: usize| -> Result<usize> {
        if s == 0 || s > arities.len() {
            return Err(Error::SortMismatch(format!("no sort S{s} among {} sorts", arities.len())));
        }
        Ok(arities[s - 1])
    };
    fn go(
        f: &Formula,
        env: &mut Vec<(String, usize)>,
        free: &BTreeMap<String, usize>,
        arity: &dyn Fn(usize) -> Result<usize>,
    ) -> Result<Formula> {
        let sort = |v: &str, env: &Vec<(String, usize)>| -> Result<usize> {
            env.iter()
                .rev()
                .find(|(n, _)| n == v)
                .map(|p| p.1)
                .or_else(|| free.get(v).copied())
                .filter(|&s| s > 0)
                .ok_or_else(|| Error::SortMismatch(format!("`{v}` has no sort S1, S2, ...")))
        };
        Ok(match f {
            Formula::True | Formula::False => f.clone(),
            Formula::Eq(Term::Var(a), Term::Var(b)) => {
                let (sa, sb) = (sort(a, env)?, sort(b, env)?);
                if sa != sb {
                    return Err(Error::SortMismatch(format!("{a} = {b} across sorts S{sa} and S{sb}")));
                }
                let n = arity(sa)?;
                Formula::E(components(a, n), components(b, n))
            }
            Formula::Eq(..) | Formula::E(..) => {
                return Err(Error::UnsupportedShape(format!("`{f}` is not in the sort language")));
            }
            Formula::Not(a) => go(a, env, free, arity)?.not(),
            Formula::And(a, b) => go(a, env, free, arity)?.and(go(b, env, free, arity)?),
            Formula::Or(a, b) => go(a, env, free, arity)?.or(go(b, env, free, arity)?),
            Formula::Implies(a, b) => go(a, env, free, arity)?.implies(go(b, env, free, arity)?),
            Formula::Exists(v, s, a) | Formula::Forall(v, s, a) => {
                let xs = components(v, arity(*s)?);
                env.push((v.clone(), *s));
                let body = go(a, env, free, arity);
                env.pop();
                let body = body?;
                if matches!(f, Formula::Exists(..)) {
                    nest(Formula::exists, &xs, distinct(&xs).and(body))
                } else {
                    nest(Formula::forall, &xs, distinct(&xs).implies(body))
                }
            }
        })
    }
    let body = go(f, &mut vec![], free, &arity)?;
    let mut hyp = vec![];
    for (v, &s) in free {
        if f.free_vars().contains(v) {
            hyp.push(distinct(&components(v, arity(s)?)));
        }
    }
    Ok((body, Formula::conj(hyp)))
}

fn examine(f: &Formula, free: &BTreeMap<String, usize>, arities: &[usize], k: usize, budget: &InducedBudget) -> Result<InducedEntry> {
    let mut entry = InducedEntry { formula: f.clone(), free: free.clone(), eliminated: None, status: InducedStatus::Inconclusive(String::new()) };
    let quantifiers = count_quantifiers(f);
    if quantifiers > budget.max_quantifiers {
        entry.status = InducedStatus::Inconclusive(format!("{quantifiers} quantifiers over the budget of {}", budget.max_quantifiers));
        return Ok(entry);
    }
    let (body, hyp) = pullback(f, free, arities)?;
    let q = eliminate_quantifiers(&body, k)?;
    entry.eliminated = Some(q.clone());
    let fv = f
        .free_vars()
        .into_iter()
        .map(|v| free.get(&v).map(|&s| (v.clone(), s)).ok_or_else(|| Error::SortMismatch(format!("`{v}` has no sort"))))
        .collect::<Result<Vec<_>>>()?;
    let by_sort: BTreeMap<usize, Vec<&String>> = fv.iter().fold(BTreeMap::new(), |mut m, (v, s)| {
        m.entry(*s).or_default().push(v);
        m
    });
    let per_sort: Vec<Vec<Vec<u64>>> = by_sort.values().map(|vs| rgs(vs.len())).collect();
    let total: usize = per_sort.iter().map(Vec::len).product();
    if total > budget.max_patterns {
        entry.status = InducedStatus::Inconclusive(format!("{total} equality patterns over the budget of {}", budget.max_patterns));
        return Ok(entry);
    }
    let mut theta = vec![];
    for choice in cartesian(&per_sort) {
        let mut sort_lits = vec![];
        let mut base_lits = vec![];
        for ((s, vs), pattern) in by_sort.iter().zip(&choice) {
            let n = arities[s - 1];
            for j in 0..vs.len() {
                for i in 0..j {
                    let eq = pattern[i] == pattern[j];
                    let (a, b) = (Formula::var_eq(vs[i], vs[j]), Formula::E(components(vs[i], n), components(vs[j], n)));
                    sort_lits.push(if eq { a } else { a.not() });
                    base_lits.push(if eq { b } else { b.not() });
                }
            }
        }
        let given = hyp.clone().and(Formula::conj(base_lits));
        let forced_true = is_valid(&given.clone().implies(q.clone()), k)?;
        let forced_false = is_valid(&given.clone().implies(q.clone().not()), k)?;
        match (forced_true, forced_false) {
            (true, true) => {}
            (true, false) => theta.push(Formula::conj(sort_lits)),
            (false, false) => {
                entry.status = InducedStatus::NotEqualityForm(format!("{}", Formula::conj(sort_lits)));
                return Ok(entry);
            }
            (false, true) => {}
        }
    }
    let theta = if theta.len() == total { Formula::True } else { Formula::disj(theta) };
    let (pb_theta, _) = pullback(&theta, free, arities)?;
    if !is_valid(&hyp.implies(q.clone().implies(pb_theta.clone()).and(pb_theta.implies(q))), k)? {
        return Err(Error::InternalConsistency(format!("equality form {theta} of {f} does not check")));
    }
    entry.status = InducedStatus::EqualityForm(theta);
    Ok(entry)
}

fn count_quantifiers(f: &Formula) -> usize {
    match f {
        Formula::Not(a) => count_quantifiers(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => count_quantifiers(a) + count_quantifiers(b),
        Formula::Exists(_, _, a) | Formula::Forall(_, _, a) => 1 + count_quantifiers(a),
        _ => 0,
    }
}

/// Examines each sort-language formula. Declines when some lifted
/// relation is nonempty, since then the carried sorts have structure.
pub fn induced_structure(
    n: &InterpretedStructure,
    formulas: &[(Formula, BTreeMap<String, usize>)],
    budget: &InducedBudget,
) -> Result<InducedReport> {
    n.validate()?;
    if let Some((r, _)) = n.lifted.iter().enumerate().find(|(_, l)| !l.is_empty()) {
        return Ok(InducedReport {
            entries: vec![],
            declined: Some(format!("lifted relation {} is present; the carried sorts are not pure", n.signature.relations()[r].name)),
        });
    }
    let k = n.base.maxarity();
    let entries = formulas
        .iter()
        .map(|(f, free)| examine(f, free, &n.sort_arities, k, budget))
        .collect::<Result<Vec<_>>>()?;
    Ok(InducedReport { entries, declined: None })
}

/// Random sort-language formulas over free `a`, `b` of random sorts.
pub fn sort_formula_pool(sorts: usize, max_quantifiers: usize, count: usize, seed: u64) -> Vec<(Formula, BTreeMap<String, usize>)> {
    fn gen(rng: &mut ChaCha8Rng, scope: &mut Vec<(String, usize)>, sorts: usize, left: &mut usize, depth: usize) -> Formula {
        let roll = rng.gen_range(0..10);
        if depth == 0 || roll < 3 {
            let (v, s) = scope[rng.gen_range(0..scope.len())].clone();
            let mates: Vec<&String> = scope.iter().filter(|(_, t)| *t == s).map(|(w, _)| w).collect();
            let w = mates[rng.gen_range(0..mates.len())].clone();
            return Formula::var_eq(&v, &w);
        }
        match roll {
            3 => gen(rng, scope, sorts, left, depth - 1).not(),
            4 | 5 => gen(rng, scope, sorts, left, depth - 1).and(gen(rng, scope, sorts, left, depth - 1)),
            6 | 7 => gen(rng, scope, sorts, left, depth - 1).or(gen(rng, scope, sorts, left, depth - 1)),
            _ if *left == 0 => gen(rng, scope, sorts, left, depth - 1).not(),
            _ => {
                *left -= 1;
                let v = format!("z{}", scope.len());
                let s = rng.gen_range(1..=sorts);
                scope.push((v.clone(), s));
                let body = Box::new(gen(rng, scope, sorts, left, depth - 1));
                scope.pop();
                if roll == 8 {
                    Formula::Exists(v, s, body)
                } else {
                    Formula::Forall(v, s, body)
                }
            }
        }
    }
    let mut rng = crate::rng(seed);
    let mut out = vec![];
    if sorts == 0 {
        return out;
    }
    for _ in 0..count {
        let free: BTreeMap<String, usize> = [("a".to_string(), rng.gen_range(1..=sorts)), ("b".to_string(), rng.gen_range(1..=sorts))].into();
        let mut scope: Vec<(String, usize)> = free.iter().map(|(v, &s)| (v.clone(), s)).collect();
        let mut left = max_quantifiers;
        let f = gen(&mut rng, &mut scope, sorts, &mut left, 4);
        out.push((f, free));
    }
    out
}
