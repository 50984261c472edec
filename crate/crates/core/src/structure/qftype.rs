use std::collections::BTreeMap;
use std::fmt;

use super::{cartesian, Elem, SortId, Structure, DEFAULT_CLOSURE_BOUND};
use crate::error::{Error, Result};

/// Canonical quantifier-free type of a tuple.
///
/// The generated substructure is named by a procedure that only looks at the
/// tuple: tuple entries first (in order of first occurrence), then constants,
/// then function images in rounds over lexicographically ordered argument
/// names. Two tuples get the same names, and hence equal diagrams, exactly when
/// their generated substructures are isomorphic via the tuple correspondence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QfType {
    /// Sort of each variable.
    pub variables: Vec<SortId>,
    /// Name of the element assigned to each variable.
    pub var_names: Vec<usize>,
    /// Sort of each generated name.
    pub name_sorts: Vec<SortId>,
    /// Per relation, the name tuples in the relation (all others are false).
    pub relations: Vec<Vec<Vec<usize>>>,
    /// Per function, the graph over names.
    pub functions: Vec<Vec<(Vec<usize>, usize)>>,
    /// Per constant, its name.
    pub constants: Vec<usize>,
}

impl QfType {
    pub fn entails_equal(&self, i: usize, j: usize) -> bool {
        self.var_names[i] == self.var_names[j]
    }

    /// Positive and negative atomic facts about the variables only (the
    /// part of the diagram visible without function terms).
    pub fn variable_facts(&self, relation_names: &[String]) -> Vec<String> {
        let mut out = vec![];
        let n = self.var_names.len();
        for i in 0..n {
            for j in i + 1..n {
                if self.variables[i] == self.variables[j] {
                    let op = if self.entails_equal(i, j) { "=" } else { "!=" };
                    out.push(format!("v{i} {op} v{j}"));
                }
            }
        }
        let first_var: BTreeMap<usize, usize> = self
            .var_names
            .iter()
            .enumerate()
            .rev()
            .map(|(v, &name)| (name, v))
            .collect();
        for (r, tuples) in self.relations.iter().enumerate() {
            for t in tuples {
                if let Some(vs) = t.iter().map(|x| first_var.get(x)).collect::<Option<Vec<_>>>() {
                    let args: Vec<String> = vs.iter().map(|v| format!("v{v}")).collect();
                    out.push(format!("{}({})", relation_names[r], args.join(",")));
                }
            }
        }
        out
    }
}

impl fmt::Display for QfType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vars{:?} names{:?}", self.var_names, self.name_sorts)?;
        for (r, ts) in self.relations.iter().enumerate() {
            write!(f, " R{r}{ts:?}")?;
        }
        for (g, ts) in self.functions.iter().enumerate() {
            write!(f, " F{g}{ts:?}")?;
        }
        Ok(())
    }
}

pub fn qf_type(m: &Structure, tuple: &[Elem]) -> Result<QfType> {
    let sig = m.signature().clone();
    let mut names: Vec<Elem> = vec![];
    let mut index: BTreeMap<Elem, usize> = BTreeMap::new();
    let mut name = |e: Elem, names: &mut Vec<Elem>| -> usize {
        *index.entry(e).or_insert_with(|| {
            names.push(e);
            names.len() - 1
        })
    };
    let mut var_names = vec![];
    for &e in tuple {
        if !m.contains(e) {
            return Err(Error::CarrierMembership(format!("{}/{}", e.sort, e.index)));
        }
        var_names.push(name(e, &mut names));
    }
    let constants: Vec<usize> = sig
        .constants()
        .iter()
        .enumerate()
        .map(|(c, sym)| name(Elem::new(sym.sort, m.constant(c)), &mut names))
        .collect();
    let mut functions: Vec<Vec<(Vec<usize>, usize)>> = vec![vec![]; sig.functions().len()];
    let mut done: Vec<std::collections::BTreeSet<Vec<usize>>> =
        vec![Default::default(); sig.functions().len()];
    loop {
        let before = names.len();
        for (f, sym) in sig.functions().iter().enumerate() {
            let pools: Vec<Vec<usize>> = sym
                .args
                .iter()
                .map(|&s| (0..before).filter(|&n| names[n].sort == s).collect())
                .collect();
            for args in cartesian(&pools) {
                if !done[f].insert(args.clone()) {
                    continue;
                }
                let concrete: Vec<usize> = args.iter().map(|&n| names[n].index).collect();
                let v = Elem::new(sym.result, m.apply(f, &concrete));
                let vn = name(v, &mut names);
                functions[f].push((args, vn));
            }
        }
        if names.len() > DEFAULT_CLOSURE_BOUND {
            return Err(Error::ClosureBound("qf type closure".into()));
        }
        if names.len() == before {
            break;
        }
    }
    for table in &mut functions {
        table.sort();
    }
    let relations = sig
        .relations()
        .iter()
        .enumerate()
        .map(|(r, sym)| {
            let pools: Vec<Vec<usize>> = sym
                .args
                .iter()
                .map(|&s| (0..names.len()).filter(|&n| names[n].sort == s).collect())
                .collect();
            cartesian(&pools)
                .into_iter()
                .filter(|t| {
                    let concrete: Vec<usize> = t.iter().map(|&n| names[n].index).collect();
                    m.holds(r, &concrete)
                })
                .collect()
        })
        .collect();
    Ok(QfType {
        variables: tuple.iter().map(|e| e.sort).collect(),
        var_names,
        name_sorts: names.iter().map(|e| e.sort).collect(),
        relations,
        functions,
        constants,
    })
}
