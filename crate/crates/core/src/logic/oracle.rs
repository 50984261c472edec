//! Truth in the generic structure by brute force: a quantifier ranges over
//! the elements in scope and one new element, and the classes of the tuples
//! it creates range over every consistent placement. Independent of the
//! elimination procedure, and exponential.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::qe::rename_bound;
use super::{Formula, Term};
use crate::structure::cartesian;
use crate::te::class::rgs;
use crate::te::has_repetition;

type Tuple = Vec<usize>;

#[derive(Clone, Debug)]
struct Config {
    blocks: usize,
    class: HashMap<Tuple, u32>,
    next: u32,
}

fn atom_tuples<'a>(f: &'a Formula, out: &mut Vec<&'a Vec<String>>) {
    match f {
        Formula::E(x, y) => {
            out.push(x);
            out.push(y);
        }
        Formula::Not(a) | Formula::Exists(_, _, a) | Formula::Forall(_, _, a) => atom_tuples(a, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            atom_tuples(a, out);
            atom_tuples(b, out);
        }
        _ => {}
    }
}

/// Tuples over `scope` that `f` can compare: atom tuples with every
/// variable outside `scope` replaced by each variable in it.
fn relevant(f: &Formula, scope: &[String]) -> Vec<Vec<String>> {
    let mut tuples = vec![];
    atom_tuples(f, &mut tuples);
    let mut out = BTreeSet::new();
    for t in tuples {
        let pools: Vec<Vec<String>> = t
            .iter()
            .map(|v| if scope.contains(v) { vec![v.clone()] } else { scope.to_vec() })
            .collect();
        out.extend(cartesian(&pools));
    }
    out.into_iter().collect()
}

fn image(t: &[String], env: &HashMap<String, usize>) -> Tuple {
    t.iter().map(|v| env[v]).collect()
}

/// Repetition-free images of `tuples`, deduplicated, in first-seen order.
fn free_images(tuples: &[Vec<String>], env: &HashMap<String, usize>) -> Vec<Tuple> {
    let mut seen = BTreeSet::new();
    tuples
        .iter()
        .map(|t| image(t, env))
        .filter(|t| !has_repetition(t) && seen.insert(t.clone()))
        .collect()
}

/// Assigns each of `new[i..]` to a class in `cands` (per arity) or a new
/// class; `visit` returns true to stop, and so does this.
fn assign(
    cfg: &mut Config,
    new: &[Tuple],
    i: usize,
    cands: &mut BTreeMap<usize, Vec<u32>>,
    visit: &mut dyn FnMut(&Config) -> bool,
) -> bool {
    if i == new.len() {
        return visit(cfg);
    }
    let n = new[i].len();
    let options: Vec<u32> = cands.get(&n).cloned().unwrap_or_default();
    for c in options {
        cfg.class.insert(new[i].clone(), c);
        if assign(cfg, new, i + 1, cands, visit) {
            cfg.class.remove(&new[i]);
            return true;
        }
    }
    let fresh = cfg.next;
    cfg.next += 1;
    cfg.class.insert(new[i].clone(), fresh);
    cands.entry(n).or_default().push(fresh);
    let stop = assign(cfg, new, i + 1, cands, visit);
    cands.get_mut(&n).unwrap().pop();
    cfg.class.remove(&new[i]);
    cfg.next -= 1;
    stop
}

fn eval(f: &Formula, env: &mut HashMap<String, usize>, scope: &mut Vec<String>, cfg: &Config) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Eq(Term::Var(a), Term::Var(b)) => env[a] == env[b],
        Formula::Eq(..) => unreachable!("checked LE"),
        Formula::E(x, y) => {
            let (a, b) = (image(x, env), image(y, env));
            match (has_repetition(&a), has_repetition(&b)) {
                (true, true) => true,
                (false, false) => cfg.class[&a] == cfg.class[&b],
                _ => false,
            }
        }
        Formula::Not(a) => !eval(a, env, scope, cfg),
        Formula::And(a, b) => eval(a, env, scope, cfg) && eval(b, env, scope, cfg),
        Formula::Or(a, b) => eval(a, env, scope, cfg) || eval(b, env, scope, cfg),
        Formula::Implies(a, b) => !eval(a, env, scope, cfg) || eval(b, env, scope, cfg),
        Formula::Exists(v, _, body) | Formula::Forall(v, _, body) => {
            let exists = matches!(f, Formula::Exists(..));
            scope.push(v.clone());
            let needed = relevant(body, scope);
            let mut found = false;
            for b in 0..=cfg.blocks {
                let mut next = cfg.clone();
                if b == cfg.blocks {
                    next.blocks += 1;
                }
                env.insert(v.clone(), b);
                let imgs = free_images(&needed, env);
                let new: Vec<Tuple> = imgs.iter().filter(|t| !next.class.contains_key(*t)).cloned().collect();
                debug_assert!(b == cfg.blocks || new.is_empty(), "relevant tuples are closed under substitution");
                let mut cands: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
                for t in imgs.iter().filter(|t| next.class.contains_key(*t)) {
                    let c = next.class[t];
                    let e = cands.entry(t.len()).or_default();
                    if !e.contains(&c) {
                        e.push(c);
                    }
                }
                let mut env2 = env.clone();
                let mut scope2 = scope.clone();
                found = assign(&mut next, &new, 0, &mut cands, &mut |c| {
                    eval(body, &mut env2, &mut scope2, c) == exists
                });
                if found {
                    break;
                }
            }
            env.remove(v);
            scope.pop();
            if exists {
                found
            } else {
                !found
            }
        }
    }
}

/// `f` and `g` (dialect LE) agree at every configuration of their free
/// variables.
pub fn agree(f: &Formula, g: &Formula) -> bool {
    let both = rename_bound(&f.clone().and(g.clone()));
    let (f, g) = match &both {
        Formula::And(a, b) => (a.as_ref(), b.as_ref()),
        _ => unreachable!(),
    };
    let vars: Vec<String> = both.free_vars().into_iter().collect();
    let needed = relevant(&both, &vars);
    let mut ok = true;
    for pattern in rgs(vars.len()) {
        let blocks = pattern.iter().map(|&b| b as usize + 1).max().unwrap_or(0);
        let mut env: HashMap<String, usize> = vars.iter().cloned().zip(pattern.iter().map(|&b| b as usize)).collect();
        let tuples = free_images(&needed, &env);
        let mut cfg = Config { blocks, class: HashMap::new(), next: 0 };
        let mut scope = vars.clone();
        assign(&mut cfg, &tuples, 0, &mut BTreeMap::new(), &mut |c| {
            ok = eval(f, &mut env, &mut scope, c) == eval(g, &mut env, &mut scope, c);
            !ok
        });
        if !ok {
            return false;
        }
    }
    true
}
