use std::collections::{BTreeMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checks::empty_partial;
use super::{ClassDescriptor, Member};
use crate::error::{Error, Result};
use crate::report::{CheckReport, Counterexample};
use crate::structure::{Elem, Embedding};

#[derive(Clone, Debug)]
pub struct LimitRun<M> {
    pub structure: M,
    /// Embedding of stage `i` into stage `i + 1`.
    pub stages: Vec<Embedding>,
    /// Amalgamations performed.
    pub steps: usize,
    /// Tasks still queued when the run stopped.
    pub pending: usize,
}

impl<M> LimitRun<M> {
    pub fn drained(&self) -> bool {
        self.pending == 0
    }
}

/// Subsets of `elems` of size at most `level`, by size then lexicographically.
fn small_subsets(elems: &[Elem], level: usize) -> Vec<Vec<Elem>> {
    let mut out = vec![vec![]];
    let mut frontier: Vec<(Vec<Elem>, usize)> = vec![(vec![], 0)];
    for _ in 0..level {
        let mut next = vec![];
        for (s, start) in &frontier {
            for (i, &e) in elems.iter().enumerate().skip(*start) {
                let mut t = s.clone();
                t.push(e);
                out.push(t.clone());
                next.push((t, i + 1));
            }
        }
        frontier = next;
    }
    out
}

/// Whether `ext` embeds into `m` over `inc: A -> m`, where `ia: A -> ext`.
pub(crate) fn realized<M: Member>(a: &M, ext: &M, ia: &Embedding, m: &M, inc: &Embedding) -> Result<bool> {
    let mut partial = empty_partial(ext);
    for x in a.elements() {
        let e = ia.apply(x);
        partial[e.sort][e.index] = Some(inc.apply(x).index);
    }
    Ok(!ext.embeddings_extending(m, &partial, 1)?.is_empty())
}

type Task<M> = (Vec<Elem>, M, Embedding);

fn tasks_for<C: ClassDescriptor>(class: &C, m: &C::Member, seeds: Vec<Vec<Elem>>) -> Result<Vec<Task<C::Member>>> {
    let mut out = vec![];
    for seed in seeds {
        let (a, _) = m.generated(&seed)?;
        for (ext, ia) in class.one_step_extensions(&a) {
            out.push((seed.clone(), ext, ia));
        }
    }
    Ok(out)
}

/// Fair chain of amalgamations starting from the empty member.
///
/// Tasks are pairs (seed of at most `level` elements, one-step extension of
/// the substructure it generates), handled first-in first-out; tasks already
/// realized are dropped. The seed only feeds the class amalgam's choices.
pub fn build_limit<C: ClassDescriptor>(class: &C, steps: usize, seed: u64, level: usize) -> Result<LimitRun<C::Member>> {
    build_limit_until(class, steps, seed, level, &|_| false)
}

/// As [`build_limit`], also stopping once `stop` holds of the current stage.
pub fn build_limit_until<C: ClassDescriptor>(
    class: &C,
    steps: usize,
    seed: u64,
    level: usize,
    stop: &dyn Fn(&C::Member) -> bool,
) -> Result<LimitRun<C::Member>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = class.empty();
    let mut queue: VecDeque<Task<C::Member>> = tasks_for(class, &m, small_subsets(&m.elements(), level))?.into();
    let mut stages = vec![];
    let mut done = 0;
    while done < steps && !stop(&m) {
        let Some((seed_elems, ext, ia)) = queue.pop_front() else {
            break;
        };
        let (a, inc) = m.generated(&seed_elems)?;
        if realized(&a, &ext, &ia, &m, &inc)? {
            continue;
        }
        let (d, md, _) = class.amalgamate(&a, &m, &ext, &inc, &ia, Some(&mut rng)).ok_or_else(|| {
            Error::Amalgamation(format!(
                "no amalgam over the substructure generated by {seed_elems:?} in {}",
                class.name()
            ))
        })?;
        debug_assert!(m.is_embedding(&d, &md));
        for task in queue.iter_mut() {
            for e in task.0.iter_mut() {
                *e = md.apply(*e);
            }
        }
        // New seeds: those meeting the new elements.
        let old: std::collections::BTreeSet<Elem> = m.elements().into_iter().map(|e| md.apply(e)).collect();
        let fresh: Vec<Vec<Elem>> = small_subsets(&d.elements(), level)
            .into_iter()
            .filter(|s| s.iter().any(|e| !old.contains(e)))
            .collect();
        queue.extend(tasks_for(class, &d, fresh)?);
        stages.push(md);
        m = d;
        done += 1;
    }
    // Drop realized tasks so `pending` counts real work.
    let mut pending = 0;
    for (seed_elems, ext, ia) in &queue {
        let (a, inc) = m.generated(seed_elems)?;
        if !realized(&a, ext, ia, &m, &inc)? {
            pending += 1;
        }
    }
    Ok(LimitRun {
        structure: m,
        stages,
        steps: done,
        pending,
    })
}

/// Every one-step extension of every substructure generated by at most
/// `level` elements embeds into `m` over it.
pub fn check_extension_property<C: ClassDescriptor>(m: &C::Member, class: &C, level: usize) -> Result<CheckReport> {
    let mut used = 0u64;
    for seed in small_subsets(&m.elements(), level) {
        let (a, inc) = m.generated(&seed)?;
        for (ext, ia) in class.one_step_extensions(&a) {
            used += 1;
            if !realized(&a, &ext, &ia, m, &inc)? {
                return Ok(CheckReport::fail(
                    Counterexample::Extension {
                        host: m.to_text(),
                        seed,
                        base: a.to_text(),
                        extension: ext.to_text(),
                        inclusion: ia,
                    },
                    used,
                ));
            }
        }
    }
    Ok(CheckReport::pass(used))
}

fn distinct_tuples(elems: &[Elem], len: usize) -> Vec<Vec<Elem>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        let mut next = vec![];
        for t in &out {
            for &e in elems {
                if !t.contains(&e) {
                    let mut u = t.clone();
                    u.push(e);
                    next.push(u);
                }
            }
        }
        out = next;
    }
    out
}

/// One back-and-forth step for every partial isomorphism between tuples of
/// at most `level` distinct elements: tuples of equal type must have the
/// same set of one-element extension types.
pub fn check_ultrahomogeneous<M: Member>(m: &M, level: usize) -> Result<CheckReport> {
    let elems = m.elements();
    let mut used = 0u64;
    for len in 0..=level {
        let mut reps: BTreeMap<M::Type, (Vec<Elem>, BTreeMap<M::Type, Elem>)> = BTreeMap::new();
        for t in distinct_tuples(&elems, len) {
            let ty = m.type_of(&t)?;
            let mut succ = BTreeMap::new();
            for &x in &elems {
                used += 1;
                let mut u = t.clone();
                u.push(x);
                succ.entry(m.type_of(&u)?).or_insert(x);
            }
            match reps.get(&ty) {
                None => {
                    reps.insert(ty, (t, succ));
                }
                Some((r, rsucc)) => {
                    let forth = rsucc.iter().find(|(k, _)| !succ.contains_key(*k));
                    let back = succ.iter().find(|(k, _)| !rsucc.contains_key(*k));
                    let stuck = match (forth, back) {
                        (Some((_, &x)), _) => Some((x, true)),
                        (None, Some((_, &x))) => Some((x, false)),
                        (None, None) => None,
                    };
                    if let Some((x, forth)) = stuck {
                        return Ok(CheckReport::fail(
                            Counterexample::PartialIso {
                                host: m.to_text(),
                                from: r.clone(),
                                to: t,
                                stuck: x,
                                forth,
                            },
                            used,
                        ));
                    }
                }
            }
        }
    }
    Ok(CheckReport::pass(used))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Verdict;
    use crate::structure::{Signature, Structure};
    use crate::te::{KeClass, TEStructure};
    use std::collections::BTreeSet;
    use std::sync::Arc;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Structure {
        let sig = Arc::new(Signature::one_sorted("V", &[("R", 2)]).unwrap());
        let rel: BTreeSet<Vec<usize>> = edges.iter().flat_map(|&(a, b)| [vec![a, b], vec![b, a]]).collect();
        Structure::new("g", sig, vec![n], vec![rel], vec![], vec![]).unwrap()
    }

    #[test]
    fn triangle_is_homogeneous() {
        let k3 = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(check_ultrahomogeneous(&k3, 2).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn path_is_not() {
        let p3 = graph(3, &[(0, 1), (1, 2)]);
        let r = check_ultrahomogeneous(&p3, 1).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(matches!(r.counterexample, Some(Counterexample::PartialIso { .. })));
    }

    #[test]
    fn zero_steps_is_empty() {
        let run = build_limit(&KeClass::new(1), 0, 0, 1).unwrap();
        assert_eq!(run.structure.size(), 0);
    }

    #[test]
    fn arity_one_limit_drains_and_is_homogeneous() {
        let class = KeClass::new(1);
        let run = build_limit(&class, 1000, 7, 1).unwrap();
        assert!(run.drained());
        let m = &run.structure;
        assert!(check_extension_property(m, &class, 1).unwrap().passed());
        assert!(check_ultrahomogeneous(m, 1).unwrap().passed());
        // Each stage embeds in the next; here as a prefix.
        for (i, e) in run.stages.iter().enumerate() {
            assert_eq!(e.map()[0], (0..e.map()[0].len()).collect::<Vec<_>>(), "stage {i}");
        }
    }

    #[test]
    fn same_seed_same_output() {
        let class = KeClass::new(2);
        let a = build_limit(&class, 40, 3, 1).unwrap().structure;
        let b = build_limit(&class, 40, 3, 1).unwrap().structure;
        assert_eq!(crate::te::print_te(&a), crate::te::print_te(&b));
    }

    #[test]
    fn single_element_lacks_a_witness() {
        let one = TEStructure::discrete(1, 1);
        let r = check_extension_property(&one, &KeClass::new(1), 1).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }
}
