use std::collections::BTreeSet;

use super::{ClassDescriptor, Member};
use crate::error::{Error, Result};
use crate::report::{CheckReport, Counterexample};
use crate::structure::{Elem, Embedding, SortId};

/// Work limit shared by the bounded checks (counted in elementary steps:
/// substructures, spans, tuples).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub steps: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { steps: 20_000_000 }
    }
}

struct Meter {
    used: u64,
    limit: u64,
}

impl Meter {
    fn new(b: Budget) -> Self {
        Meter { used: 0, limit: b.steps }
    }

    /// False once the budget is spent.
    fn tick(&mut self) -> bool {
        self.used += 1;
        self.used <= self.limit
    }
}

fn subsets(elems: &[Elem]) -> impl Iterator<Item = Vec<Elem>> + '_ {
    (0u64..1 << elems.len()).map(move |mask| {
        elems
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect()
    })
}

/// Images of an embedding's source elements, as a set.
fn image_set(e: &Embedding) -> BTreeSet<Elem> {
    e.map()
        .iter()
        .enumerate()
        .flat_map(|(s, row)| row.iter().map(move |&i| Elem::new(s, i)))
        .collect()
}

const MAX_SUBSET_ELEMENTS: usize = 20;

/// Distinct substructures of `m` (by generated element set), each with its
/// inclusion and a generating seed.
fn substructures<M: Member>(m: &M, meter: &mut Meter) -> Result<Option<Vec<(M, Embedding, Vec<Elem>)>>> {
    let elems = m.elements();
    if elems.len() > MAX_SUBSET_ELEMENTS {
        return Ok(None);
    }
    let mut seen = BTreeSet::new();
    let mut out = vec![];
    for seed in subsets(&elems) {
        if !meter.tick() {
            return Ok(None);
        }
        let (sub, inc) = m.generated(&seed)?;
        if seen.insert(image_set(&inc)) {
            out.push((sub, inc, seed));
        }
    }
    Ok(Some(out))
}

pub fn check_hp<C: ClassDescriptor>(class: &C, size_bound: usize, budget: Budget) -> Result<CheckReport> {
    if size_bound == 0 {
        return Ok(CheckReport::pass(0).with_detail("size bound 0: vacuous"));
    }
    let mut meter = Meter::new(budget);
    let members = class.enumerate(size_bound)?;
    for m in &members {
        let Some(subs) = substructures(m, &mut meter)? else {
            return Ok(CheckReport::inconclusive(meter.used, "budget exceeded enumerating substructures"));
        };
        for (sub, _, seed) in subs {
            if !class.is_member(&sub) {
                return Ok(CheckReport::fail(Counterexample::Hp { member: m.to_text(), seed }, meter.used)
                    .with_detail(format!("substructure of size {} is not a member", class.size_of(&sub))));
            }
        }
    }
    Ok(CheckReport::pass(meter.used).with_detail(format!("{} members", members.len())))
}

/// Verifies a proposed amalgam.
fn valid_amalgam<C: ClassDescriptor>(
    class: &C,
    a: &C::Member,
    b: &C::Member,
    c: &C::Member,
    ab: &Embedding,
    ac: &Embedding,
    (d, bd, cd): &(C::Member, Embedding, Embedding),
) -> bool {
    class.is_member(d)
        && b.is_embedding(d, bd)
        && c.is_embedding(d, cd)
        && ab.then(bd) == ac.then(cd)
        && a.is_embedding(b, ab)
        && a.is_embedding(c, ac)
}

/// Exhaustive amalgam search over members of size at most `bound`.
pub fn search_amalgam<C: ClassDescriptor + ?Sized>(
    class: &C,
    a: &C::Member,
    b: &C::Member,
    c: &C::Member,
    ab: &Embedding,
    ac: &Embedding,
    bound: usize,
) -> Result<Option<(C::Member, Embedding, Embedding)>> {
    for d in class.enumerate(bound)? {
        for bd in b.embeddings_extending(&d, &empty_partial(b), usize::MAX)? {
            let mut partial = empty_partial(c);
            for x in a.elements() {
                let in_c = ac.apply(x);
                partial[x.sort][in_c.index] = Some(bd.apply(ab.apply(x)).index);
            }
            if let Some(cd) = c.embeddings_extending(&d, &partial, 1)?.into_iter().next() {
                return Ok(Some((d, bd, cd)));
            }
        }
    }
    Ok(None)
}

pub(crate) fn empty_partial<M: Member>(m: &M) -> Vec<Vec<Option<usize>>> {
    m.carriers().iter().map(|&n| vec![None; n]).collect()
}

pub(crate) fn amalgam_or_search<C: ClassDescriptor>(
    class: &C,
    a: &C::Member,
    b: &C::Member,
    c: &C::Member,
    ab: &Embedding,
    ac: &Embedding,
) -> Result<Option<(C::Member, Embedding, Embedding)>> {
    if let Some(r) = class.amalgamate(a, b, c, ab, ac, None) {
        if valid_amalgam(class, a, b, c, ab, ac, &r) {
            return Ok(Some(r));
        }
    }
    let bound = class.size_of(b) + class.size_of(c);
    let found = search_amalgam(class, a, b, c, ab, ac, bound)?;
    Ok(found.filter(|r| valid_amalgam(class, a, b, c, ab, ac, r)))
}

/// A member both `b` and `c` embed into, agreeing on constants.
pub(crate) fn joint_embedding<C: ClassDescriptor>(
    class: &C,
    b: &C::Member,
    c: &C::Member,
) -> Result<Option<(C::Member, Embedding, Embedding)>> {
    let (a, ab) = b.generated(&[])?;
    let (a2, ac2) = c.generated(&[])?;
    // Both constant parts must agree for any joint embedding.
    let iso = a.embeddings_extending(&a2, &empty_partial(&a), 1)?;
    match iso.into_iter().next() {
        Some(i) if a.carriers() == a2.carriers() => amalgam_or_search(class, &a, b, c, &ab, &i.then(&ac2)),
        _ => Ok(None),
    }
}

pub fn check_jep<C: ClassDescriptor>(class: &C, size_bound: usize, budget: Budget) -> Result<CheckReport> {
    let mut meter = Meter::new(budget);
    let members = class.enumerate(size_bound)?;
    for (i, b) in members.iter().enumerate() {
        for c in &members[i..] {
            if !meter.tick() {
                return Ok(CheckReport::inconclusive(meter.used, "budget exceeded"));
            }
            let joint = joint_embedding(class, b, c)?;
            if joint.is_none() {
                return Ok(CheckReport::fail(
                    Counterexample::Jep { left: b.to_text(), right: c.to_text() },
                    meter.used,
                ));
            }
        }
    }
    Ok(CheckReport::pass(meter.used).with_detail(format!("{} members", members.len())))
}

pub fn check_ap<C: ClassDescriptor>(class: &C, size_bound: usize, budget: Budget) -> Result<CheckReport> {
    let mut meter = Meter::new(budget);
    let members = class.enumerate(size_bound)?;
    let mut spans = 0u64;
    for b in &members {
        let Some(subs) = substructures(b, &mut meter)? else {
            return Ok(CheckReport::inconclusive(meter.used, "budget exceeded enumerating substructures"));
        };
        for (a, ab, _) in subs {
            for c in &members {
                for ac in a.embeddings_extending(c, &empty_partial(&a), usize::MAX)? {
                    if !meter.tick() {
                        return Ok(CheckReport::inconclusive(meter.used, format!("budget exceeded after {spans} spans")));
                    }
                    spans += 1;
                    if amalgam_or_search(class, &a, b, c, &ab, &ac)?.is_none() {
                        return Ok(CheckReport::fail(
                            Counterexample::Ap {
                                base: a.to_text(),
                                left: b.to_text(),
                                right: c.to_text(),
                                to_left: ab,
                                to_right: ac,
                            },
                            meter.used,
                        ));
                    }
                }
            }
        }
    }
    Ok(CheckReport::pass(meter.used).with_detail(format!("{spans} spans")))
}

/// Quantifier-free types of `sorts`-tuples over members of size at most
/// `size_bound`. The flag is false when the budget cut the enumeration short.
///
/// Only members generated by at most `sorts.len()` elements are visited: a
/// tuple's type is that of its generated substructure, which is itself a
/// member when the class is hereditary.
pub fn enumerate_qf_types<C: ClassDescriptor>(
    class: &C,
    sorts: &[SortId],
    size_bound: usize,
    budget: Budget,
) -> Result<(BTreeSet<<C::Member as Member>::Type>, bool)> {
    let mut meter = Meter::new(budget);
    let bound = size_bound.min(class.closure_bound(sorts.len()));
    let mut out = BTreeSet::new();
    for m in class.enumerate(bound)? {
        let carriers = m.carriers();
        if sorts.iter().any(|&s| s >= carriers.len()) {
            return Err(Error::SortMismatch(format!("sort tuple {sorts:?} for {} sorts", carriers.len())));
        }
        let pools: Vec<Vec<usize>> = sorts.iter().map(|&s| (0..carriers[s]).collect()).collect();
        for t in crate::structure::cartesian(&pools) {
            if !meter.tick() {
                return Ok((out, false));
            }
            let tuple: Vec<Elem> = t.iter().zip(sorts).map(|(&i, &s)| Elem::new(s, i)).collect();
            out.insert(m.type_of(&tuple)?);
        }
    }
    Ok((out, true))
}

/// Pass iff the type count is the same at `size_bound - 1` and `size_bound`.
pub fn check_star<C: ClassDescriptor>(
    class: &C,
    sorts: &[SortId],
    size_bound: usize,
    budget: Budget,
) -> Result<CheckReport> {
    let (now, complete) = enumerate_qf_types(class, sorts, size_bound, budget)?;
    if !complete {
        return Ok(CheckReport::inconclusive(budget.steps, format!("partial count {}", now.len())));
    }
    let before = if size_bound == 0 {
        now.len()
    } else {
        let (b, complete) = enumerate_qf_types(class, sorts, size_bound - 1, budget)?;
        if !complete {
            return Ok(CheckReport::inconclusive(budget.steps, format!("partial count {}", b.len())));
        }
        b.len()
    };
    let used = now.len() as u64;
    let detail = format!("types {before} at bound {} and {} at bound {size_bound}", size_bound.saturating_sub(1), now.len());
    if before == now.len() {
        Ok(CheckReport::pass(used).with_detail(detail).with_detail(format!("count {}", now.len())))
    } else {
        Ok(CheckReport::inconclusive(used, detail))
    }
}
