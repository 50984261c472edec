//! Finitely generated models of the axiom "`f_n` of a tuple is `c_n` exactly
//! when the tuple has a repeated entry", as a class descriptor.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::ClassDescriptor;
use crate::error::Result;
use crate::structure::{cartesian, parse_structure, Embedding, Signature, Structure};
use crate::te::tstar::unused_class_elements;
use crate::te::{from_tstar, has_repetition, to_tstar, tstar_signature, KeClass};

#[derive(Clone, Debug)]
pub struct KStarClass {
    pub maxarity: usize,
    sig: Arc<Signature>,
}

impl KStarClass {
    pub fn new(maxarity: usize) -> Self {
        KStarClass {
            maxarity,
            sig: Arc::new(tstar_signature(maxarity)),
        }
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    /// Builds a member from sort sizes, the constants and `f(n, tuple)`.
    fn build(&self, name: &str, carriers: Vec<usize>, consts: Vec<usize>, mut f: impl FnMut(usize, &[usize]) -> usize) -> Structure {
        let size = carriers[0];
        let functions = (1..=self.maxarity)
            .map(|n| {
                let pools = vec![(0..size).collect::<Vec<_>>(); n];
                cartesian(&pools)
                    .into_iter()
                    .map(|t| {
                        let v = f(n, &t);
                        (t, v)
                    })
                    .collect::<BTreeMap<_, _>>()
            })
            .collect();
        Structure::new(name, self.sig.clone(), carriers, vec![], functions, consts).expect("member is well formed")
    }

    /// `m` with `extra[n-1]` unused elements appended to `S<n>`.
    fn with_extras(&self, m: &Structure, extra: &[usize]) -> Structure {
        let mut carriers = m.carriers().to_vec();
        for (n, e) in extra.iter().enumerate() {
            carriers[n + 1] += e;
        }
        self.build(m.name(), carriers, m.constants().to_vec(), |n, t| m.apply(n - 1, t))
    }
}

/// Vectors of length `k` with sum at most `total`.
fn distributions(k: usize, total: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = vec![];
    for first in 0..=total {
        for mut rest in distributions(k - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl ClassDescriptor for KStarClass {
    type Member = Structure;

    fn name(&self) -> String {
        format!("K* maxarity {}", self.maxarity)
    }

    fn is_member(&self, m: &Structure) -> bool {
        **m.signature() == *self.sig && from_tstar(m).is_ok()
    }

    /// Generators: elements of `S` plus the class elements outside every
    /// image and distinct from the constant.
    fn size_of(&self, m: &Structure) -> usize {
        m.carrier_size(0) + (1..=self.maxarity).map(|n| unused_class_elements(m, n).len()).sum::<usize>()
    }

    fn enumerate(&self, size_bound: usize) -> Result<Vec<Structure>> {
        let mut out = vec![];
        for te in KeClass::new(self.maxarity).enumerate(size_bound)? {
            let base = to_tstar(&te);
            for extra in distributions(self.maxarity, size_bound - te.size()) {
                out.push(self.with_extras(&base, &extra));
            }
        }
        Ok(out)
    }

    fn empty(&self) -> Structure {
        to_tstar(&crate::te::TEStructure::discrete(0, self.maxarity))
    }

    /// Pushout of the sorts; a tuple meeting both sides outside `A` goes to
    /// `c_n` if it has a repetition, else to a new element (or, with `rng`,
    /// half the time to an existing one).
    fn amalgamate(
        &self,
        a: &Structure,
        b: &Structure,
        c: &Structure,
        ab: &Embedding,
        ac: &Embedding,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Option<(Structure, Embedding, Embedding)> {
        let sorts = self.maxarity + 1;
        let mut c_to_d: Vec<Vec<usize>> = (0..sorts).map(|s| vec![usize::MAX; c.carrier_size(s)]).collect();
        for s in 0..sorts {
            for x in 0..a.carrier_size(s) {
                c_to_d[s][ac.map()[s][x]] = ab.map()[s][x];
            }
        }
        let mut carriers = b.carriers().to_vec();
        for s in 0..sorts {
            for slot in c_to_d[s].iter_mut() {
                if *slot == usize::MAX {
                    *slot = carriers[s];
                    carriers[s] += 1;
                }
            }
        }
        let size = carriers[0];
        let mut c_of_d = vec![None; size];
        for (x, &d) in c_to_d[0].iter().enumerate() {
            c_of_d[d] = Some(x);
        }
        let nb = b.carrier_size(0);
        // Mixed tuples, decided before building so that fresh elements are
        // counted into the carriers.
        let mut mixed: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
        for n in 1..=self.maxarity {
            let pools = vec![(0..size).collect::<Vec<_>>(); n];
            for t in cartesian(&pools) {
                let in_b = t.iter().all(|&x| x < nb);
                let in_c = t.iter().all(|&x| c_of_d[x].is_some());
                if in_b || in_c || has_repetition(&t) {
                    continue;
                }
                let cn = b.constant(n - 1);
                let join = match rng.as_deref_mut() {
                    Some(r) if carriers[n] > 1 => r.gen_bool(0.5).then(|| {
                        let v = r.gen_range(0..carriers[n] - 1);
                        if v >= cn {
                            v + 1
                        } else {
                            v
                        }
                    }),
                    _ => None,
                };
                let v = join.unwrap_or_else(|| {
                    carriers[n] += 1;
                    carriers[n] - 1
                });
                mixed.insert((n, t), v);
            }
        }
        let consts = b.constants().to_vec();
        let d = self.build("amalgam", carriers, consts.clone(), |n, t| {
            if t.iter().all(|&x| x < nb) {
                b.apply(n - 1, t)
            } else if t.iter().all(|&x| c_of_d[x].is_some()) {
                let tc: Vec<usize> = t.iter().map(|&x| c_of_d[x].unwrap()).collect();
                c_to_d[n][c.apply(n - 1, &tc)]
            } else if has_repetition(t) {
                consts[n - 1]
            } else {
                mixed[&(n, t.to_vec())]
            }
        });
        let bd = Embedding::from_map((0..sorts).map(|s| (0..b.carrier_size(s)).collect()).collect());
        Some((d, bd, Embedding::from_map(c_to_d)))
    }

    fn one_step_extensions(&self, a: &Structure) -> Vec<(Structure, Embedding)> {
        let k = self.maxarity;
        let sorts = k + 1;
        let inc = Embedding::from_map((0..sorts).map(|s| (0..a.carrier_size(s)).collect()).collect());
        let mut out = vec![];
        // One more unused class element.
        for n in 1..=k {
            let mut extra = vec![0; k];
            extra[n - 1] = 1;
            out.push((self.with_extras(a, &extra), inc.clone()));
        }
        // One more element of S: every new repetition-free tuple goes to an
        // existing non-constant element or a new one, numbered by first use.
        let m = a.carrier_size(0);
        let size = m + 1;
        let new_tuples: Vec<Vec<Vec<usize>>> = (1..=k)
            .map(|n| {
                cartesian(&vec![(0..size).collect::<Vec<_>>(); n])
                    .into_iter()
                    .filter(|t| t.contains(&m) && !has_repetition(t))
                    .collect()
            })
            .collect();
        let existing: Vec<Vec<usize>> = (1..=k)
            .map(|n| (0..a.carrier_size(n)).filter(|&x| x != a.constant(n - 1)).collect())
            .collect();
        let mut choice: Vec<Vec<usize>> = new_tuples.iter().map(|ts| vec![0; ts.len()]).collect();
        let mut visit = |choice: &[Vec<usize>]| {
            let mut carriers = a.carriers().to_vec();
            carriers[0] = size;
            let mut value: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
            for n in 1..=k {
                let base = a.carrier_size(n);
                let mut blocks = 0;
                for (t, &l) in new_tuples[n - 1].iter().zip(&choice[n - 1]) {
                    let v = if l < existing[n - 1].len() {
                        existing[n - 1][l]
                    } else {
                        blocks = blocks.max(l - existing[n - 1].len() + 1);
                        base + l - existing[n - 1].len()
                    };
                    value.insert((n, t.clone()), v);
                }
                carriers[n] += blocks;
            }
            let ext = self.build(a.name(), carriers, a.constants().to_vec(), |n, t| {
                if t.contains(&m) {
                    value.get(&(n, t.to_vec())).copied().unwrap_or(a.constant(n - 1))
                } else {
                    a.apply(n - 1, t)
                }
            });
            out.push((ext, inc.clone()));
        };
        walk(&new_tuples, &existing, &mut choice, 0, 0, 0, &mut visit);
        out
    }

    fn parse_member(&self, text: &str) -> Result<Structure> {
        parse_structure(text)
    }
}

fn walk(
    new_tuples: &[Vec<Vec<usize>>],
    existing: &[Vec<usize>],
    choice: &mut Vec<Vec<usize>>,
    n: usize,
    i: usize,
    blocks: usize,
    visit: &mut dyn FnMut(&[Vec<usize>]),
) {
    if n == new_tuples.len() {
        visit(choice);
        return;
    }
    if i == new_tuples[n].len() {
        walk(new_tuples, existing, choice, n + 1, 0, 0, visit);
        return;
    }
    let e = existing[n].len();
    for l in 0..e + blocks + 1 {
        choice[n][i] = l;
        let nb = if l == e + blocks { blocks + 1 } else { blocks };
        walk(new_tuples, existing, choice, n, i + 1, nb, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraisse::{check_ap, check_hp, check_jep, check_star, Budget, Member};
    use crate::structure::Elem;

    #[test]
    fn generated_closure_adds_images_and_constants() {
        let k = KStarClass::new(2);
        let m = to_tstar(&crate::te::TEStructure::discrete(2, 2));
        let (sub, _) = m.generated(&[Elem::new(0, 0), Elem::new(0, 1)]).unwrap();
        // f1(a), f1(b), c1; f2(a,b), f2(b,a), c2.
        assert_eq!(sub.carriers(), &[2, 3, 3]);
        assert!(k.is_member(&sub));
    }

    #[test]
    fn one_sort_variable_has_one_type() {
        let r = check_star(&KStarClass::new(1), &[0], 2, Budget::default()).unwrap();
        assert!(r.passed());
        assert!(r.details.iter().any(|d| d == "count 1"), "{r:?}");
    }

    #[test]
    fn small_spans_amalgamate() {
        let k = KStarClass::new(1);
        let b = Budget::default();
        assert!(check_hp(&k, 2, b).unwrap().passed());
        assert!(check_jep(&k, 2, b).unwrap().passed());
        assert!(check_ap(&k, 2, b).unwrap().passed());
    }

    #[test]
    fn extensions_of_the_empty_member() {
        // A new class element, or a point whose image is new.
        let k = KStarClass::new(1);
        assert_eq!(k.one_step_extensions(&k.empty()).len(), 2);
    }
}
