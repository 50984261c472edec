//! Re-verification of structural counterexamples from their text alone.

use std::collections::BTreeSet;

use super::checks::{amalgam_or_search, joint_embedding};
use super::limit::realized;
use super::{ClassDescriptor, Member};
use crate::error::Result;
use crate::report::Counterexample;
use crate::structure::Elem;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Replay {
    /// The counterexample still stands.
    Confirmed(String),
    /// The data does not witness a failure.
    Refuted(String),
    /// Free-form witnesses are replayed by re-running the producing check.
    Unsupported,
}

/// `forth`: `from ⌢ stuck` has a type no `to ⌢ y` has; `back` the other way.
pub fn replay_partial_iso<M: Member>(host: &M, from: &[Elem], to: &[Elem], stuck: Elem, forth: bool) -> Result<Replay> {
    if host.type_of(from)? != host.type_of(to)? {
        return Ok(Replay::Refuted("the two tuples have different types".into()));
    }
    let (src, dst) = if forth { (from, to) } else { (to, from) };
    let want = host.type_of(&[src, &[stuck]].concat())?;
    let mut have = BTreeSet::new();
    for y in host.elements() {
        have.insert(host.type_of(&[dst, &[y]].concat())?);
    }
    Ok(if have.contains(&want) {
        Replay::Refuted(format!("{}/{} has a matching image", stuck.sort, stuck.index))
    } else {
        Replay::Confirmed(format!("no image for {}/{} extends the partial isomorphism", stuck.sort, stuck.index))
    })
}

pub fn replay<C: ClassDescriptor>(class: &C, cex: &Counterexample) -> Result<Replay> {
    Ok(match cex {
        Counterexample::Hp { member, seed } => {
            let m = class.parse_member(member)?;
            if !class.is_member(&m) {
                return Ok(Replay::Refuted("the structure is not a member".into()));
            }
            let (sub, _) = m.generated(seed)?;
            if class.is_member(&sub) {
                Replay::Refuted("the generated substructure is a member".into())
            } else {
                Replay::Confirmed("the generated substructure is not a member".into())
            }
        }
        Counterexample::Jep { left, right } => {
            let (b, c) = (class.parse_member(left)?, class.parse_member(right)?);
            if !class.is_member(&b) || !class.is_member(&c) {
                return Ok(Replay::Refuted("a structure is not a member".into()));
            }
            match joint_embedding(class, &b, &c)? {
                Some(_) => Replay::Refuted("a joint embedding exists".into()),
                None => Replay::Confirmed("no joint embedding within the search bound".into()),
            }
        }
        Counterexample::Ap { base, left, right, to_left, to_right } => {
            let (a, b, c) = (class.parse_member(base)?, class.parse_member(left)?, class.parse_member(right)?);
            if ![&a, &b, &c].iter().all(|m| class.is_member(m)) || !a.is_embedding(&b, to_left) || !a.is_embedding(&c, to_right) {
                return Ok(Replay::Refuted("the span is not a span of members".into()));
            }
            match amalgam_or_search(class, &a, &b, &c, to_left, to_right)? {
                Some(_) => Replay::Refuted("an amalgam exists".into()),
                None => Replay::Confirmed("no amalgam within the search bound".into()),
            }
        }
        Counterexample::Extension { host, seed, extension, inclusion, .. } => {
            let m = class.parse_member(host)?;
            let ext = class.parse_member(extension)?;
            let (a, inc) = m.generated(seed)?;
            if !class.is_member(&ext) || !a.is_embedding(&ext, inclusion) {
                return Ok(Replay::Refuted("the extension does not extend the generated substructure".into()));
            }
            if realized(&a, &ext, inclusion, &m, &inc)? {
                Replay::Refuted("the extension is realized in the host".into())
            } else {
                Replay::Confirmed("the extension is not realized over the seed".into())
            }
        }
        Counterexample::PartialIso { host, from, to, stuck, forth } => {
            replay_partial_iso(&class.parse_member(host)?, from, to, *stuck, *forth)?
        }
        Counterexample::Witness(_) => Replay::Unsupported,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraisse::{check_extension_property, check_hp, check_jep, Budget, ToyClass, ToyRule};
    use crate::te::{KeClass, TEStructure};

    #[test]
    fn toy_failures_replay() {
        let even = ToyClass::new(ToyRule::EvenSize);
        let r = check_hp(&even, 2, Budget::default()).unwrap();
        let cex = Counterexample::parse(&r.counterexample.unwrap().to_text()).unwrap();
        assert!(matches!(replay(&even, &cex).unwrap(), Replay::Confirmed(_)));
        let single = ToyClass::new(ToyRule::Singleton);
        let r = check_jep(&single, 1, Budget::default()).unwrap();
        assert!(matches!(replay(&single, r.counterexample.as_ref().unwrap()).unwrap(), Replay::Confirmed(_)));
    }

    #[test]
    fn extension_failure_replays_and_a_fixed_host_refutes_it() {
        let class = KeClass::new(1);
        let small = TEStructure::discrete(1, 1);
        let r = check_extension_property(&small, &class, 1).unwrap();
        let cex = r.counterexample.unwrap();
        assert!(matches!(replay(&class, &cex).unwrap(), Replay::Confirmed(_)));
        let Counterexample::Extension { seed, base, extension, inclusion, .. } = cex else { panic!() };
        let big = crate::te::generic_te(4, 1, 0).unwrap().structure;
        let moved = Counterexample::Extension { host: crate::te::print_te(&big), seed, base, extension, inclusion };
        assert!(matches!(replay(&class, &moved).unwrap(), Replay::Refuted(_)));
    }
}
