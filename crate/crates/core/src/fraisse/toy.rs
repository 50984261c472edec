//! Small classes of sets with one unary predicate, used to exercise the
//! checks on failures.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::ClassDescriptor;
use crate::error::Result;
use crate::structure::{parse_structure, Embedding, Signature, Structure};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToyRule {
    /// Universe of even size.
    EvenSize,
    /// Universe of exactly one element.
    Singleton,
}

#[derive(Clone, Debug)]
pub struct ToyClass {
    pub rule: ToyRule,
    sig: Arc<Signature>,
}

impl ToyClass {
    pub fn new(rule: ToyRule) -> Self {
        ToyClass {
            rule,
            sig: Arc::new(Signature::one_sorted("V", &[("P", 1)]).expect("well-formed signature")),
        }
    }

    fn admits(&self, size: usize) -> bool {
        match self.rule {
            ToyRule::EvenSize => size % 2 == 0,
            ToyRule::Singleton => size == 1,
        }
    }

    /// The set `0..size` with `P = 0..p`.
    fn member(&self, size: usize, p: usize) -> Structure {
        let rel: BTreeSet<Vec<usize>> = (0..p).map(|i| vec![i]).collect();
        Structure::new(format!("n{size}p{p}"), self.sig.clone(), vec![size], vec![rel], vec![], vec![])
            .expect("member is well formed")
    }
}

impl ClassDescriptor for ToyClass {
    type Member = Structure;

    fn name(&self) -> String {
        match self.rule {
            ToyRule::EvenSize => "even size".into(),
            ToyRule::Singleton => "exactly one element".into(),
        }
    }

    fn is_member(&self, m: &Structure) -> bool {
        **m.signature() == *self.sig && self.admits(m.carrier_size(0))
    }

    fn enumerate(&self, size_bound: usize) -> Result<Vec<Structure>> {
        Ok((0..=size_bound)
            .filter(|&n| self.admits(n))
            .flat_map(|n| (0..=n).map(move |p| (n, p)))
            .map(|(n, p)| self.member(n, p))
            .collect())
    }

    fn empty(&self) -> Structure {
        self.member(0, 0)
    }

    fn one_step_extensions(&self, a: &Structure) -> Vec<(Structure, Embedding)> {
        let n = a.carrier_size(0);
        let inc = Embedding::from_map(vec![(0..n).collect()]);
        [true, false]
            .into_iter()
            .filter(|_| self.admits(n + 1))
            .map(|in_p| {
                let mut rel = a.relation(0).clone();
                if in_p {
                    rel.insert(vec![n]);
                }
                let m = Structure::new(a.name(), self.sig.clone(), vec![n + 1], vec![rel], vec![], vec![])
                    .expect("member is well formed");
                (m, inc.clone())
            })
            .collect()
    }

    fn parse_member(&self, text: &str) -> Result<Structure> {
        parse_structure(text)
    }
}
