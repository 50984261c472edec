//! Amalgamation classes: HP/JEP/AP and finite-type checks, and finite
//! approximations of generic limits.

use std::fmt;

use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::structure::{
    find_embeddings_extending, generated_substructure, print_structure, qf_type, Elem, Embedding, QfType, Structure,
};
use crate::te::{print_te, TEStructure};

pub mod checks;
pub mod kstar;
pub mod limit;
pub mod replay;
pub mod toy;

pub use checks::{check_ap, check_hp, check_jep, check_star, enumerate_qf_types, Budget};
pub use kstar::KStarClass;
pub use toy::{ToyClass, ToyRule};
pub use limit::{build_limit, check_extension_property, check_ultrahomogeneous, LimitRun};
pub use replay::{replay, replay_partial_iso, Replay};

/// What the class checks need from a finite structure.
pub trait Member: Clone + fmt::Debug + PartialEq {
    type Type: Clone + Ord + fmt::Debug;

    fn carriers(&self) -> Vec<usize>;

    fn elements(&self) -> Vec<Elem> {
        self.carriers()
            .iter()
            .enumerate()
            .flat_map(|(s, &n)| (0..n).map(move |i| Elem::new(s, i)))
            .collect()
    }

    fn total_size(&self) -> usize {
        self.carriers().iter().sum()
    }

    fn generated(&self, seed: &[Elem]) -> Result<(Self, Embedding)>;

    fn embeddings_extending(&self, target: &Self, partial: &[Vec<Option<usize>>], limit: usize) -> Result<Vec<Embedding>>;

    fn is_embedding(&self, target: &Self, e: &Embedding) -> bool;

    /// Canonical quantifier-free type of a tuple.
    fn type_of(&self, tuple: &[Elem]) -> Result<Self::Type>;

    fn to_text(&self) -> String;
}

impl Member for Structure {
    type Type = QfType;

    fn carriers(&self) -> Vec<usize> {
        Structure::carriers(self).to_vec()
    }

    fn generated(&self, seed: &[Elem]) -> Result<(Self, Embedding)> {
        generated_substructure(self, seed)
    }

    fn embeddings_extending(&self, target: &Self, partial: &[Vec<Option<usize>>], limit: usize) -> Result<Vec<Embedding>> {
        find_embeddings_extending(self, target, partial, limit)
    }

    fn is_embedding(&self, target: &Self, e: &Embedding) -> bool {
        e.is_embedding(self, target)
    }

    fn type_of(&self, tuple: &[Elem]) -> Result<QfType> {
        qf_type(self, tuple)
    }

    fn to_text(&self) -> String {
        print_structure(self)
    }
}

impl Member for TEStructure {
    type Type = Vec<u32>;

    fn carriers(&self) -> Vec<usize> {
        vec![self.size()]
    }

    fn generated(&self, seed: &[Elem]) -> Result<(Self, Embedding)> {
        let mut idx: Vec<usize> = seed.iter().map(|e| e.index).collect();
        idx.sort_unstable();
        idx.dedup();
        if let Some(x) = idx.iter().find(|&&x| x >= self.size()) {
            return Err(crate::Error::CarrierMembership(format!("element {x} with size {}", self.size())));
        }
        Ok((self.restrict(&idx), Embedding::from_map(vec![idx])))
    }

    fn embeddings_extending(&self, target: &Self, partial: &[Vec<Option<usize>>], limit: usize) -> Result<Vec<Embedding>> {
        let p = partial.first().cloned().unwrap_or_else(|| vec![None; self.size()]);
        Ok(self
            .embeddings_into(target, &p, limit)
            .into_iter()
            .map(|m| Embedding::from_map(vec![m]))
            .collect())
    }

    fn is_embedding(&self, target: &Self, e: &Embedding) -> bool {
        e.map().len() == 1 && TEStructure::is_embedding(self, target, &e.map()[0])
    }

    fn type_of(&self, tuple: &[Elem]) -> Result<Vec<u32>> {
        let t: Vec<usize> = tuple.iter().map(|e| e.index).collect();
        if let Some(x) = t.iter().find(|&&x| x >= self.size()) {
            return Err(crate::Error::CarrierMembership(format!("element {x} with size {}", self.size())));
        }
        Ok(self.qf_key(&t))
    }

    fn to_text(&self) -> String {
        print_te(self)
    }
}

/// A class of finitely generated structures closed under isomorphism.
pub trait ClassDescriptor {
    type Member: Member;

    fn name(&self) -> String;

    fn is_member(&self, m: &Self::Member) -> bool;

    /// The measure bounded by `size_bound` in enumeration.
    fn size_of(&self, m: &Self::Member) -> usize {
        m.total_size()
    }

    /// All members of size at most `size_bound`, one per isomorphism type.
    fn enumerate(&self, size_bound: usize) -> Result<Vec<Self::Member>>;

    /// The member generated by nothing (constants only).
    fn empty(&self) -> Self::Member;

    /// Largest size of a member generated by `generators` elements.
    fn closure_bound(&self, generators: usize) -> usize {
        generators
    }

    /// A class-specific amalgam of `B <-ab- A -ac-> C`, returning
    /// `(D, B -> D, C -> D)`. The default searches bounded members.
    fn amalgamate(
        &self,
        a: &Self::Member,
        b: &Self::Member,
        c: &Self::Member,
        ab: &Embedding,
        ac: &Embedding,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Option<(Self::Member, Embedding, Embedding)> {
        let _ = rng;
        let bound = self.size_of(b) + self.size_of(c) - self.size_of(a).min(self.size_of(b));
        checks::search_amalgam(self, a, b, c, ab, ac, bound).ok().flatten()
    }

    /// Extensions of `a` by one generator, one per isomorphism type over `a`,
    /// each with its inclusion.
    fn one_step_extensions(&self, a: &Self::Member) -> Vec<(Self::Member, Embedding)>;

    fn parse_member(&self, text: &str) -> Result<Self::Member>;
}
