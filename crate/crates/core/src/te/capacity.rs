use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{decode, has_repetition, pow, TEStructure};
use crate::error::{Error, Result};

/// Requested number of classes for each arity `1..=counts.len()`; `None`
/// leaves that arity unconstrained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CapacityPlan {
    pub counts: Vec<Option<usize>>,
    /// Fixed universe size; when absent the least feasible size up to `cap`.
    pub size: Option<usize>,
    pub cap: usize,
}

impl CapacityPlan {
    pub fn new(counts: Vec<Option<usize>>) -> Self {
        CapacityPlan {
            counts,
            size: None,
            cap: 8,
        }
    }

    pub fn with_size(mut self, size: usize) -> Self {
        self.size = Some(size);
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }
}

/// Number of repetition-free `n`-tuples over `size` elements.
pub fn free_tuple_count(size: usize, n: usize) -> usize {
    if n > size {
        return 0;
    }
    (size - n + 1..=size).product()
}

/// The first arity whose request cannot be met at `size`, as a message.
fn binding_constraint(plan: &CapacityPlan, size: usize) -> Option<String> {
    plan.counts.iter().enumerate().find_map(|(i, want)| {
        let want = (*want)?;
        let n = i + 1;
        let avail = free_tuple_count(size, n);
        if want > avail {
            Some(format!("E{n}: {want} classes but only {avail} repetition-free {n}-tuples on {size} elements"))
        } else if want == 0 && avail > 0 {
            Some(format!("E{n}: 0 classes but {avail} repetition-free {n}-tuples on {size} elements"))
        } else {
            None
        }
    })
}

pub fn with_capacity(plan: &CapacityPlan, seed: u64) -> Result<TEStructure> {
    let size = match plan.size {
        Some(s) if s > plan.cap => return Err(Error::Capacity(format!("universe size {s} exceeds cap {}", plan.cap))),
        Some(s) => {
            if let Some(msg) = binding_constraint(plan, s) {
                return Err(Error::Capacity(msg));
            }
            s
        }
        None => match (0..=plan.cap).find(|&s| binding_constraint(plan, s).is_none()) {
            Some(s) => s,
            None => {
                let msg = binding_constraint(plan, plan.cap).unwrap_or_default();
                return Err(Error::Capacity(format!("no universe size up to {}: {msg}", plan.cap)));
            }
        },
    };
    let k = plan.counts.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // A random surjection of the tuples onto the requested classes.
    let mut labels: Vec<Vec<u64>> = Vec::with_capacity(k);
    for (i, want) in plan.counts.iter().enumerate() {
        let n = i + 1;
        let total = pow(size, n);
        let free: Vec<usize> = (0..total).filter(|&j| !has_repetition(&decode(j, size, n))).collect();
        let want = want.unwrap_or_else(|| rng.gen_range(1..=free.len().max(1)));
        let mut order = free;
        order.shuffle(&mut rng);
        let mut row = vec![0u64; total];
        for (r, &j) in order.iter().enumerate() {
            row[j] = if r < want { r as u64 } else { rng.gen_range(0..want as u64) };
        }
        labels.push(row);
    }
    Ok(TEStructure::from_fn(size, k, |t| labels[t.len() - 1][super::encode(t, size)]))
}
