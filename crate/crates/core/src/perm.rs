//! Permutations of `1..=t` stored as rank vectors.
//!
//! `ranks[i - 1]` is the rank π(i) assigned to element `i`; rank 1 is the most
//! preferred position. The inverse view (the *order vector*, listing elements
//! from rank 1 downwards) is what preference lists look like on the wire, and
//! the two views convert into each other via [`Permutation::inverse`].

use std::fmt;

use thiserror::Error;

use crate::fenwick::Fenwick;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PermutationError {
    #[error("a permutation must rank at least one element")]
    Empty,
    #[error("values are not a bijection on 1..={0}")]
    NotBijective(usize),
}

/// A permutation π of `{1, …, t}`, stored as the rank vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    ranks: Vec<u32>,
}

impl Permutation {
    /// The identity permutation on `t` elements.
    ///
    /// Panics when `t == 0`: an empty ranking is rejected everywhere.
    pub fn identity(t: usize) -> Self {
        assert!(t >= 1, "a permutation must rank at least one element");
        Permutation {
            ranks: (1..=t as u32).collect(),
        }
    }

    /// Builds a permutation from a rank vector (`ranks[i-1] = π(i)`).
    pub fn from_ranks(ranks: Vec<u32>) -> Result<Self, PermutationError> {
        validate_bijection(&ranks)?;
        Ok(Permutation { ranks })
    }

    /// Builds a permutation from its order vector (`order[p-1]` = element at rank `p`).
    pub fn from_order(order: Vec<u32>) -> Result<Self, PermutationError> {
        validate_bijection(&order)?;
        Ok(Self::from_order_unchecked(order))
    }

    pub(crate) fn from_order_unchecked(order: Vec<u32>) -> Self {
        let mut ranks = vec![0u32; order.len()];
        for (pos, &element) in order.iter().enumerate() {
            ranks[element as usize - 1] = pos as u32 + 1;
        }
        Permutation { ranks }
    }

    /// Number of ranked elements.
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees t >= 1
    }

    /// Rank of `element` (1-based). Panics if `element` is out of `1..=t`.
    #[inline]
    pub fn rank(&self, element: u32) -> u32 {
        self.ranks[element as usize - 1]
    }

    /// The underlying rank vector.
    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    /// The order-vector view: element at rank 1 first.
    pub fn to_order(&self) -> Vec<u32> {
        let mut order = vec![0u32; self.ranks.len()];
        for (i, &r) in self.ranks.iter().enumerate() {
            order[r as usize - 1] = i as u32 + 1;
        }
        order
    }

    /// The inverse permutation. `p.inverse().inverse() == p`.
    pub fn inverse(&self) -> Permutation {
        Permutation {
            ranks: self.to_order(),
        }
    }

    /// Number of inverted pairs: `|{(i, j) : i < j and π(i) > π(j)}|`.
    ///
    /// This is the Kendall tau distance to the identity; O(t log t).
    pub fn inversions(&self) -> u64 {
        let t = self.ranks.len();
        let mut seen = Fenwick::zeros(t);
        let mut inv = 0u64;
        for (i, &r) in self.ranks.iter().enumerate() {
            // elements before i whose rank exceeds r
            inv += i as u64 - u64::from(seen.prefix_sum(r as usize));
            seen.add(r as usize, 1);
        }
        inv
    }

    /// Largest `|π(i) - i|` over all elements.
    #[inline]
    pub fn max_displacement(&self) -> u32 {
        self.ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| r.abs_diff(i as u32 + 1))
            .max()
            .unwrap_or(0)
    }

    /// Per-element displacements `|π(i) - i|` together with their maximum.
    pub fn displacement_stats(&self) -> DisplacementStats {
        let per_element: Vec<u32> = self
            .ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| r.abs_diff(i as u32 + 1))
            .collect();
        let max_abs_displacement = per_element.iter().copied().max().unwrap_or(0);
        DisplacementStats {
            per_element,
            max_abs_displacement,
        }
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation(ranks={:?})", self.ranks)
    }
}

/// How far each element sits from its slot in the central order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisplacementStats {
    /// `per_element[i - 1] = |π(i) - i|`.
    pub per_element: Vec<u32>,
    /// Maximum of `per_element`; at most `t - 1`.
    pub max_abs_displacement: u32,
}

/// All `t!` permutations of `1..=t`, in lexicographic order of their order
/// vectors. Intended for exhaustive checks at small `t`.
pub fn all_permutations(t: usize) -> Vec<Permutation> {
    assert!(
        (1..=10).contains(&t),
        "exhaustive enumeration is capped at t = 10"
    );
    let mut out = Vec::new();
    let mut order: Vec<u32> = Vec::with_capacity(t);
    let mut used = vec![false; t + 1];
    fn rec(t: usize, order: &mut Vec<u32>, used: &mut [bool], out: &mut Vec<Permutation>) {
        if order.len() == t {
            out.push(Permutation::from_order_unchecked(order.clone()));
            return;
        }
        for e in 1..=t as u32 {
            if !used[e as usize] {
                used[e as usize] = true;
                order.push(e);
                rec(t, order, used, out);
                order.pop();
                used[e as usize] = false;
            }
        }
    }
    rec(t, &mut order, &mut used, &mut out);
    out
}

fn validate_bijection(values: &[u32]) -> Result<(), PermutationError> {
    if values.is_empty() {
        return Err(PermutationError::Empty);
    }
    let t = values.len();
    let mut seen = vec![false; t];
    for &v in values {
        if v == 0 || v as usize > t || seen[v as usize - 1] {
            return Err(PermutationError::NotBijective(t));
        }
        seen[v as usize - 1] = true;
    }
    Ok(())
}
