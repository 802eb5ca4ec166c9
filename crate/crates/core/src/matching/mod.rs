//! Stable matchings: deferred acceptance for the extreme points, rotation
//! enumeration for the full lattice, and a brute-force oracle for
//! cross-validation at small sizes.

mod brute_force;
mod rotations;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::{MarketInstance, Side};

pub use brute_force::brute_force_stable;
pub use rotations::enumerate_stable;

#[derive(Debug, Error, PartialEq)]
pub enum MatchingError {
    #[error(
        "matching covers {matching_men} men / {matching_women} women but the instance has {n} men / {l} women"
    )]
    DimensionMismatch {
        matching_men: usize,
        matching_women: usize,
        n: usize,
        l: usize,
    },
    #[error("man {man} is matched to woman {woman}, which is out of range 1..={l}")]
    PartnerOutOfRange { man: u32, woman: u32, l: usize },
    #[error("women {first} and {second} claim the same man")]
    NotInjective { first: u32, second: u32 },
    #[error("enumeration cap must be at least 2, got {0}")]
    CapTooSmall(usize),
    #[error(
        "brute force is guarded to n <= {max_n} and n + k <= {max_l}; instance has n = {n}, n + k = {l}"
    )]
    BruteForceGuard {
        n: u32,
        l: u32,
        max_n: u32,
        max_l: u32,
    },
    #[error("matching JSON: {0}")]
    Json(String),
    #[error("matching JSON: woman_to_man is inconsistent with man_to_woman at woman {0}")]
    InconsistentJson(u32),
}

/// A one-to-one matching. Men are always matched in this model (there are at
/// least as many women), so the man side is total; exactly `k` women end up
/// unmatched.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    man_to_woman: Vec<u32>,
    woman_to_man: Vec<Option<u32>>,
}

impl Matching {
    /// Builds a matching from per-man partners, validating range and
    /// injectivity. The woman-side view is derived, so mutual consistency
    /// holds by construction.
    pub fn from_man_partners(
        man_to_woman: Vec<u32>,
        num_women: usize,
    ) -> Result<Self, MatchingError> {
        let mut woman_to_man: Vec<Option<u32>> = vec![None; num_women];
        for (i, &w) in man_to_woman.iter().enumerate() {
            let man = i as u32 + 1;
            if w == 0 || w as usize > num_women {
                return Err(MatchingError::PartnerOutOfRange {
                    man,
                    woman: w,
                    l: num_women,
                });
            }
            if let Some(other) = woman_to_man[w as usize - 1] {
                return Err(MatchingError::NotInjective {
                    first: other,
                    second: man,
                });
            }
            woman_to_man[w as usize - 1] = Some(man);
        }
        Ok(Matching {
            man_to_woman,
            woman_to_man,
        })
    }

    /// Number of men (all matched).
    pub fn n(&self) -> usize {
        self.man_to_woman.len()
    }

    /// Number of women (matched or not).
    pub fn num_women(&self) -> usize {
        self.woman_to_man.len()
    }

    /// Partner of man `m` (1-based).
    #[inline]
    pub fn woman_of(&self, m: u32) -> u32 {
        self.man_to_woman[m as usize - 1]
    }

    /// Partner of woman `w`, or `None` when she is unmatched.
    #[inline]
    pub fn man_of(&self, w: u32) -> Option<u32> {
        self.woman_to_man[w as usize - 1]
    }

    /// Per-man partner ids.
    pub fn man_partners(&self) -> &[u32] {
        &self.man_to_woman
    }

    /// Per-woman partner ids, `None` for unmatched.
    pub fn woman_partners(&self) -> &[Option<u32>] {
        &self.woman_to_man
    }

    /// Ids of unmatched women, ascending. Always exactly `k` of them.
    pub fn unmatched_women(&self) -> Vec<u32> {
        self.woman_to_man
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_none())
            .map(|(i, _)| i as u32 + 1)
            .collect()
    }

    /// Serializes to JSON: both partner arrays, 1-based ids, `null` for
    /// unmatched women.
    pub fn to_json(&self) -> String {
        let file = MatchingFile {
            man_to_woman: self.man_to_woman.clone(),
            woman_to_man: self.woman_to_man.clone(),
        };
        serde_json::to_string(&file).expect("matching serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, MatchingError> {
        let file: MatchingFile =
            serde_json::from_str(text).map_err(|e| MatchingError::Json(e.to_string()))?;
        let matching = Self::from_man_partners(file.man_to_woman, file.woman_to_man.len())?;
        if matching.woman_to_man != file.woman_to_man {
            let w = matching
                .woman_to_man
                .iter()
                .zip(&file.woman_to_man)
                .position(|(a, b)| a != b)
                .unwrap() as u32
                + 1;
            return Err(MatchingError::InconsistentJson(w));
        }
        Ok(matching)
    }

    pub(crate) fn check_dimensions(&self, instance: &MarketInstance) -> Result<(), MatchingError> {
        if self.n() != instance.n() as usize || self.num_women() != instance.l() as usize {
            return Err(MatchingError::DimensionMismatch {
                matching_men: self.n(),
                matching_women: self.num_women(),
                n: instance.n() as usize,
                l: instance.l() as usize,
            });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchingFile {
    man_to_woman: Vec<u32>,
    woman_to_man: Vec<Option<u32>>,
}

/// A man and a woman who both prefer each other to their assigned partners.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockingPair {
    pub man: u32,
    pub woman: u32,
}

/// A collection of distinct stable matchings of one instance, with the
/// positions of the two lattice extremes.
#[derive(Clone, Debug)]
pub struct StableSet {
    /// Distinct stable matchings. The man-optimal matching comes first.
    pub matchings: Vec<Matching>,
    /// Set when an enumeration cap cut the output short.
    pub truncated: bool,
    /// Index of the man-optimal matching μ_M.
    pub man_optimal: usize,
    /// Index of the woman-optimal matching μ_W.
    pub woman_optimal: usize,
}

impl StableSet {
    pub fn len(&self) -> usize {
        self.matchings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matchings.is_empty()
    }

    pub fn man_optimal(&self) -> &Matching {
        &self.matchings[self.man_optimal]
    }

    pub fn woman_optimal(&self) -> &Matching {
        &self.matchings[self.woman_optimal]
    }
}

/// Gale–Shapley deferred acceptance with the given side proposing. Returns
/// the proposing side's optimal stable matching; every man is matched and
/// exactly `k` women are not.
///
/// Proposals are processed from a queue seeded in ascending agent order and
/// re-enqueueing displaced proposers at the back. The outcome is the same for
/// every proposal order; the fixed order only pins down execution traces.
pub fn deferred_acceptance(instance: &MarketInstance, proposing: Side) -> Matching {
    deferred_acceptance_counting(instance, proposing).0
}

/// As [`deferred_acceptance`], also reporting the number of proposals made
/// (at most n·(n+k)).
pub fn deferred_acceptance_counting(instance: &MarketInstance, proposing: Side) -> (Matching, u64) {
    match proposing {
        Side::Men => {
            let (partners, proposals) = propose(
                instance.men_prefs().rankings(),
                instance.women_prefs().rankings(),
            );
            let man_to_woman: Vec<u32> = partners
                .into_iter()
                .map(|w| w.expect("every man is matched under complete lists"))
                .collect();
            let matching = Matching::from_man_partners(man_to_woman, instance.l() as usize)
                .expect("deferred acceptance yields a valid matching");
            (matching, proposals)
        }
        Side::Women => {
            let (partners, proposals) = propose(
                instance.women_prefs().rankings(),
                instance.men_prefs().rankings(),
            );
            let mut man_to_woman = vec![0u32; instance.n() as usize];
            for (i, m) in partners.into_iter().enumerate() {
                if let Some(m) = m {
                    man_to_woman[m as usize - 1] = i as u32 + 1;
                }
            }
            debug_assert!(man_to_woman.iter().all(|&w| w != 0));
            let matching = Matching::from_man_partners(man_to_woman, instance.l() as usize)
                .expect("deferred acceptance yields a valid matching");
            (matching, proposals)
        }
    }
}

/// Proposer-side deferred acceptance over rank vectors; returns each
/// proposer's final partner (None when they exhausted their list) plus the
/// number of proposals made. Each proposer works down their list once, so
/// proposals are bounded by (number of proposers) × (list length).
fn propose(
    proposers: &[crate::perm::Permutation],
    receivers: &[crate::perm::Permutation],
) -> (Vec<Option<u32>>, u64) {
    let num_receivers = receivers.len();
    let orders: Vec<Vec<u32>> = proposers.iter().map(|p| p.to_order()).collect();
    let mut next_choice = vec![0usize; proposers.len()];
    let mut held: Vec<Option<u32>> = vec![None; num_receivers];
    let mut queue: VecDeque<u32> = (1..=proposers.len() as u32).collect();
    let mut proposals = 0u64;

    while let Some(p) = queue.pop_front() {
        let order = &orders[p as usize - 1];
        while next_choice[p as usize - 1] < order.len() {
            let r = order[next_choice[p as usize - 1]];
            next_choice[p as usize - 1] += 1;
            proposals += 1;
            let receiver_ranks = &receivers[r as usize - 1];
            match held[r as usize - 1] {
                None => {
                    held[r as usize - 1] = Some(p);
                    break;
                }
                Some(current) => {
                    if receiver_ranks.rank(p) < receiver_ranks.rank(current) {
                        held[r as usize - 1] = Some(p);
                        queue.push_back(current);
                        break;
                    }
                }
            }
        }
    }

    let mut partners = vec![None; proposers.len()];
    for (i, &h) in held.iter().enumerate() {
        if let Some(p) = h {
            partners[p as usize - 1] = Some(i as u32 + 1);
        }
    }
    (partners, proposals)
}

/// All blocking pairs of `matching`, in ascending man order and each man's
/// preference order. Unmatched women accept any man.
pub fn blocking_pairs(
    instance: &MarketInstance,
    matching: &Matching,
) -> Result<Vec<BlockingPair>, MatchingError> {
    matching.check_dimensions(instance)?;
    let mut pairs = Vec::new();
    for m in 1..=instance.n() {
        let ranking = instance.men_prefs().ranking(m);
        let current_rank = ranking.rank(matching.woman_of(m));
        for w in ranking.to_order() {
            if ranking.rank(w) >= current_rank {
                break;
            }
            let prefers_m = match matching.man_of(w) {
                None => true,
                Some(h) => {
                    let wr = instance.women_prefs().ranking(w);
                    wr.rank(m) < wr.rank(h)
                }
            };
            if prefers_m {
                pairs.push(BlockingPair { man: m, woman: w });
            }
        }
    }
    Ok(pairs)
}

/// True iff the matching has no blocking pair. Short-circuits on the first
/// block; `blocking_pairs` is the exhaustive variant.
pub fn is_stable(instance: &MarketInstance, matching: &Matching) -> Result<bool, MatchingError> {
    matching.check_dimensions(instance)?;
    Ok(first_blocking_pair(instance, matching).is_none())
}

pub(crate) fn first_blocking_pair(
    instance: &MarketInstance,
    matching: &Matching,
) -> Option<BlockingPair> {
    for m in 1..=instance.n() {
        let ranking = instance.men_prefs().ranking(m);
        let current_rank = ranking.rank(matching.woman_of(m));
        for w in ranking.to_order() {
            if ranking.rank(w) >= current_rank {
                break;
            }
            let prefers_m = match matching.man_of(w) {
                None => true,
                Some(h) => {
                    let wr = instance.women_prefs().ranking(w);
                    wr.rank(m) < wr.rank(h)
                }
            };
            if prefers_m {
                return Some(BlockingPair { man: m, woman: w });
            }
        }
    }
    None
}
