//! Exhaustive stable-set oracle for small instances.
//!
//! Walks every injective assignment of men to women by backtracking, pruning
//! any partial assignment that already contains a blocking pair; completions
//! cannot repair a block between two already-matched agents, so the pruning
//! is lossless and the survivors are exactly the stable matchings.

use crate::market::MarketInstance;

use super::{Matching, MatchingError, StableSet};

const MAX_N: u32 = 9;
const MAX_L: u32 = 10;

/// Ground-truth enumeration of all stable matchings, guarded to `n <= 9` and
/// `n + k <= 10`.
pub fn brute_force_stable(instance: &MarketInstance) -> Result<StableSet, MatchingError> {
    let n = instance.n();
    let l = instance.l();
    if n > MAX_N || l > MAX_L {
        return Err(MatchingError::BruteForceGuard {
            n,
            l,
            max_n: MAX_N,
            max_l: MAX_L,
        });
    }

    let mut partner = vec![0u32; n as usize];
    let mut taken = vec![false; l as usize + 1];
    let mut found: Vec<Matching> = Vec::new();
    search(instance, 0, &mut partner, &mut taken, &mut found);

    debug_assert!(!found.is_empty(), "a stable matching always exists");
    debug_assert!(
        found.iter().all(|m| super::is_stable(instance, m).unwrap()),
        "brute force emitted an unstable matching"
    );

    let man_optimal = found
        .iter()
        .position(|a| found.iter().all(|b| men_weakly_prefer(instance, a, b)))
        .expect("the stable lattice has a man-optimal element");
    let woman_optimal = found
        .iter()
        .position(|a| found.iter().all(|b| women_weakly_prefer(instance, a, b)))
        .expect("the stable lattice has a woman-optimal element");

    Ok(StableSet {
        matchings: found,
        truncated: false,
        man_optimal,
        woman_optimal,
    })
}

fn search(
    instance: &MarketInstance,
    next_man: usize,
    partner: &mut Vec<u32>,
    taken: &mut Vec<bool>,
    found: &mut Vec<Matching>,
) {
    let n = instance.n() as usize;
    let l = instance.l();
    if next_man == n {
        // matched-matched pairs were screened incrementally; an unmatched
        // woman blocks with any man who prefers her to his partner
        for w in 1..=l {
            if taken[w as usize] {
                continue;
            }
            for m in 1..=n as u32 {
                let ranking = instance.men_prefs().ranking(m);
                if ranking.rank(w) < ranking.rank(partner[m as usize - 1]) {
                    return;
                }
            }
        }
        found.push(
            Matching::from_man_partners(partner.clone(), l as usize)
                .expect("backtracking builds injective assignments"),
        );
        return;
    }

    let m = next_man as u32 + 1;
    let m_ranking = instance.men_prefs().ranking(m);
    'candidates: for w in 1..=l {
        if taken[w as usize] {
            continue;
        }
        let w_ranking = instance.women_prefs().ranking(w);
        for e in 1..=next_man as u32 {
            let we = partner[e as usize - 1];
            let e_ranking = instance.men_prefs().ranking(e);
            // (e, w) blocks: e prefers w over his partner, w prefers e over m
            if e_ranking.rank(w) < e_ranking.rank(we) && w_ranking.rank(e) < w_ranking.rank(m) {
                continue 'candidates;
            }
            // (m, we) blocks: m prefers we over w, we prefers m over e
            let we_ranking = instance.women_prefs().ranking(we);
            if m_ranking.rank(we) < m_ranking.rank(w) && we_ranking.rank(m) < we_ranking.rank(e) {
                continue 'candidates;
            }
        }
        partner[next_man] = w;
        taken[w as usize] = true;
        search(instance, next_man + 1, partner, taken, found);
        taken[w as usize] = false;
    }
    partner[next_man] = 0;
}

fn men_weakly_prefer(instance: &MarketInstance, a: &Matching, b: &Matching) -> bool {
    (1..=instance.n()).all(|m| {
        let ranking = instance.men_prefs().ranking(m);
        ranking.rank(a.woman_of(m)) <= ranking.rank(b.woman_of(m))
    })
}

fn women_weakly_prefer(instance: &MarketInstance, a: &Matching, b: &Matching) -> bool {
    (1..=instance.l()).all(|w| match (a.man_of(w), b.man_of(w)) {
        (None, None) => true,
        (Some(x), Some(y)) => {
            let ranking = instance.women_prefs().ranking(w);
            ranking.rank(x) <= ranking.rank(y)
        }
        // matched beats unmatched; cannot occur for stable sets (rural
        // hospitals), handled for completeness
        (Some(_), None) => true,
        (None, Some(_)) => false,
    })
}
