//! Enumeration of all stable matchings through the rotation poset.
//!
//! Starting from the man-optimal matching, repeatedly eliminating exposed
//! rotations walks the lattice down to the woman-optimal matching; every
//! complete elimination sequence uses each rotation exactly once, so a single
//! pass discovers the full rotation set. Stable matchings correspond
//! one-to-one to closed subsets (down-sets) of the rotation precedence poset,
//! which a depth-first sweep emits up to the caller's cap.
//!
//! Unbalanced markets need no separate reduction: a woman unmatched under the
//! man-optimal matching is unmatched in every stable matching, and a man whose
//! successor scan reaches such a woman can never move again, so the scan
//! simply stops there.

use crate::market::{MarketInstance, Side};

use super::{Matching, MatchingError, StableSet, deferred_acceptance};

/// One rotation: `pairs[i] = (man, woman he currently holds)`; elimination
/// moves each man to the next pair's woman (cyclically).
struct Rotation {
    pairs: Vec<(u32, u32)>,
}

impl Rotation {
    fn new_wife(&self, i: usize) -> u32 {
        self.pairs[(i + 1) % self.pairs.len()].1
    }
}

/// All stable matchings of `instance`, up to `cap` of them.
///
/// When the instance has at most `cap` stable matchings they are all emitted
/// and `truncated` is false; otherwise a prefix of size `cap` is returned with
/// the flag set. The man-optimal matching is always at index 0 and the
/// woman-optimal matching is always present.
pub fn enumerate_stable(instance: &MarketInstance, cap: usize) -> Result<StableSet, MatchingError> {
    if cap < 2 {
        return Err(MatchingError::CapTooSmall(cap));
    }
    let mu_m = deferred_acceptance(instance, Side::Men);
    let mu_w = deferred_acceptance(instance, Side::Women);

    let discovery = discover_rotations(instance, &mu_m, &mu_w);
    if discovery.rotations.is_empty() {
        debug_assert_eq!(mu_m, mu_w);
        return Ok(StableSet {
            matchings: vec![mu_m],
            truncated: false,
            man_optimal: 0,
            woman_optimal: 0,
        });
    }
    let preds = predecessors(instance, &mu_m, &discovery);
    let (mut matchings, truncated) =
        emit_down_sets(instance, &mu_m, &discovery.rotations, &preds, cap);

    debug_assert_eq!(matchings[0], mu_m);
    let woman_optimal = match matchings.iter().position(|m| *m == mu_w) {
        Some(idx) => idx,
        None => {
            // Truncation dropped the all-rotations down-set; keep the extreme
            // by replacing the final entry.
            debug_assert!(truncated);
            let last = matchings.len() - 1;
            matchings[last] = mu_w;
            last
        }
    };
    Ok(StableSet {
        matchings,
        truncated,
        man_optimal: 0,
        woman_optimal,
    })
}

struct Discovery {
    rotations: Vec<Rotation>,
    /// Rotation ids moving each man, in elimination order (0-based man index).
    by_man: Vec<Vec<usize>>,
    /// `(rotation id, new partner)` for each woman, in elimination order
    /// (0-based woman index). Partners strictly improve along the chain.
    by_woman: Vec<Vec<(usize, u32)>>,
}

/// Walks from μ_M to μ_W, eliminating one exposed rotation at a time.
fn discover_rotations(instance: &MarketInstance, mu_m: &Matching, mu_w: &Matching) -> Discovery {
    let n = instance.n() as usize;
    let l = instance.l() as usize;
    let men_orders: Vec<Vec<u32>> = instance
        .men_prefs()
        .rankings()
        .iter()
        .map(|p| p.to_order())
        .collect();

    let mut cur_m2w: Vec<u32> = mu_m.man_partners().to_vec();
    let mut cur_w2m: Vec<Option<u32>> = (1..=l as u32).map(|w| mu_m.man_of(w)).collect();
    // Next list position each man's successor scan will examine. A woman who
    // rejects a man only improves afterwards, so the pointer never backs up.
    let mut ptr: Vec<usize> = (0..n)
        .map(|m| instance.men_prefs().ranking(m as u32 + 1).rank(cur_m2w[m]) as usize)
        .collect();
    let mut frozen = vec![false; n];

    let mut rotations: Vec<Rotation> = Vec::new();
    let mut by_man: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut by_woman: Vec<Vec<(usize, u32)>> = vec![Vec::new(); l];

    // successor(m): first woman after m's current partner who prefers m to
    // her current partner. Hitting an unmatched woman (or the list end)
    // freezes m: no stable matching moves him below that point.
    let successor = |m: usize,
                     ptr: &mut Vec<usize>,
                     frozen: &mut Vec<bool>,
                     cur_w2m: &Vec<Option<u32>>|
     -> Option<u32> {
        let order = &men_orders[m];
        loop {
            let idx = ptr[m];
            if idx >= order.len() {
                frozen[m] = true;
                return None;
            }
            let w = order[idx];
            match cur_w2m[w as usize - 1] {
                None => {
                    frozen[m] = true;
                    return None;
                }
                Some(holder) => {
                    let wr = instance.women_prefs().ranking(w);
                    if wr.rank(m as u32 + 1) < wr.rank(holder) {
                        return Some(w);
                    }
                    ptr[m] += 1;
                }
            }
        }
    };

    'outer: loop {
        // One sweep over the successor graph g(m) = partner(successor(m));
        // any cycle of g is an exposed rotation.
        let mut color = vec![0u8; n]; // 0 fresh, 1 on current path, 2 leads nowhere
        for start in 0..n {
            if color[start] != 0 || frozen[start] {
                continue;
            }
            let mut path: Vec<usize> = Vec::new();
            let mut m = start;
            let cycle_entry = loop {
                if frozen[m] || color[m] == 2 {
                    break None;
                }
                if color[m] == 1 {
                    break Some(m);
                }
                color[m] = 1;
                path.push(m);
                match successor(m, &mut ptr, &mut frozen, &cur_w2m) {
                    None => break None,
                    Some(w) => {
                        m = cur_w2m[w as usize - 1].expect("successor woman is matched") as usize
                            - 1;
                    }
                }
            };
            let Some(entry) = cycle_entry else {
                for &x in &path {
                    color[x] = 2;
                }
                continue;
            };

            let pos = path
                .iter()
                .position(|&x| x == entry)
                .expect("entry on path");
            let cycle = &path[pos..];
            let old_wives: Vec<u32> = cycle.iter().map(|&mi| cur_m2w[mi]).collect();
            let rot_id = rotations.len();
            let r = cycle.len();
            for i in 0..r {
                let mi = cycle[i];
                let new_w = old_wives[(i + 1) % r];
                cur_m2w[mi] = new_w;
                cur_w2m[new_w as usize - 1] = Some(mi as u32 + 1);
                by_man[mi].push(rot_id);
                by_woman[new_w as usize - 1].push((rot_id, mi as u32 + 1));
                // scan resumes just past the new wife
                ptr[mi] += 1;
            }
            rotations.push(Rotation {
                pairs: cycle
                    .iter()
                    .zip(&old_wives)
                    .map(|(&mi, &w)| (mi as u32 + 1, w))
                    .collect(),
            });
            // the successor graph changed; restart the sweep
            continue 'outer;
        }
        break;
    }

    debug_assert_eq!(cur_m2w.as_slice(), mu_w.man_partners());
    Discovery {
        rotations,
        by_man,
        by_woman,
    }
}

/// Direct predecessors of every rotation. The transitive closure of these
/// edges is the rotation poset; discovery order is a linear extension, so
/// every predecessor id is smaller than the successor id.
fn predecessors(instance: &MarketInstance, mu_m: &Matching, d: &Discovery) -> Vec<Vec<usize>> {
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); d.rotations.len()];

    // A rotation moving m away from w requires the rotation that moved him to
    // w first: consecutive entries of each man's chain.
    for chain in &d.by_man {
        for pair in chain.windows(2) {
            preds[pair[1]].push(pair[0]);
        }
    }

    // A rotation moving m from w_old to w_new requires every woman strictly
    // between them on m's list to be holding someone she prefers to m, which
    // for a woman who initially likes m must be arranged by the (unique)
    // earlier rotation lifting her past m.
    for (rho_id, rot) in d.rotations.iter().enumerate() {
        for i in 0..rot.pairs.len() {
            let (m, w_old) = rot.pairs[i];
            let w_new = rot.new_wife(i);
            let ranking = instance.men_prefs().ranking(m);
            let order = ranking.to_order();
            let a = ranking.rank(w_old) as usize;
            let b = ranking.rank(w_new) as usize;
            debug_assert!(a < b);
            for &w in &order[a..b - 1] {
                let wr = instance.women_prefs().ranking(w);
                let m_rank = wr.rank(m);
                let h0 = mu_m
                    .man_of(w)
                    .expect("women passed over by a rotation scan are matched");
                if wr.rank(h0) < m_rank {
                    continue; // rejects m from the start
                }
                let lift = d.by_woman[w as usize - 1]
                    .iter()
                    .find(|&&(_, new_man)| wr.rank(new_man) < m_rank)
                    .expect("an eliminable rotation implies the lift exists");
                debug_assert!(lift.0 < rho_id);
                preds[rho_id].push(lift.0);
            }
        }
    }

    for p in &mut preds {
        p.sort_unstable();
        p.dedup();
    }
    preds
}

/// Emits the matchings of all down-sets of the rotation poset, up to `cap`,
/// in depth-first order with the exclude branch first (so the empty down-set
/// μ_M comes first and the full down-set μ_W last).
fn emit_down_sets(
    instance: &MarketInstance,
    mu_m: &Matching,
    rotations: &[Rotation],
    preds: &[Vec<usize>],
    cap: usize,
) -> (Vec<Matching>, bool) {
    enum Task {
        Visit(usize),
        Apply(usize),
        Undo(usize),
    }

    let l = instance.l() as usize;
    let total = rotations.len();
    let mut cur_m2w: Vec<u32> = mu_m.man_partners().to_vec();
    let mut cur_w2m: Vec<Option<u32>> = (1..=l as u32).map(|w| mu_m.man_of(w)).collect();
    let mut included = vec![false; total];
    let mut out: Vec<Matching> = Vec::new();
    let mut truncated = false;

    let mut stack = vec![Task::Visit(0)];
    while let Some(task) = stack.pop() {
        match task {
            Task::Visit(i) => {
                if out.len() >= cap {
                    // any pending visit still leads to at least one more leaf
                    truncated = true;
                    break;
                }
                if i == total {
                    out.push(
                        Matching::from_man_partners(cur_m2w.clone(), l)
                            .expect("rotation elimination preserves matching validity"),
                    );
                    continue;
                }
                if preds[i].iter().all(|&p| included[p]) {
                    stack.push(Task::Undo(i));
                    stack.push(Task::Visit(i + 1));
                    stack.push(Task::Apply(i));
                }
                stack.push(Task::Visit(i + 1));
            }
            Task::Apply(i) => {
                let rot = &rotations[i];
                for (j, &(m, _)) in rot.pairs.iter().enumerate() {
                    let w = rot.new_wife(j);
                    cur_m2w[m as usize - 1] = w;
                    cur_w2m[w as usize - 1] = Some(m);
                }
                included[i] = true;
            }
            Task::Undo(i) => {
                let rot = &rotations[i];
                for &(m, w) in &rot.pairs {
                    cur_m2w[m as usize - 1] = w;
                    cur_w2m[w as usize - 1] = Some(m);
                }
                included[i] = false;
            }
        }
    }
    (out, truncated)
}
