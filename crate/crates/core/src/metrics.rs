//! Every quantity the market experiments are stated in: profile
//! displacements, per-pair rank gaps, the Holzman mutual-rank bound, and
//! average-rank welfare.

use serde::Serialize;
use thiserror::Error;

use crate::market::{MarketInstance, PreferenceProfile};
use crate::matching::{Matching, MatchingError, StableSet, first_blocking_pair};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error("matching is unstable: ({man}, {woman}) is a blocking pair")]
    Unstable { man: u32, woman: u32 },
}

/// Spread of each target's rank across a profile's rankings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DisplacementSummary {
    /// `per_target[x - 1] = δ(x) = max_r r(x) − min_r r(x)`.
    pub per_target: Vec<u32>,
    /// `Δ(R) = max_x δ(x)`; at most `t − 1`.
    pub delta: u32,
}

/// Maximal displacement Δ(R) of a profile: how far the rankings disagree
/// about any single target.
pub fn maximal_displacement(profile: &PreferenceProfile) -> DisplacementSummary {
    let t = profile.ranking_len();
    let mut min_rank = vec![u32::MAX; t];
    let mut max_rank = vec![0u32; t];
    for ranking in profile.rankings() {
        for (i, &r) in ranking.ranks().iter().enumerate() {
            min_rank[i] = min_rank[i].min(r);
            max_rank[i] = max_rank[i].max(r);
        }
    }
    let per_target: Vec<u32> = max_rank
        .iter()
        .zip(&min_rank)
        .map(|(&hi, &lo)| hi - lo)
        .collect();
    let delta = per_target.iter().copied().max().unwrap_or(0);
    DisplacementSummary { per_target, delta }
}

/// Rank gaps of one matched pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairGap {
    pub man: u32,
    pub woman: u32,
    /// `|r_m(w) − r_w(m)|`: how differently the two rank each other.
    pub mutual: u32,
    /// `|r(m) − r(w)|`: distance between their central-order ranks.
    pub central: u32,
    /// `|r(m) − r(w)| / n`; populated only in balanced markets, where the
    /// quantile rank `q_i = r(i)/n` is defined.
    pub quantile: Option<f64>,
}

/// Per-pair gaps for a matching, with their maxima.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairGapReport {
    pub pairs: Vec<PairGap>,
    pub max_mutual: u32,
    pub max_central: u32,
    pub max_quantile: Option<f64>,
}

/// Mutual, central, and (when balanced) quantile rank gaps of every matched
/// pair. Central ranks coincide with agent ids by the generation contract.
pub fn pair_gaps(
    instance: &MarketInstance,
    matching: &Matching,
) -> Result<PairGapReport, MetricsError> {
    matching.check_dimensions(instance)?;
    let n = instance.n();
    let balanced = instance.k() == 0;
    let mut pairs = Vec::with_capacity(n as usize);
    let mut max_mutual = 0u32;
    let mut max_central = 0u32;
    for m in 1..=n {
        let w = matching.woman_of(m);
        let r_m_w = instance.men_prefs().ranking(m).rank(w);
        let r_w_m = instance.women_prefs().ranking(w).rank(m);
        let mutual = r_m_w.abs_diff(r_w_m);
        let central = m.abs_diff(w);
        let quantile = balanced.then(|| central as f64 / n as f64);
        max_mutual = max_mutual.max(mutual);
        max_central = max_central.max(central);
        pairs.push(PairGap {
            man: m,
            woman: w,
            mutual,
            central,
            quantile,
        });
    }
    Ok(PairGapReport {
        pairs,
        max_mutual,
        max_central,
        max_quantile: balanced.then(|| max_central as f64 / n as f64),
    })
}

/// Outcome of the mutual-rank bound check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolzmanCheck {
    /// `2·max{Δ(R_W), Δ(R_M)}`.
    pub bound: u32,
    /// Whether every matched pair satisfies `|r_m(w) − r_w(m)| <= bound`.
    pub holds: bool,
    /// A violating pair, when one exists. For a stable matching the bound is
    /// a theorem, so a witness indicates an implementation bug.
    pub witness: Option<PairGap>,
}

/// Checks `|r_m(w) − r_w(m)| <= 2·max{Δ(R_W), Δ(R_M)}` for every matched
/// pair. The matching must be stable; a blocking pair found during the
/// defensive check is reported as an error instead of a bound verdict.
pub fn holzman_check(
    instance: &MarketInstance,
    matching: &Matching,
) -> Result<HolzmanCheck, MetricsError> {
    matching.check_dimensions(instance)?;
    if let Some(bp) = first_blocking_pair(instance, matching) {
        return Err(MetricsError::Unstable {
            man: bp.man,
            woman: bp.woman,
        });
    }
    let delta_m = maximal_displacement(instance.men_prefs()).delta;
    let delta_w = maximal_displacement(instance.women_prefs()).delta;
    let bound = 2 * delta_m.max(delta_w);
    let report = pair_gaps(instance, matching)?;
    let witness = report.pairs.iter().find(|p| p.mutual > bound).copied();
    Ok(HolzmanCheck {
        bound,
        holds: witness.is_none(),
        witness,
    })
}

/// Average rank each side assigns to its partners, over matched agents only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WelfareReport {
    /// Men's average ranking of their partners; in `[1, n + k]`.
    pub a_m: f64,
    /// Matched women's average ranking of their partners; in `[1, n]`. The
    /// `k` women unmatched under every stable matching never enter the sum.
    pub a_w: f64,
}

/// `A_M(μ)` and `A_W(μ)`: each average runs over exactly the `n` matched
/// agents of its side.
pub fn average_ranks(
    instance: &MarketInstance,
    matching: &Matching,
) -> Result<WelfareReport, MetricsError> {
    matching.check_dimensions(instance)?;
    let n = instance.n();
    let mut sum_m = 0u64;
    let mut sum_w = 0u64;
    for m in 1..=n {
        let w = matching.woman_of(m);
        sum_m += u64::from(instance.men_prefs().ranking(m).rank(w));
        sum_w += u64::from(instance.women_prefs().ranking(w).rank(m));
    }
    Ok(WelfareReport {
        a_m: sum_m as f64 / n as f64,
        a_w: sum_w as f64 / n as f64,
    })
}

/// Welfare comparisons across a stable set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WelfareRatios {
    /// `A_M(μ_W) / A_M(μ_M)`, men's pessimal over optimal; at least 1.
    pub am_pessimal_over_optimal: f64,
    /// `A_W(μ_M) / A_W(μ_W)`, women's pessimal over optimal; at least 1.
    pub aw_pessimal_over_optimal: f64,
    /// `max_μ A_W(μ) / A_M(μ)` over the set's members.
    pub max_aw_over_am: f64,
    /// `max_μ A_M(μ) / A_W(μ)` over the set's members.
    pub max_am_over_aw: f64,
}

/// Optimal-vs-pessimal and cross-side welfare ratios over `set`'s members.
pub fn welfare_ratios(
    instance: &MarketInstance,
    set: &StableSet,
) -> Result<WelfareRatios, MetricsError> {
    let at_mu_m = average_ranks(instance, set.man_optimal())?;
    let at_mu_w = average_ranks(instance, set.woman_optimal())?;
    let mut max_aw_over_am = f64::MIN;
    let mut max_am_over_aw = f64::MIN;
    for mu in &set.matchings {
        let welfare = average_ranks(instance, mu)?;
        max_aw_over_am = max_aw_over_am.max(welfare.a_w / welfare.a_m);
        max_am_over_aw = max_am_over_aw.max(welfare.a_m / welfare.a_w);
    }
    Ok(WelfareRatios {
        am_pessimal_over_optimal: at_mu_w.a_m / at_mu_m.a_m,
        aw_pessimal_over_optimal: at_mu_m.a_w / at_mu_w.a_w,
        max_aw_over_am,
        max_am_over_aw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{MarketConfig, MarketInstance, Side};
    use crate::matching::{brute_force_stable, deferred_acceptance, enumerate_stable};
    use crate::perm::Permutation;

    fn generate(n: u32, k: u32, phi_m: f64, phi_w: f64, seed: u64) -> MarketInstance {
        MarketInstance::generate(&MarketConfig {
            n,
            k,
            phi_m,
            phi_w,
            seed,
        })
        .unwrap()
    }

    fn profile_from_orders(side: Side, orders: &[&[u32]]) -> PreferenceProfile {
        PreferenceProfile::new(
            side,
            orders
                .iter()
                .map(|o| Permutation::from_order(o.to_vec()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn unanimous_profile_has_zero_displacement() {
        let inst = generate(6, 0, 0.0, 0.0, 0);
        let summary = maximal_displacement(inst.men_prefs());
        assert_eq!(summary.delta, 0);
        assert!(summary.per_target.iter().all(|&d| d == 0));
    }

    #[test]
    fn opposed_rankings_have_full_spread() {
        let profile = profile_from_orders(Side::Men, &[&[1, 2, 3], &[3, 2, 1]]);
        let summary = maximal_displacement(&profile);
        assert_eq!(summary.per_target, vec![2, 0, 2]);
        assert_eq!(summary.delta, 2);
    }

    #[test]
    fn displacement_matches_nested_loop_oracle() {
        let inst = generate(5, 2, 0.7, 0.4, 11);
        for profile in [inst.men_prefs(), inst.women_prefs()] {
            let summary = maximal_displacement(profile);
            let t = profile.ranking_len() as u32;
            for x in 1..=t {
                let ranks: Vec<u32> = (1..=profile.len() as u32)
                    .map(|agent| profile.rank_of(agent, x).unwrap())
                    .collect();
                let expected = ranks.iter().max().unwrap() - ranks.iter().min().unwrap();
                assert_eq!(summary.per_target[x as usize - 1], expected);
            }
        }
    }

    #[test]
    fn unanimous_assortative_matching_has_zero_gaps() {
        let inst = generate(5, 0, 0.0, 0.0, 0);
        let mu = deferred_acceptance(&inst, Side::Men);
        let report = pair_gaps(&inst, &mu).unwrap();
        assert_eq!(report.max_mutual, 0);
        assert_eq!(report.max_central, 0);
        assert_eq!(report.max_quantile, Some(0.0));
        for p in &report.pairs {
            assert_eq!((p.mutual, p.central, p.quantile), (0, 0, Some(0.0)));
        }
    }

    #[test]
    fn hand_checked_two_by_two_gaps() {
        // man 1 ranks (w2, w1); woman 2 ranks (m2, m1); everyone else identity.
        // matching m1↔w2, m2↔w1: r_m1(w2) = 1, r_w2(m1) = 2 → mutual gap 1
        let inst = crate::matching::tests::instance_from_orders(
            2,
            0,
            &[&[2, 1], &[1, 2]],
            &[&[1, 2], &[2, 1]],
        );
        let mu = Matching::from_man_partners(vec![2, 1], 2).unwrap();
        let report = pair_gaps(&inst, &mu).unwrap();
        let p1 = report.pairs.iter().find(|p| p.man == 1).unwrap();
        assert_eq!(p1.woman, 2);
        assert_eq!(p1.mutual, 1);
        assert_eq!(p1.central, 1);
        assert_eq!(p1.quantile, Some(0.5));
    }

    #[test]
    fn quantile_gap_is_central_gap_over_n_when_balanced() {
        let inst = generate(8, 0, 0.9, 0.9, 3);
        let mu = deferred_acceptance(&inst, Side::Men);
        let report = pair_gaps(&inst, &mu).unwrap();
        for p in &report.pairs {
            assert_eq!(p.quantile, Some(p.central as f64 / 8.0));
        }
        assert_eq!(report.max_quantile, Some(report.max_central as f64 / 8.0));
    }

    #[test]
    fn quantile_gap_absent_when_unbalanced() {
        let inst = generate(5, 1, 0.5, 0.5, 4);
        let mu = deferred_acceptance(&inst, Side::Men);
        let report = pair_gaps(&inst, &mu).unwrap();
        assert_eq!(report.max_quantile, None);
        assert!(report.pairs.iter().all(|p| p.quantile.is_none()));
    }

    /// Triangle chain: |r(w) − r(m)| <= |r(w) − r_m(w)| + |r_m(w) − r_w(m)|
    /// + |r_w(m) − r(m)| holds identically, as an arithmetic fact.
    #[test]
    fn triangle_chain_holds_exactly() {
        for seed in 0..30u64 {
            let inst = generate(7, 1, 0.8, 0.6, seed);
            let mu = deferred_acceptance(&inst, Side::Men);
            for m in 1..=7u32 {
                let w = mu.woman_of(m);
                let r_m_w = i64::from(inst.men_prefs().ranking(m).rank(w));
                let r_w_m = i64::from(inst.women_prefs().ranking(w).rank(m));
                let r_m = i64::from(m);
                let r_w = i64::from(w);
                assert!(
                    (r_w - r_m).abs()
                        <= (r_w - r_m_w).abs() + (r_m_w - r_w_m).abs() + (r_w_m - r_m).abs()
                );
            }
        }
    }

    #[test]
    fn holzman_bound_holds_with_slack_on_unanimous_market() {
        let inst = generate(4, 0, 0.0, 0.0, 0);
        let mu = deferred_acceptance(&inst, Side::Men);
        let check = holzman_check(&inst, &mu).unwrap();
        assert!(check.holds);
        assert_eq!(check.bound, 0);
        assert_eq!(check.witness, None);
    }

    #[test]
    fn holzman_rejects_unstable_matchings() {
        let inst = generate(2, 0, 0.0, 0.0, 0);
        let anti = Matching::from_man_partners(vec![2, 1], 2).unwrap();
        assert_eq!(
            holzman_check(&inst, &anti).unwrap_err(),
            MetricsError::Unstable { man: 1, woman: 1 }
        );
    }

    #[test]
    fn holzman_holds_over_brute_forced_sets() {
        for seed in 0..100u64 {
            let inst = generate(2 + (seed % 6) as u32, (seed % 3) as u32, 0.9, 0.9, seed);
            let set = brute_force_stable(&inst).unwrap();
            for mu in &set.matchings {
                let check = holzman_check(&inst, mu).unwrap();
                assert!(check.holds, "seed {seed}: witness {:?}", check.witness);
            }
        }
    }

    #[test]
    fn unanimous_welfare_is_midpoint() {
        for k in [0u32, 1] {
            let inst = generate(5, k, 0.0, 0.0, 0);
            let mu = deferred_acceptance(&inst, Side::Men);
            let welfare = average_ranks(&inst, &mu).unwrap();
            assert_eq!(welfare.a_m, 3.0);
            assert_eq!(welfare.a_w, 3.0);
        }
    }

    #[test]
    fn single_man_market_welfare() {
        let inst = crate::matching::tests::instance_from_orders(1, 1, &[&[2, 1]], &[&[1], &[1]]);
        let mu = deferred_acceptance(&inst, Side::Men);
        assert_eq!(mu.woman_of(1), 2);
        let welfare = average_ranks(&inst, &mu).unwrap();
        assert_eq!(welfare.a_m, 1.0);
        assert_eq!(welfare.a_w, 1.0);
    }

    #[test]
    fn average_ranks_match_direct_summation() {
        let inst = generate(6, 0, 0.6, 0.6, 21);
        let mu = deferred_acceptance(&inst, Side::Women);
        let welfare = average_ranks(&inst, &mu).unwrap();
        let mut sum_m = 0.0;
        let mut sum_w = 0.0;
        for m in 1..=6u32 {
            let w = mu.woman_of(m);
            sum_m += inst.men_prefs().rank_of(m, w).unwrap() as f64;
            sum_w += inst.women_prefs().rank_of(w, m).unwrap() as f64;
        }
        assert_eq!(welfare.a_m, sum_m / 6.0);
        assert_eq!(welfare.a_w, sum_w / 6.0);
    }

    #[test]
    fn ratios_are_one_on_unanimous_markets() {
        let inst = generate(5, 0, 0.0, 0.0, 0);
        let set = enumerate_stable(&inst, 100).unwrap();
        let ratios = welfare_ratios(&inst, &set).unwrap();
        assert_eq!(ratios.am_pessimal_over_optimal, 1.0);
        assert_eq!(ratios.aw_pessimal_over_optimal, 1.0);
        assert_eq!(ratios.max_aw_over_am, 1.0);
        assert_eq!(ratios.max_am_over_aw, 1.0);
    }

    #[test]
    fn pessimal_ratios_are_at_least_one() {
        for seed in 0..60u64 {
            let inst = generate(7, (seed % 2) as u32, 1.0, 1.0, seed);
            let set = enumerate_stable(&inst, 10_000).unwrap();
            let ratios = welfare_ratios(&inst, &set).unwrap();
            assert!(ratios.am_pessimal_over_optimal >= 1.0);
            assert!(ratios.aw_pessimal_over_optimal >= 1.0);
        }
    }

    #[test]
    fn ratios_agree_between_enumeration_and_brute_force() {
        for seed in 0..40u64 {
            let inst = generate(7, 0, 1.0, 1.0, seed);
            let fast = enumerate_stable(&inst, 1_000_000).unwrap();
            let brute = brute_force_stable(&inst).unwrap();
            let a = welfare_ratios(&inst, &fast).unwrap();
            let b = welfare_ratios(&inst, &brute).unwrap();
            assert!((a.am_pessimal_over_optimal - b.am_pessimal_over_optimal).abs() < 1e-12);
            assert!((a.aw_pessimal_over_optimal - b.aw_pessimal_over_optimal).abs() < 1e-12);
            assert!((a.max_aw_over_am - b.max_aw_over_am).abs() < 1e-12);
            assert!((a.max_am_over_aw - b.max_am_over_aw).abs() < 1e-12);
        }
    }

    /// Welfare bracketing: every stable matching's A_M lies between the
    /// optimal and pessimal extremes; symmetrically for women.
    #[test]
    fn welfare_is_bracketed_by_extremes() {
        for seed in 0..40u64 {
            let inst = generate(8, 1, 1.0, 1.0, seed);
            let set = enumerate_stable(&inst, 10_000).unwrap();
            let lo_m = average_ranks(&inst, set.man_optimal()).unwrap().a_m;
            let hi_m = average_ranks(&inst, set.woman_optimal()).unwrap().a_m;
            let lo_w = average_ranks(&inst, set.woman_optimal()).unwrap().a_w;
            let hi_w = average_ranks(&inst, set.man_optimal()).unwrap().a_w;
            for mu in &set.matchings {
                let welfare = average_ranks(&inst, mu).unwrap();
                assert!(welfare.a_m >= lo_m && welfare.a_m <= hi_m);
                assert!(welfare.a_w >= lo_w && welfare.a_w <= hi_w);
            }
        }
    }

    #[test]
    fn dimension_mismatch_propagates() {
        let inst = generate(3, 0, 0.5, 0.5, 0);
        let mu = Matching::from_man_partners(vec![1, 2], 2).unwrap();
        assert!(matches!(
            pair_gaps(&inst, &mu),
            Err(MetricsError::Matching(
                MatchingError::DimensionMismatch { .. }
            ))
        ));
        assert!(matches!(
            average_ranks(&inst, &mu),
            Err(MetricsError::Matching(
                MatchingError::DimensionMismatch { .. }
            ))
        ));
    }
}
