//! Market instance generation: two sides with independent Mallows preferences.
//!
//! A market has `n` men and `l = n + k` women. Every man ranks all women
//! (a permutation of `1..=l` drawn from Mallows(φ_m, l)) and every woman
//! ranks all men (drawn from Mallows(φ_w, n)); nobody prefers staying single.
//! Agent identity coincides with central-order rank: agent `i` is the i-th
//! best of their side in the reference order, so the Mallows measure is taken
//! against the identity without loss of generality.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mallows::{self, MallowsParams};
use crate::perm::Permutation;
use crate::rng::{self, STREAM_MEN, STREAM_WOMEN};

/// Default ceiling on `n + k`; preference storage is Θ((n+k)·n), which is the
/// binding constraint. Overridable via [`MarketInstance::generate_with_limit`].
pub const DEFAULT_MAX_AGENTS: u32 = 200_000;

#[derive(Debug, Error, PartialEq)]
pub enum MarketError {
    #[error("market needs at least one man")]
    NoMen,
    #[error("{which} must lie in [0, 1], got {value}")]
    PhiOutOfRange { which: &'static str, value: f64 },
    #[error("market size n + k = {requested} exceeds the limit {limit}")]
    TooLarge { requested: u64, limit: u32 },
    #[error("agent {agent} does not exist on side {side:?} (size {size})")]
    UnknownAgent { side: Side, agent: u32, size: u32 },
    #[error("target {target} does not exist for side {side:?} (opposite side has {size} agents)")]
    UnknownTarget { side: Side, target: u32, size: u32 },
    #[error("profile rankings must all have length {expected}, found {found}")]
    RaggedProfile { expected: usize, found: usize },
    #[error("profile for side {side:?} must have {expected} rankings, found {found}")]
    WrongProfileSize {
        side: Side,
        expected: usize,
        found: usize,
    },
    #[error("empty profile")]
    EmptyProfile,
    #[error("invalid ranking in instance: {0}")]
    BadRanking(#[from] crate::perm::PermutationError),
    #[error("instance JSON: {0}")]
    Json(String),
}

/// Which side of the market an object belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Men,
    Women,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Men => Side::Women,
            Side::Women => Side::Men,
        }
    }
}

/// Generation parameters for a market instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    /// Number of men.
    pub n: u32,
    /// Excess women; the women's side has `l = n + k` agents.
    pub k: u32,
    /// Mallows coefficient for men's preferences over women.
    pub phi_m: f64,
    /// Mallows coefficient for women's preferences over men.
    pub phi_w: f64,
    /// Master seed; the instance is a pure function of the config.
    pub seed: u64,
}

impl MarketConfig {
    /// Total number of women.
    pub fn l(&self) -> u32 {
        self.n + self.k
    }

    pub fn validate(&self) -> Result<(), MarketError> {
        if self.n == 0 {
            return Err(MarketError::NoMen);
        }
        if !(0.0..=1.0).contains(&self.phi_m) {
            return Err(MarketError::PhiOutOfRange {
                which: "phi_m",
                value: self.phi_m,
            });
        }
        if !(0.0..=1.0).contains(&self.phi_w) {
            return Err(MarketError::PhiOutOfRange {
                which: "phi_w",
                value: self.phi_w,
            });
        }
        Ok(())
    }
}

/// One side's complete preference rankings over the opposite side.
#[derive(Clone, Debug, PartialEq)]
pub struct PreferenceProfile {
    side: Side,
    rankings: Vec<Permutation>,
}

impl PreferenceProfile {
    /// Builds a profile, checking that all rankings cover the same set.
    pub fn new(side: Side, rankings: Vec<Permutation>) -> Result<Self, MarketError> {
        let first = rankings.first().ok_or(MarketError::EmptyProfile)?;
        let expected = first.len();
        for r in &rankings {
            if r.len() != expected {
                return Err(MarketError::RaggedProfile {
                    expected,
                    found: r.len(),
                });
            }
        }
        Ok(PreferenceProfile { side, rankings })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Number of agents holding rankings.
    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }

    /// Length of each ranking (the size of the opposite side).
    pub fn ranking_len(&self) -> usize {
        self.rankings[0].len()
    }

    /// Ranking held by `agent` (1-based). Panics when out of range; use
    /// [`PreferenceProfile::rank_of`] for checked access.
    pub fn ranking(&self, agent: u32) -> &Permutation {
        &self.rankings[agent as usize - 1]
    }

    pub fn rankings(&self) -> &[Permutation] {
        &self.rankings
    }

    /// 1-based position of `target` in `agent`'s ranking; rank 1 is the most
    /// preferred partner.
    pub fn rank_of(&self, agent: u32, target: u32) -> Result<u32, MarketError> {
        if agent == 0 || agent as usize > self.rankings.len() {
            return Err(MarketError::UnknownAgent {
                side: self.side,
                agent,
                size: self.rankings.len() as u32,
            });
        }
        let ranking = &self.rankings[agent as usize - 1];
        if target == 0 || target as usize > ranking.len() {
            return Err(MarketError::UnknownTarget {
                side: self.side,
                target,
                size: ranking.len() as u32,
            });
        }
        Ok(ranking.rank(target))
    }
}

/// An agent's rank in the Mallows central order. By the generation contract
/// agent identity equals central rank, so this is the identity map; it exists
/// to name the concept at call sites.
pub fn central_rank(agent: u32) -> u32 {
    agent
}

/// A complete market: config plus both preference profiles.
#[derive(Clone, Debug, PartialEq)]
pub struct MarketInstance {
    config: MarketConfig,
    men: PreferenceProfile,
    women: PreferenceProfile,
}

impl MarketInstance {
    /// Generates the instance for `config` under the default size limit.
    ///
    /// Each man's ranking is drawn i.i.d. from Mallows(φ_m, n + k) and each
    /// woman's from Mallows(φ_w, n), on independent substreams keyed by
    /// (side, agent index), so the result is a pure function of the config
    /// regardless of parallelism.
    pub fn generate(config: &MarketConfig) -> Result<Self, MarketError> {
        Self::generate_with_limit(config, DEFAULT_MAX_AGENTS)
    }

    /// As [`MarketInstance::generate`] with an explicit `n + k` ceiling.
    pub fn generate_with_limit(config: &MarketConfig, limit: u32) -> Result<Self, MarketError> {
        config.validate()?;
        let l = config.n as u64 + config.k as u64;
        if l > limit as u64 {
            return Err(MarketError::TooLarge {
                requested: l,
                limit,
            });
        }
        let men_params = MallowsParams::new(config.phi_m, l as usize)
            .expect("validated config yields valid Mallows parameters");
        let women_params = MallowsParams::new(config.phi_w, config.n as usize)
            .expect("validated config yields valid Mallows parameters");

        let sample_side = |params: &MallowsParams, tag: u64, count: u32| -> Vec<Permutation> {
            (1..=count as u64)
                .into_par_iter()
                .map(|agent| {
                    let mut stream = rng::substream(config.seed, &[tag, agent]);
                    mallows::sample(params, &mut stream)
                })
                .collect()
        };

        let men_rankings = sample_side(&men_params, STREAM_MEN, config.n);
        let women_rankings = sample_side(&women_params, STREAM_WOMEN, l as u32);
        Ok(MarketInstance {
            config: *config,
            men: PreferenceProfile::new(Side::Men, men_rankings)?,
            women: PreferenceProfile::new(Side::Women, women_rankings)?,
        })
    }

    /// Assembles an instance from explicit profiles (hand-built fixtures,
    /// deserialized files), checking dimensional consistency with the config.
    pub fn from_profiles(
        config: MarketConfig,
        men: PreferenceProfile,
        women: PreferenceProfile,
    ) -> Result<Self, MarketError> {
        config.validate()?;
        let n = config.n as usize;
        let l = config.l() as usize;
        if men.len() != n {
            return Err(MarketError::WrongProfileSize {
                side: Side::Men,
                expected: n,
                found: men.len(),
            });
        }
        if women.len() != l {
            return Err(MarketError::WrongProfileSize {
                side: Side::Women,
                expected: l,
                found: women.len(),
            });
        }
        if men.ranking_len() != l {
            return Err(MarketError::RaggedProfile {
                expected: l,
                found: men.ranking_len(),
            });
        }
        if women.ranking_len() != n {
            return Err(MarketError::RaggedProfile {
                expected: n,
                found: women.ranking_len(),
            });
        }
        Ok(MarketInstance { config, men, women })
    }

    pub fn config(&self) -> &MarketConfig {
        &self.config
    }

    /// Number of men.
    pub fn n(&self) -> u32 {
        self.config.n
    }

    /// Number of excess women.
    pub fn k(&self) -> u32 {
        self.config.k
    }

    /// Number of women.
    pub fn l(&self) -> u32 {
        self.config.l()
    }

    pub fn men_prefs(&self) -> &PreferenceProfile {
        &self.men
    }

    pub fn women_prefs(&self) -> &PreferenceProfile {
        &self.women
    }

    /// Serializes to the instance JSON layout: the config plus both profiles
    /// as arrays of 1-based order vectors (most preferred partner first).
    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            config: self.config,
            men: self
                .men
                .rankings
                .iter()
                .map(Permutation::to_order)
                .collect(),
            women: self
                .women
                .rankings
                .iter()
                .map(Permutation::to_order)
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
    }

    /// Parses and validates the instance JSON layout.
    pub fn from_json(text: &str) -> Result<Self, MarketError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| MarketError::Json(e.to_string()))?;
        let men = file
            .men
            .into_iter()
            .map(Permutation::from_order)
            .collect::<Result<Vec<_>, _>>()?;
        let women = file
            .women
            .into_iter()
            .map(Permutation::from_order)
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_profiles(
            file.config,
            PreferenceProfile::new(Side::Men, men)?,
            PreferenceProfile::new(Side::Women, women)?,
        )
    }
}

/// Wire layout of an instance file.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    config: MarketConfig,
    men: Vec<Vec<u32>>,
    women: Vec<Vec<u32>>,
}
