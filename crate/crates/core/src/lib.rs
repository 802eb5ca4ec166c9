//! Simulation library for two-sided matching markets with Mallows-correlated
//! preferences.
//!
//! The crate is organized around five pieces:
//!
//! - [`perm`] / [`mallows`]: permutations, inversion counting, the exact
//!   Mallows PMF and normalization constant, an exact O(t log t) sampler, and
//!   displacement tail statistics;
//! - [`market`]: reproducible generation of complete market instances (two
//!   sides, possibly unbalanced, independent Mallows preferences per agent)
//!   with rank queries and a JSON wire format;
//! - [`matching`]: deferred acceptance for the man- and woman-optimal
//!   matchings, stability checking, rotation-poset enumeration of all stable
//!   matchings, and a brute-force oracle;
//! - [`metrics`]: displacements, mutual/central/quantile rank gaps, the
//!   mutual-rank bound check, and average-rank welfare;
//! - [`harness`]: parameter sweeps, parallel seeded Monte Carlo trials,
//!   convergence and welfare tables, and deterministic CSV/JSON emission.
//!
//! Everything downstream of a seed is deterministic: instances are pure
//! functions of their configs, and experiment record streams are pure
//! functions of the experiment config, independent of worker count.

mod fenwick;

pub mod harness;
pub mod mallows;
pub mod market;
pub mod matching;
pub mod metrics;
pub mod perm;
pub mod rng;

pub use harness::{
    CellParams, ConvergenceRow, EmitFormat, ExperimentConfig, ExperimentMode, HarnessError,
    ThresholdSpec, TrialRecord, WelfareRow,
};
pub use mallows::{MallowsError, MallowsParams};
pub use market::{MarketConfig, MarketError, MarketInstance, PreferenceProfile, Side};
pub use matching::{BlockingPair, Matching, MatchingError, StableSet};
pub use metrics::{
    DisplacementSummary, HolzmanCheck, MetricsError, PairGap, PairGapReport, WelfareRatios,
    WelfareReport,
};
pub use perm::{DisplacementStats, Permutation, PermutationError};
