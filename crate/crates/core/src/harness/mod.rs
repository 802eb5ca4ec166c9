//! Experiment orchestration: parameter sweeps, parallel Monte Carlo trials,
//! threshold-event tracking, convergence and welfare summaries, and
//! deterministic CSV/JSON emission.
//!
//! A sweep is the cross product of the configured `n`, `k`, `phi_m`, and
//! `phi_w` lists (iterated in that nesting order); each cell runs `trials`
//! independent market trials. Trial seeds derive from the master seed and the
//! `(cell index, trial index)` coordinates, so any cell can be reproduced in
//! isolation and the output stream is a pure function of the config no matter
//! how many workers execute it.

mod emit;
mod report;
mod run;

use std::io;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::DEFAULT_MAX_AGENTS;

pub use emit::{CSV_COLUMNS, EmitFormat, emit, emit_to_path, read_records_jsonl};
pub use report::{ConvergenceRow, WelfareRow, convergence_table, localization_rate, welfare_table};
pub use run::{WORKERS_ENV, run};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("no usable records for cell {0}")]
    EmptyCell(u32),
    #[error(
        "cell {0} has records without localization events; configure a threshold to track them"
    )]
    MissingEvents(u32),
    #[error("convergence summaries need balanced cells; cell {cell_index} has k = {k}")]
    Unbalanced { cell_index: u32, k: u32 },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: line {line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Threshold parameters for localization events, mirroring the displacement
/// concentration statement: with `s <= O(t^z)` independent draws from
/// Mallows(φ, t), all displacements stay below `d(t) = c·ln t` with
/// probability tending to one whenever `c > -(z+1)/ln φ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSpec {
    /// Polynomial exponent bounding the number of draws the event covers.
    pub z: f64,
    /// Multiplier (> 1) placing `c` strictly above the critical constant.
    pub c_margin: f64,
}

impl ThresholdSpec {
    /// `c = c_margin · (z + 1) / (−ln φ)`; requires `0 < φ < 1`.
    pub fn c(&self, phi: f64) -> f64 {
        debug_assert!(phi > 0.0 && phi < 1.0);
        self.c_margin * (self.z + 1.0) / -phi.ln()
    }

    /// `d(t) = c · ln t`.
    pub fn d(&self, phi: f64, t: f64) -> f64 {
        self.c(phi) * t.ln()
    }

    /// Number of rankings the event covers on a side holding `side_size`
    /// rankings of length `t`: `min(side_size, ceil(t^z))`, the draw count
    /// the exponent `z` licenses. At `z >= 1` this is the whole side in
    /// balanced markets.
    pub fn draws(&self, t: f64, side_size: usize) -> usize {
        let licensed = t.powf(self.z).ceil();
        if licensed >= side_size as f64 {
            side_size
        } else {
            (licensed as usize).max(1)
        }
    }
}

/// Which matchings each trial computes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMode {
    /// Only μ_M and μ_W via deferred acceptance; the default, and the only
    /// tractable mode at large n. Set-wide statistics range over the two
    /// extremes, which bracket every stable matching's welfare.
    #[default]
    ExtremesOnly,
    /// Rotation-poset enumeration up to `enumeration_cap` matchings.
    Enumerate,
    /// Exhaustive oracle; requires n <= 9 and n + k <= 10.
    BruteForce,
}

/// A full experiment specification. See the module docs for sweep order and
/// seeding; unknown JSON fields are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Market sizes to sweep.
    pub n: Vec<u32>,
    /// Excess-women counts to sweep; defaults to balanced markets.
    #[serde(default = "default_k")]
    pub k: Vec<u32>,
    /// Men's correlation coefficients to sweep.
    pub phi_m: Vec<f64>,
    /// Women's correlation coefficients to sweep.
    pub phi_w: Vec<f64>,
    /// Trials per cell.
    pub trials: u32,
    /// Master seed; every trial seed derives from it.
    pub master_seed: u64,
    /// When present, every trial records a localization event. Requires all
    /// φ < 1 and k <= n^z in every cell.
    #[serde(default)]
    pub threshold: Option<ThresholdSpec>,
    /// Cap on enumerated stable matchings per trial (enumerate mode).
    #[serde(default = "default_enumeration_cap")]
    pub enumeration_cap: usize,
    #[serde(default)]
    pub mode: ExperimentMode,
}

fn default_k() -> Vec<u32> {
    vec![0]
}

fn default_enumeration_cap() -> usize {
    10_000
}

/// Parameters of one sweep cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellParams {
    pub cell_index: u32,
    pub n: u32,
    pub k: u32,
    pub phi_m: f64,
    pub phi_w: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Sweep cells in emission order: n outermost, then k, phi_m, phi_w.
    pub fn cells(&self) -> Vec<CellParams> {
        let mut cells = Vec::new();
        for &n in &self.n {
            for &k in &self.k {
                for &phi_m in &self.phi_m {
                    for &phi_w in &self.phi_w {
                        cells.push(CellParams {
                            cell_index: cells.len() as u32,
                            n,
                            k,
                            phi_m,
                            phi_w,
                        });
                    }
                }
            }
        }
        cells
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::InvalidConfig(msg));
        if self.n.is_empty() || self.k.is_empty() || self.phi_m.is_empty() || self.phi_w.is_empty()
        {
            return fail("n, k, phi_m, and phi_w sweeps must be non-empty".into());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.enumeration_cap < 2 {
            return fail(format!(
                "enumeration_cap must be at least 2, got {}",
                self.enumeration_cap
            ));
        }
        for &n in &self.n {
            if n == 0 {
                return fail("every n must be at least 1".into());
            }
        }
        for phi in self.phi_m.iter().chain(&self.phi_w) {
            if !(0.0..=1.0).contains(phi) {
                return fail(format!("phi values must lie in [0, 1], got {phi}"));
            }
        }
        for &n in &self.n {
            for &k in &self.k {
                let l = n as u64 + k as u64;
                if l > DEFAULT_MAX_AGENTS as u64 {
                    return fail(format!(
                        "cell n = {n}, k = {k} exceeds the market size limit {DEFAULT_MAX_AGENTS}"
                    ));
                }
                if self.mode == ExperimentMode::BruteForce && (n > 9 || l > 10) {
                    return fail(format!(
                        "brute_force mode is limited to n <= 9 and n + k <= 10; cell has n = {n}, k = {k}"
                    ));
                }
            }
        }
        if let Some(threshold) = &self.threshold {
            if !threshold.c_margin.is_finite() || threshold.c_margin <= 1.0 {
                return fail(format!(
                    "threshold.c_margin must exceed 1, got {}",
                    threshold.c_margin
                ));
            }
            if !threshold.z.is_finite() || threshold.z < 0.0 {
                return fail(format!(
                    "threshold.z must be a finite nonnegative real, got {}",
                    threshold.z
                ));
            }
            for phi in self.phi_m.iter().chain(&self.phi_w) {
                if *phi >= 1.0 {
                    return fail(
                        "threshold events are undefined at phi = 1 (ln 1 = 0); \
                         drop the threshold or exclude phi = 1 cells"
                            .into(),
                    );
                }
            }
            for &n in &self.n {
                for &k in &self.k {
                    if k as f64 > (n as f64).powf(threshold.z) + 1e-9 {
                        return fail(format!(
                            "cell n = {n}, k = {k} violates k <= n^z for z = {}",
                            threshold.z
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One trial's measured statistics. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct TrialRecord {
    pub cell_index: u32,
    pub n: u32,
    pub k: u32,
    pub phi_m: f64,
    pub phi_w: f64,
    pub trial: u32,
    pub seed: u64,
    /// Δ(R_M): maximal displacement of the men's profile.
    pub delta_rm: u32,
    /// Δ(R_W): maximal displacement of the women's profile.
    pub delta_rw: u32,
    /// Largest `|r_m(w) − r_w(m)|` over matched pairs of the computed set.
    pub max_mutual_gap: u32,
    /// Largest `|r(m) − r(w)|` over matched pairs of the computed set.
    pub max_central_gap: u32,
    /// Largest quantile gap; balanced cells only.
    pub max_quantile_gap: Option<f64>,
    /// A_M(μ_M).
    pub am_mu_m: f64,
    /// A_M(μ_W).
    pub am_mu_w: f64,
    /// A_W(μ_M).
    pub aw_mu_m: f64,
    /// A_W(μ_W).
    pub aw_mu_w: f64,
    /// A_M(μ_W) / A_M(μ_M).
    pub ratio_am: f64,
    /// A_W(μ_M) / A_W(μ_W).
    pub ratio_aw: f64,
    /// max over computed matchings of A_W(μ) / A_M(μ).
    pub max_aw_over_am: f64,
    /// max over computed matchings of A_M(μ) / A_W(μ).
    pub max_am_over_aw: f64,
    /// Both sides localized within their thresholds; present iff a threshold
    /// was configured.
    pub localization_event: Option<bool>,
    /// Number of stable matchings found; absent in extremes-only mode.
    pub stable_count: Option<u64>,
    /// Whether the enumeration cap truncated the set; absent in extremes-only
    /// mode.
    pub truncated: Option<bool>,
    /// A trial failure, recorded without aborting the sweep; all statistics
    /// are zero/absent when set.
    pub error: Option<String>,
}

impl TrialRecord {
    pub(crate) fn empty(cell: &CellParams, trial: u32, seed: u64) -> Self {
        TrialRecord {
            cell_index: cell.cell_index,
            n: cell.n,
            k: cell.k,
            phi_m: cell.phi_m,
            phi_w: cell.phi_w,
            trial,
            seed,
            delta_rm: 0,
            delta_rw: 0,
            max_mutual_gap: 0,
            max_central_gap: 0,
            max_quantile_gap: None,
            am_mu_m: 0.0,
            am_mu_w: 0.0,
            aw_mu_m: 0.0,
            aw_mu_w: 0.0,
            ratio_am: 0.0,
            ratio_aw: 0.0,
            max_aw_over_am: 0.0,
            max_am_over_aw: 0.0,
            localization_event: None,
            stable_count: None,
            truncated: None,
            error: None,
        }
    }
}
