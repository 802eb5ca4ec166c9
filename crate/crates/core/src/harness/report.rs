//! Per-cell summaries: localization rates, convergence of quantile gaps, and
//! welfare averages.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{HarnessError, TrialRecord};

/// Fraction of a cell's trials whose localization event held. Trials that
/// failed outright are excluded from the denominator.
pub fn localization_rate(records: &[TrialRecord], cell_index: u32) -> Result<f64, HarnessError> {
    let usable: Vec<&TrialRecord> = records
        .iter()
        .filter(|r| r.cell_index == cell_index && r.error.is_none())
        .collect();
    if usable.is_empty() {
        return Err(HarnessError::EmptyCell(cell_index));
    }
    let mut hits = 0usize;
    for r in &usable {
        match r.localization_event {
            Some(true) => hits += 1,
            Some(false) => {}
            None => return Err(HarnessError::MissingEvents(cell_index)),
        }
    }
    Ok(hits as f64 / usable.len() as f64)
}

/// Convergence summary of one balanced cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub cell_index: u32,
    pub n: u32,
    pub phi_m: f64,
    pub phi_w: f64,
    pub trials: usize,
    /// Median across trials of the per-trial max quantile gap.
    pub median_max_quantile_gap: f64,
    /// 90th percentile (nearest rank) of the per-trial max quantile gap.
    pub p90_max_quantile_gap: f64,
    /// Largest central gap seen in the cell, divided by ln n.
    pub max_central_gap_over_ln_n: f64,
}

/// Per-cell quantile-gap convergence summaries. Only defined for balanced
/// sweeps: unbalanced cells have no quantile normalization and are rejected.
pub fn convergence_table(records: &[TrialRecord]) -> Result<Vec<ConvergenceRow>, HarnessError> {
    if let Some(r) = records.iter().find(|r| r.k > 0) {
        return Err(HarnessError::Unbalanced {
            cell_index: r.cell_index,
            k: r.k,
        });
    }
    let mut rows = Vec::new();
    for (cell_index, cell_records) in group_by_cell(records) {
        let gaps: Vec<f64> = cell_records
            .iter()
            .filter_map(|r| r.max_quantile_gap)
            .collect();
        if gaps.is_empty() {
            return Err(HarnessError::EmptyCell(cell_index));
        }
        let first = cell_records[0];
        let max_central = cell_records
            .iter()
            .map(|r| r.max_central_gap)
            .max()
            .unwrap_or(0);
        rows.push(ConvergenceRow {
            cell_index,
            n: first.n,
            phi_m: first.phi_m,
            phi_w: first.phi_w,
            trials: gaps.len(),
            median_max_quantile_gap: median(&gaps),
            p90_max_quantile_gap: percentile_nearest_rank(&gaps, 0.9),
            max_central_gap_over_ln_n: max_central as f64 / (first.n as f64).ln(),
        });
    }
    Ok(rows)
}

/// Welfare summary of one cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WelfareRow {
    pub cell_index: u32,
    pub n: u32,
    pub k: u32,
    pub phi_m: f64,
    pub phi_w: f64,
    pub trials: usize,
    pub mean_am_mu_m: f64,
    pub mean_am_mu_w: f64,
    pub mean_aw_mu_m: f64,
    pub mean_aw_mu_w: f64,
    /// Mean of A_M(μ_W) / A_M(μ_M).
    pub mean_ratio_am: f64,
    /// Mean of A_W(μ_M) / A_W(μ_W).
    pub mean_ratio_aw: f64,
    pub mean_max_aw_over_am: f64,
    pub mean_max_am_over_aw: f64,
    /// `ln n`, for contrast against the uniform-preference growth rate;
    /// populated on uniform cells (φ_m = φ_w = 1).
    pub uniform_log_n: Option<f64>,
    /// `n / ln n`, the uniform-preference pessimal growth rate; populated on
    /// uniform cells.
    pub uniform_n_over_log_n: Option<f64>,
}

/// Per-cell welfare averages, with the uniform-case comparison curves on
/// φ = 1 cells.
pub fn welfare_table(records: &[TrialRecord]) -> Vec<WelfareRow> {
    let mut rows = Vec::new();
    for (cell_index, cell_records) in group_by_cell(records) {
        let first = cell_records[0];
        let count = cell_records.len() as f64;
        let mean = |f: &dyn Fn(&TrialRecord) -> f64| -> f64 {
            cell_records.iter().map(|r| f(r)).sum::<f64>() / count
        };
        let uniform = first.phi_m == 1.0 && first.phi_w == 1.0;
        let ln_n = (first.n as f64).ln();
        rows.push(WelfareRow {
            cell_index,
            n: first.n,
            k: first.k,
            phi_m: first.phi_m,
            phi_w: first.phi_w,
            trials: cell_records.len(),
            mean_am_mu_m: mean(&|r| r.am_mu_m),
            mean_am_mu_w: mean(&|r| r.am_mu_w),
            mean_aw_mu_m: mean(&|r| r.aw_mu_m),
            mean_aw_mu_w: mean(&|r| r.aw_mu_w),
            mean_ratio_am: mean(&|r| r.ratio_am),
            mean_ratio_aw: mean(&|r| r.ratio_aw),
            mean_max_aw_over_am: mean(&|r| r.max_aw_over_am),
            mean_max_am_over_aw: mean(&|r| r.max_am_over_aw),
            uniform_log_n: uniform.then_some(ln_n),
            uniform_n_over_log_n: uniform.then_some(first.n as f64 / ln_n),
        });
    }
    rows
}

fn group_by_cell(records: &[TrialRecord]) -> BTreeMap<u32, Vec<&TrialRecord>> {
    let mut groups: BTreeMap<u32, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        if r.error.is_none() {
            groups.entry(r.cell_index).or_default().push(r);
        }
    }
    groups
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("gap statistics are never NaN"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn percentile_nearest_rank(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("gap statistics are never NaN"));
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}
