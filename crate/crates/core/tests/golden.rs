//! Golden-file check: the unanimity cell has fully analytic statistics
//! (assortative matching, zero gaps, unit ratios, average rank (n+1)/2), so
//! its emitted bytes were verified by hand once and frozen. Any drift in the
//! record layout, float formatting, or seeding scheme shows up here.

use assort_core::harness::{EmitFormat, emit, run};
use assort_core::{ExperimentConfig, ExperimentMode, ThresholdSpec, TrialRecord};

const GOLDEN_CSV: &str = include_str!("fixtures/unanimous_n3.csv");
const GOLDEN_JSONL: &str = include_str!("fixtures/unanimous_n3.jsonl");

fn fixture_config() -> ExperimentConfig {
    ExperimentConfig {
        n: vec![3],
        k: vec![0],
        phi_m: vec![0.0],
        phi_w: vec![0.0],
        trials: 2,
        master_seed: 1,
        threshold: Some(ThresholdSpec {
            z: 1.0,
            c_margin: 1.5,
        }),
        enumeration_cap: 16,
        mode: ExperimentMode::Enumerate,
    }
}

#[test]
fn unanimous_cell_matches_frozen_fixture() {
    let records = run(&fixture_config()).unwrap();
    let mut csv = Vec::new();
    emit(&records, EmitFormat::Csv, &mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap(), GOLDEN_CSV);

    let mut json = Vec::new();
    emit(&records, EmitFormat::Json, &mut json).unwrap();
    assert_eq!(String::from_utf8(json).unwrap(), GOLDEN_JSONL);
}

#[test]
fn frozen_jsonl_parses_back_to_equal_records() {
    let records = run(&fixture_config()).unwrap();
    let parsed: Vec<TrialRecord> = GOLDEN_JSONL
        .lines()
        .map(|line| serde_json::from_str(line).unwrap())
        .collect();
    assert_eq!(parsed, records);
    for r in &parsed {
        assert_eq!(r.am_mu_m, 2.0);
        assert_eq!(r.max_quantile_gap, Some(0.0));
        assert_eq!(r.localization_event, Some(true));
    }
}
