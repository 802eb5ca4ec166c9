//! Deterministic record emission.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which
//! round-trips every f64 exactly; identical configs therefore yield
//! byte-identical files. CSV columns follow [`CSV_COLUMNS`]; JSON output is
//! one object per line with the same field order.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{HarnessError, TrialRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
}

/// CSV column order: cell parameters, then statistics.
pub const CSV_COLUMNS: &[&str] = &[
    "cell_index",
    "n",
    "k",
    "phi_m",
    "phi_w",
    "trial",
    "seed",
    "delta_rm",
    "delta_rw",
    "max_mutual_gap",
    "max_central_gap",
    "max_quantile_gap",
    "am_mu_m",
    "am_mu_w",
    "aw_mu_m",
    "aw_mu_w",
    "ratio_am",
    "ratio_aw",
    "max_aw_over_am",
    "max_am_over_aw",
    "localization_event",
    "stable_count",
    "truncated",
    "error",
];

/// Writes `records` in the requested format.
pub fn emit<W: Write>(records: &[TrialRecord], format: EmitFormat, out: &mut W) -> io::Result<()> {
    match format {
        EmitFormat::Csv => emit_csv(records, out),
        EmitFormat::Json => emit_json(records, out),
    }
}

/// Writes to `path`, surfacing failures with the path attached.
pub fn emit_to_path(
    records: &[TrialRecord],
    format: EmitFormat,
    path: &Path,
) -> Result<(), HarnessError> {
    let wrap = |source: io::Error| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(wrap)?;
    let mut writer = BufWriter::new(file);
    emit(records, format, &mut writer).map_err(wrap)?;
    writer.flush().map_err(wrap)
}

/// Reads a JSON-lines records file back.
pub fn read_records_jsonl(path: &Path) -> Result<Vec<TrialRecord>, HarnessError> {
    let file = File::open(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TrialRecord = serde_json::from_str(&line).map_err(|e| HarnessError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

fn emit_csv<W: Write>(records: &[TrialRecord], out: &mut W) -> io::Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for r in records {
        let fields = [
            r.cell_index.to_string(),
            r.n.to_string(),
            r.k.to_string(),
            float(r.phi_m),
            float(r.phi_w),
            r.trial.to_string(),
            r.seed.to_string(),
            r.delta_rm.to_string(),
            r.delta_rw.to_string(),
            r.max_mutual_gap.to_string(),
            r.max_central_gap.to_string(),
            opt_float(r.max_quantile_gap),
            float(r.am_mu_m),
            float(r.am_mu_w),
            float(r.aw_mu_m),
            float(r.aw_mu_w),
            float(r.ratio_am),
            float(r.ratio_aw),
            float(r.max_aw_over_am),
            float(r.max_am_over_aw),
            r.localization_event.map(bool_str).unwrap_or_default(),
            r.stable_count.map(|c| c.to_string()).unwrap_or_default(),
            r.truncated.map(bool_str).unwrap_or_default(),
            r.error.as_deref().map(csv_escape).unwrap_or_default(),
        ];
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

fn emit_json<W: Write>(records: &[TrialRecord], out: &mut W) -> io::Result<()> {
    for r in records {
        let mut line = String::with_capacity(512);
        line.push('{');
        push_field(&mut line, "cell_index", &r.cell_index.to_string());
        push_field(&mut line, "n", &r.n.to_string());
        push_field(&mut line, "k", &r.k.to_string());
        push_field(&mut line, "phi_m", &float(r.phi_m));
        push_field(&mut line, "phi_w", &float(r.phi_w));
        push_field(&mut line, "trial", &r.trial.to_string());
        push_field(&mut line, "seed", &r.seed.to_string());
        push_field(&mut line, "delta_rm", &r.delta_rm.to_string());
        push_field(&mut line, "delta_rw", &r.delta_rw.to_string());
        push_field(&mut line, "max_mutual_gap", &r.max_mutual_gap.to_string());
        push_field(&mut line, "max_central_gap", &r.max_central_gap.to_string());
        push_field(
            &mut line,
            "max_quantile_gap",
            &json_opt_float(r.max_quantile_gap),
        );
        push_field(&mut line, "am_mu_m", &float(r.am_mu_m));
        push_field(&mut line, "am_mu_w", &float(r.am_mu_w));
        push_field(&mut line, "aw_mu_m", &float(r.aw_mu_m));
        push_field(&mut line, "aw_mu_w", &float(r.aw_mu_w));
        push_field(&mut line, "ratio_am", &float(r.ratio_am));
        push_field(&mut line, "ratio_aw", &float(r.ratio_aw));
        push_field(&mut line, "max_aw_over_am", &float(r.max_aw_over_am));
        push_field(&mut line, "max_am_over_aw", &float(r.max_am_over_aw));
        push_field(
            &mut line,
            "localization_event",
            r.localization_event
                .map(bool_str)
                .as_deref()
                .unwrap_or("null"),
        );
        push_field(
            &mut line,
            "stable_count",
            &r.stable_count
                .map(|c| c.to_string())
                .unwrap_or_else(|| "null".into()),
        );
        push_field(
            &mut line,
            "truncated",
            r.truncated.map(bool_str).as_deref().unwrap_or("null"),
        );
        push_field(
            &mut line,
            "error",
            &r.error
                .as_deref()
                .map(|e| serde_json::to_string(e).expect("string serialization cannot fail"))
                .unwrap_or_else(|| "null".into()),
        );
        line.pop(); // trailing comma
        line.push('}');
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn push_field(line: &mut String, key: &str, value: &str) {
    line.push('"');
    line.push_str(key);
    line.push_str("\":");
    line.push_str(value);
    line.push(',');
}

/// 17 significant digits; round-trips f64 exactly.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn json_opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_else(|| "null".into())
}

fn bool_str(b: bool) -> String {
    (if b { "true" } else { "false" }).to_string()
}

fn csv_escape(value: &str) -> String {
    if value.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}
