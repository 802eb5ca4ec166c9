//! `assort`: simulate stable matching markets with Mallows-correlated
//! preferences.
//!
//! Exit codes: 0 success, 1 usage error, 2 config/input validation error,
//! 3 experiment finished but some trials failed (partial output preserved).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result, bail};
use clap::{Parser, Subcommand, ValueEnum};

use assort_core::harness::{self, EmitFormat, read_records_jsonl};
use assort_core::mallows::{self, MallowsParams};
use assort_core::market::{MarketConfig, MarketInstance, Side};
use assort_core::matching::{Matching, deferred_acceptance, enumerate_stable};
use assort_core::{ExperimentConfig, TrialRecord};

#[derive(Parser)]
#[command(
    name = "assort",
    version,
    about = "Stable matching markets under Mallows-correlated preferences",
    after_help = "Worker count is controlled by the ASSORT_WORKERS environment variable \
                  (default: available parallelism). Outputs are byte-deterministic for a \
                  given config regardless of worker count."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw Mallows permutations and print them as 1-based preference orders.
    Sample {
        /// Correlation coefficient in [0, 1].
        #[arg(long)]
        phi: f64,
        /// Number of ranked elements.
        #[arg(long)]
        len: usize,
        /// Number of permutations to draw.
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a market instance file.
    Generate {
        /// Number of men.
        #[arg(long)]
        n: u32,
        /// Excess women (the market has n + k women).
        #[arg(long, default_value_t = 0)]
        k: u32,
        #[arg(long)]
        phi_m: f64,
        #[arg(long)]
        phi_w: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run deferred acceptance on an instance file and print the matching.
    Match {
        /// Instance JSON produced by `generate` (or hand-written).
        #[arg(long)]
        instance: PathBuf,
        /// Which side proposes; the result is optimal for that side.
        #[arg(long, value_enum, default_value_t = ProposingSide::Men)]
        proposing: ProposingSide,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Enumerate the stable matchings of an instance file.
    Enumerate {
        #[arg(long)]
        instance: PathBuf,
        /// Emit at most this many matchings (the extremes are always kept).
        #[arg(long, default_value_t = 10_000)]
        cap: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run an experiment sweep from a config file.
    Experiment {
        /// ExperimentConfig JSON; unknown fields are rejected.
        #[arg(long)]
        config: PathBuf,
        /// Write records as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write records as JSON lines.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Summarize a JSON-lines records file into convergence/welfare tables.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_enum, default_value_t = TableChoice::Both)]
        table: TableChoice,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProposingSide {
    Men,
    Women,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableChoice {
    Convergence,
    Welfare,
    Both,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap handles --help/--version as "errors" with success status
            if err.use_stderr() {
                let _ = err.print();
                return ExitCode::from(1);
            }
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Sample {
            phi,
            len,
            count,
            seed,
            output,
        } => sample(phi, len, count, seed, output),
        Command::Generate {
            n,
            k,
            phi_m,
            phi_w,
            seed,
            output,
        } => generate(n, k, phi_m, phi_w, seed, output),
        Command::Match {
            instance,
            proposing,
            output,
        } => run_match(&instance, proposing, output),
        Command::Enumerate {
            instance,
            cap,
            output,
        } => enumerate(&instance, cap, output),
        Command::Experiment { config, csv, json } => experiment(&config, csv, json),
        Command::Report { records, table } => report(&records, table),
    }
}

fn write_output(output: Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn sample(
    phi: f64,
    len: usize,
    count: usize,
    seed: u64,
    output: Option<PathBuf>,
) -> Result<ExitCode> {
    let params = MallowsParams::new(phi, len)?;
    let mut rng = assort_core::rng::substream(seed, &[]);
    let mut text = String::new();
    for _ in 0..count {
        let p = mallows::sample(&params, &mut rng);
        let order: Vec<String> = p.to_order().iter().map(u32::to_string).collect();
        text.push_str(&order.join(" "));
        text.push('\n');
    }
    write_output(output, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn generate(
    n: u32,
    k: u32,
    phi_m: f64,
    phi_w: f64,
    seed: u64,
    output: Option<PathBuf>,
) -> Result<ExitCode> {
    let config = MarketConfig {
        n,
        k,
        phi_m,
        phi_w,
        seed,
    };
    let instance = MarketInstance::generate(&config)?;
    write_output(output, &format!("{}\n", instance.to_json()))?;
    Ok(ExitCode::SUCCESS)
}

fn load_instance(path: &Path) -> Result<MarketInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    MarketInstance::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run_match(path: &Path, proposing: ProposingSide, output: Option<PathBuf>) -> Result<ExitCode> {
    let instance = load_instance(path)?;
    let side = match proposing {
        ProposingSide::Men => Side::Men,
        ProposingSide::Women => Side::Women,
    };
    let matching = deferred_acceptance(&instance, side);
    write_output(output, &format!("{}\n", matching.to_json()))?;
    Ok(ExitCode::SUCCESS)
}

fn matching_value(m: &Matching) -> serde_json::Value {
    serde_json::json!({
        "man_to_woman": m.man_partners(),
        "woman_to_man": m.woman_partners(),
    })
}

fn enumerate(path: &Path, cap: usize, output: Option<PathBuf>) -> Result<ExitCode> {
    let instance = load_instance(path)?;
    let set = enumerate_stable(&instance, cap)?;
    let value = serde_json::json!({
        "count": set.matchings.len(),
        "truncated": set.truncated,
        "man_optimal": set.man_optimal,
        "woman_optimal": set.woman_optimal,
        "matchings": set.matchings.iter().map(matching_value).collect::<Vec<_>>(),
    });
    write_output(
        output,
        &format!("{}\n", serde_json::to_string_pretty(&value)?),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn experiment(config_path: &Path, csv: Option<PathBuf>, json: Option<PathBuf>) -> Result<ExitCode> {
    if csv.is_none() && json.is_none() {
        bail!("experiment needs at least one sink: --csv and/or --json");
    }
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let config = ExperimentConfig::from_json(&text)
        .with_context(|| format!("parsing {}", config_path.display()))?;

    let records = harness::run(&config)?;
    if let Some(path) = &csv {
        harness::emit_to_path(&records, EmitFormat::Csv, path)?;
    }
    if let Some(path) = &json {
        harness::emit_to_path(&records, EmitFormat::Json, path)?;
    }

    let failures: Vec<&TrialRecord> = records.iter().filter(|r| r.error.is_some()).collect();
    eprintln!(
        "{} cells x {} trials -> {} records ({} failed)",
        config.cells().len(),
        config.trials,
        records.len(),
        failures.len()
    );
    if !failures.is_empty() {
        for r in failures.iter().take(5) {
            eprintln!(
                "  cell {} trial {}: {}",
                r.cell_index,
                r.trial,
                r.error.as_deref().unwrap_or("unknown")
            );
        }
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn report(records_path: &Path, table: TableChoice) -> Result<ExitCode> {
    let records = read_records_jsonl(records_path)?;
    if records.is_empty() {
        bail!("{}: no records", records_path.display());
    }
    let mut stdout = std::io::stdout().lock();

    if matches!(table, TableChoice::Convergence | TableChoice::Both) {
        let balanced: Vec<TrialRecord> = records.iter().filter(|r| r.k == 0).cloned().collect();
        if balanced.is_empty() {
            writeln!(
                stdout,
                "convergence: no balanced cells in {}",
                records_path.display()
            )?;
        } else {
            let rows = harness::convergence_table(&balanced)?;
            writeln!(stdout, "convergence (balanced cells)")?;
            writeln!(
                stdout,
                "{:>4} {:>7} {:>6} {:>6} {:>6} {:>14} {:>14} {:>18}",
                "cell",
                "n",
                "phi_m",
                "phi_w",
                "trials",
                "median_qgap",
                "p90_qgap",
                "max_cgap/ln(n)"
            )?;
            for r in rows {
                writeln!(
                    stdout,
                    "{:>4} {:>7} {:>6} {:>6} {:>6} {:>14.6} {:>14.6} {:>18.4}",
                    r.cell_index,
                    r.n,
                    r.phi_m,
                    r.phi_w,
                    r.trials,
                    r.median_max_quantile_gap,
                    r.p90_max_quantile_gap,
                    r.max_central_gap_over_ln_n
                )?;
            }
        }
    }

    if matches!(table, TableChoice::Both) {
        writeln!(stdout)?;
    }

    if matches!(table, TableChoice::Welfare | TableChoice::Both) {
        let rows = harness::welfare_table(&records);
        writeln!(stdout, "welfare")?;
        writeln!(
            stdout,
            "{:>4} {:>7} {:>4} {:>6} {:>6} {:>10} {:>10} {:>10} {:>10} {:>9} {:>9} {:>9} {:>11}",
            "cell",
            "n",
            "k",
            "phi_m",
            "phi_w",
            "AM(muM)",
            "AM(muW)",
            "AW(muM)",
            "AW(muW)",
            "ratio_AM",
            "ratio_AW",
            "ln(n)",
            "n/ln(n)"
        )?;
        for r in rows {
            let fmt_opt = |v: Option<f64>| v.map_or(String::from("-"), |x| format!("{x:.2}"));
            writeln!(
                stdout,
                "{:>4} {:>7} {:>4} {:>6} {:>6} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>9.4} {:>9.4} {:>9} {:>11}",
                r.cell_index,
                r.n,
                r.k,
                r.phi_m,
                r.phi_w,
                r.mean_am_mu_m,
                r.mean_am_mu_w,
                r.mean_aw_mu_m,
                r.mean_aw_mu_w,
                r.mean_ratio_am,
                r.mean_ratio_aw,
                fmt_opt(r.uniform_log_n),
                fmt_opt(r.uniform_n_over_log_n)
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
