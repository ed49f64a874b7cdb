//! Scenario configuration files, batch execution, and figure-ready CSV
//! emission.
//!
//! Config grammar: flat `key = value` lines, `#` starts a comment. Keys
//! mirror the scenario fields (see README for the full table). Environment
//! variables with the `DECOYFORGE_` prefix override file and built-in values
//! key by key. Exit codes: 0 success, 1 configuration error, 2 oracle
//! violation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle;
use crate::protocol::{
    builtin_scenario, sweep, ProtocolKind, ScenarioConfig, SourceFamily, SweepResult,
};
use crate::sources::Side;

pub const ENV_PREFIX: &str = "DECOYFORGE_";

#[derive(Debug, Parser)]
#[command(
    name = "decoyforge",
    version,
    about = "Decoy-state bound estimation and certification for BB84 and MDI-QKD"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario sweep, or the certification oracle with `--oracle`.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Built-in scenario name (bb84_wcs, bb84_hsps, mdi_wcs, mdi_hsps) or a
    /// config file path.
    #[arg(long)]
    pub scenario: Option<String>,

    /// Output directory for CSV files and the run manifest.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Run the certification oracle instead of a sweep.
    #[arg(long)]
    pub oracle: bool,

    /// Oracle trials per protocol/source-family combination.
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,

    /// Seed override (sweeps record it; the oracle consumes it).
    #[arg(long)]
    pub seed: Option<u64>,

    /// Restrict the oracle to one protocol (bb84 or mdi).
    #[arg(long)]
    pub protocol: Option<String>,

    /// Restrict the oracle to one source family (wcs, hsps, thermal).
    #[arg(long)]
    pub source: Option<String>,
}

/// Parse a scenario from config text. Two passes: protocol and source pick
/// the defaults, then every key is applied in order.
pub fn parse_config_text(text: &str, name: &str) -> Result<ScenarioConfig> {
    let entries = tokenize(text)?;
    let find = |key: &str| entries.iter().find(|(_, k, _)| k == key);

    let protocol = match find("protocol") {
        Some((line, _, v)) => parse_protocol(v).map_err(|message| Error::Config {
            line: *line,
            key: "protocol".into(),
            message,
        })?,
        None => {
            return Err(Error::Config {
                line: 0,
                key: "protocol".into(),
                message: "missing required key".into(),
            })
        }
    };
    let mut config = builtin_scenario(match protocol {
        ProtocolKind::Bb84 => "bb84_wcs",
        ProtocolKind::Mdi => "mdi_wcs",
    })
    .expect("defaults exist");
    config.name = name.to_string();

    for (line, key, value) in &entries {
        apply_key(&mut config, key, value).map_err(|message| Error::Config {
            line: *line,
            key: key.clone(),
            message,
        })?;
    }
    config.validate()?;
    Ok(config)
}

fn tokenize(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(Error::Config {
                line,
                key: stripped.to_string(),
                message: "expected `key = value`".into(),
            });
        };
        entries.push((line, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

fn parse_protocol(v: &str) -> std::result::Result<ProtocolKind, String> {
    match v {
        "bb84" => Ok(ProtocolKind::Bb84),
        "mdi" => Ok(ProtocolKind::Mdi),
        other => Err(format!("unknown protocol `{other}` (bb84 or mdi)")),
    }
}

fn parse_source(v: &str) -> std::result::Result<SourceFamily, String> {
    match v {
        "wcs" => Ok(SourceFamily::Wcs),
        "hsps" => Ok(SourceFamily::Hsps),
        "thermal" => Ok(SourceFamily::Thermal),
        other => Err(format!("unknown source `{other}` (wcs, hsps or thermal)")),
    }
}

fn apply_key(
    config: &mut ScenarioConfig,
    key: &str,
    value: &str,
) -> std::result::Result<(), String> {
    let f = |v: &str| v.parse::<f64>().map_err(|e| format!("bad number: {e}"));
    let u = |v: &str| v.parse::<u64>().map_err(|e| format!("bad integer: {e}"));
    match key {
        "protocol" => config.protocol = parse_protocol(value)?,
        "source" => config.source = parse_source(value)?,
        "mu1" => config.mu1 = f(value)?,
        "loss_db" => config.loss_grid = parse_grid(value)?,
        "zeta" => config.channel.zeta = f(value)?,
        "p_d" => config.channel.p_d = f(value)?,
        "e_d" => config.channel.e_d = f(value)?,
        "e_0" => config.channel.e_0 = f(value)?,
        "f_ec" => config.channel.f_ec = f(value)?,
        "eta_v" => config.channel.eta_v = f(value)?,
        "p_dv" => config.channel.p_dv = f(value)?,
        "signal_min" => config.optimizer.signal_min = f(value)?,
        "signal_max" => config.optimizer.signal_max = f(value)?,
        "coarse_points" => config.optimizer.coarse_points = u(value)? as usize,
        "xtol" => config.optimizer.xtol = f(value)?,
        "seed" => config.seed = u(value)?,
        "k_max" => config.k_max = u(value)? as usize,
        other => return Err(format!("unknown key `{other}`")),
    }
    Ok(())
}

/// Loss grids accept `start:stop:step` (inclusive) or a comma list.
fn parse_grid(value: &str) -> std::result::Result<Vec<f64>, String> {
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').collect();
        if parts.len() != 3 {
            return Err("expected start:stop:step".into());
        }
        let start: f64 = parts[0].parse().map_err(|e| format!("bad start: {e}"))?;
        let stop: f64 = parts[1].parse().map_err(|e| format!("bad stop: {e}"))?;
        let step: f64 = parts[2].parse().map_err(|e| format!("bad step: {e}"))?;
        if step <= 0.0 || stop < start {
            return Err("need step > 0 and stop >= start".into());
        }
        let mut grid = Vec::new();
        let mut i = 0u64;
        loop {
            let v = start + step * i as f64;
            if v > stop + 1e-9 {
                break;
            }
            grid.push(v);
            i += 1;
        }
        Ok(grid)
    } else {
        value
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad value: {e}"))
            })
            .collect()
    }
}

/// Resolve a scenario: a built-in name, or a config file path.
pub fn load_scenario(selector: &str) -> Result<ScenarioConfig> {
    if let Some(config) = builtin_scenario(selector) {
        return Ok(config);
    }
    let path = Path::new(selector);
    if !path.exists() {
        return Err(Error::UnknownScenario(selector.to_string()));
    }
    let text = fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| selector.to_string());
    parse_config_text(&text, &name)
}

/// Apply `DECOYFORGE_*` overrides from an explicit map (tests) or
/// the process environment.
pub fn apply_overrides(config: &mut ScenarioConfig, vars: &BTreeMap<String, String>) -> Result<()> {
    for (key, value) in vars {
        let lowered = key.strip_prefix(ENV_PREFIX).map(|k| k.to_ascii_lowercase());
        if let Some(k) = lowered {
            apply_key(config, &k, value).map_err(|message| Error::Config {
                line: 0,
                key: k,
                message,
            })?;
        }
    }
    config.validate()
}

pub fn env_overrides() -> BTreeMap<String, String> {
    std::env::vars()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX))
        .collect()
}

#[derive(Debug, Serialize)]
pub struct ManifestOutput {
    pub path: String,
    pub rows: usize,
}

#[derive(Debug, Serialize)]
pub struct ManifestSummary {
    pub max_r4_over_r3: Option<f64>,
    pub min_e_ratio: Option<f64>,
    pub dominance_ok: bool,
    pub points: usize,
    pub flagged_points: usize,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool_version: String,
    pub scenario: String,
    pub config_hash: String,
    pub config_text: String,
    pub timestamp_unix: u64,
    pub outputs: Vec<ManifestOutput>,
    pub summary: ManifestSummary,
    pub deviations: Vec<String>,
}

/// FNV-1a, enough to fingerprint a config for reproducibility records.
fn fnv1a(text: &str) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

fn fmt_floor(v: f64) -> String {
    if v.is_nan() {
        "0".into()
    } else {
        format!("{}", v.max(0.0))
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    if den > 0.0 && num.is_finite() {
        Some(num / den)
    } else {
        None
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writer
        .write_record(header)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for row in rows {
        writer
            .write_record(row)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    writer
        .flush()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    Ok(())
}

/// Summary statistics a caller (and the acceptance suite) can assert on.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub max_r4_over_r3: Option<f64>,
    pub min_e_ratio: Option<f64>,
    pub dominance_ok: bool,
    pub deviations: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

/// Execute a sweep and write the figure CSVs, the raw CSV and the manifest.
pub fn run_scenario_to_dir(config: &ScenarioConfig, out_dir: &Path) -> Result<RunSummary> {
    let result = sweep(config)?;
    fs::create_dir_all(out_dir)?;
    let mut outputs: Vec<(PathBuf, usize)> = Vec::new();

    let raw_header = [
        "loss_db",
        "mu_opt_3",
        "r3",
        "mu_opt_4",
        "r4",
        "mu_opt_inf",
        "r_inf",
        "s_lower_3",
        "s_lower_4",
        "e_upper_3",
        "e_upper_4",
        "s_true",
        "e_true",
        "flags",
    ];
    let raw_rows: Vec<Vec<String>> = result
        .points
        .iter()
        .map(|p| {
            vec![
                fmt(p.loss_db),
                fmt(p.mu_opt_3),
                fmt(p.r3),
                fmt(p.mu_opt_4),
                fmt(p.r4),
                fmt(p.mu_opt_inf),
                fmt(p.r_inf),
                fmt(p.s_lower_3),
                fmt(p.s_lower_4),
                fmt(p.e_upper_3),
                fmt(p.e_upper_4),
                fmt(p.s_true),
                fmt(p.e_true),
                p.flags.join(";"),
            ]
        })
        .collect();
    let raw_path = out_dir.join("sweep_raw.csv");
    write_csv(&raw_path, &raw_header, &raw_rows)?;
    outputs.push((raw_path, raw_rows.len()));

    let figures: FigureSet = match config.protocol {
        ProtocolKind::Bb84 => figure_rows_bb84(&result),
        ProtocolKind::Mdi => figure_rows_mdi(&result),
    };
    for (file, header, rows) in &figures {
        let path = out_dir.join(file);
        write_csv(&path, header, rows)?;
        outputs.push((path, rows.len()));
    }

    // Headline statistics for the manifest.
    let mut max_r4_over_r3: Option<f64> = None;
    let mut min_e_ratio: Option<f64> = None;
    let mut dominance_ok = true;
    for p in &result.points {
        if let Some(r) = ratio(p.r4, p.r3) {
            if p.r3 > 0.0 {
                max_r4_over_r3 = Some(max_r4_over_r3.map_or(r, |m: f64| m.max(r)));
            }
        }
        if let Some(r) = ratio(p.e_upper_4, p.e_upper_3) {
            min_e_ratio = Some(min_e_ratio.map_or(r, |m: f64| m.min(r)));
        }
        if p.r_inf + 1e-12 < p.r4 || p.r4.max(0.0) + 1e-12 < p.r3.max(0.0) {
            dominance_ok = false;
        }
    }

    let mut deviations = Vec::new();
    if config.protocol == ProtocolKind::Mdi {
        let r_target = match config.source {
            SourceFamily::Wcs => 2.0,
            SourceFamily::Hsps => 3.0,
            SourceFamily::Thermal => 2.0,
        };
        let beats_target = result
            .points
            .iter()
            .any(|p| (p.r3 > 0.0 && p.r4 / p.r3 > r_target) || (p.r4 > 1e-12 && p.r3 <= 0.0));
        if !beats_target {
            deviations.push(format!(
                "optimal key-rate ratio never exceeded {r_target} (max {:?})",
                max_r4_over_r3
            ));
        }
        if min_e_ratio.is_none_or(|r| r >= 0.5) {
            deviations.push(format!(
                "error-bound ratio never dropped below 0.5 (min {:?})",
                min_e_ratio
            ));
        }
    }
    if !dominance_ok {
        deviations.push("method dominance violated at some grid point".into());
    }

    let flagged_points = result.points.iter().filter(|p| !p.flags.is_empty()).count();
    let config_text = config.to_flat_text();
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: config.name.clone(),
        config_hash: fnv1a(&config_text),
        config_text,
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        outputs: outputs
            .iter()
            .map(|(p, rows)| ManifestOutput {
                path: p
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                rows: *rows,
            })
            .collect(),
        summary: ManifestSummary {
            max_r4_over_r3,
            min_e_ratio,
            dominance_ok,
            points: result.points.len(),
            flagged_points,
        },
        deviations: deviations.clone(),
    };
    let manifest_path = out_dir.join("manifest.json");
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(std::io::Error::other(e)))?
            + "\n",
    )?;

    let mut output_paths: Vec<PathBuf> = outputs.into_iter().map(|(p, _)| p).collect();
    output_paths.push(manifest_path);
    Ok(RunSummary {
        max_r4_over_r3,
        min_e_ratio,
        dominance_ok,
        deviations,
        outputs: output_paths,
    })
}

type FigureSet = Vec<(&'static str, Vec<&'static str>, Vec<Vec<String>>)>;

fn figure_rows_bb84(result: &SweepResult) -> FigureSet {
    let points = &result.points;
    vec![
        (
            "fig1.csv",
            vec!["loss_db", "e1_ratio_4_over_3"],
            points
                .iter()
                .map(|p| {
                    vec![
                        fmt(p.loss_db),
                        ratio(p.e_upper_4, p.e_upper_3).map_or_else(String::new, fmt),
                    ]
                })
                .collect(),
        ),
        (
            "fig2.csv",
            vec!["loss_db", "r3_over_r_inf", "r4_over_r_inf"],
            points
                .iter()
                .map(|p| {
                    vec![
                        fmt(p.loss_db),
                        ratio(p.r3.max(0.0), p.r_inf).map_or_else(String::new, fmt),
                        ratio(p.r4.max(0.0), p.r_inf).map_or_else(String::new, fmt),
                    ]
                })
                .collect(),
        ),
        (
            "fig3.csv",
            vec!["loss_db", "r4_over_r3"],
            points
                .iter()
                .map(|p| {
                    vec![
                        fmt(p.loss_db),
                        ratio(p.r4, p.r3)
                            .filter(|_| p.r3 > 0.0)
                            .map_or_else(String::new, fmt),
                    ]
                })
                .collect(),
        ),
    ]
}

fn figure_rows_mdi(result: &SweepResult) -> FigureSet {
    let points = &result.points;
    vec![
        (
            "fig4.csv",
            vec!["loss_db", "e11_upper_3", "e11_upper_4", "e11_true"],
            points
                .iter()
                .map(|p| {
                    vec![
                        fmt(p.loss_db),
                        fmt(p.e_upper_3),
                        fmt(p.e_upper_4),
                        fmt(p.e_true),
                    ]
                })
                .collect(),
        ),
        (
            "fig5.csv",
            vec!["loss_db", "r3", "r4", "r_inf"],
            points
                .iter()
                .map(|p| {
                    vec![
                        fmt(p.loss_db),
                        fmt_floor(p.r3),
                        fmt_floor(p.r4),
                        fmt_floor(p.r_inf),
                    ]
                })
                .collect(),
        ),
        (
            "fig6.csv",
            vec!["loss_db", "r3_over_r_inf", "r4_over_r_inf"],
            points
                .iter()
                .map(|p| {
                    vec![
                        fmt(p.loss_db),
                        ratio(p.r3.max(0.0), p.r_inf).map_or_else(String::new, fmt),
                        ratio(p.r4.max(0.0), p.r_inf).map_or_else(String::new, fmt),
                    ]
                })
                .collect(),
        ),
        (
            "fig7.csv",
            vec!["loss_db", "r4_over_r3"],
            points
                .iter()
                .map(|p| {
                    vec![
                        fmt(p.loss_db),
                        ratio(p.r4, p.r3)
                            .filter(|_| p.r3 > 0.0)
                            .map_or_else(String::new, fmt),
                    ]
                })
                .collect(),
        ),
        (
            "fig8.csv",
            vec!["loss_db", "mu_opt_3", "mu_opt_4", "mu_opt_inf"],
            points
                .iter()
                .map(|p| {
                    vec![
                        fmt(p.loss_db),
                        fmt(p.mu_opt_3),
                        fmt(p.mu_opt_4),
                        fmt(p.mu_opt_inf),
                    ]
                })
                .collect(),
        ),
    ]
}

#[derive(Debug, Serialize)]
struct OracleComboReport {
    protocol: String,
    source: String,
    trials: u64,
    violations: usize,
    precondition_failures: u64,
    max_gap: f64,
    identity_violations: usize,
}

#[derive(Debug, Serialize)]
struct OracleRunReport {
    seed: u64,
    trials_per_combo: u64,
    combos: Vec<OracleComboReport>,
    lemma_violations: usize,
    total_violations: usize,
}

fn run_oracle(args: &RunArgs, out_dir: &Path) -> Result<i32> {
    let protocols: Vec<ProtocolKind> = match args.protocol.as_deref() {
        Some(p) => vec![parse_protocol(p).map_err(|message| Error::Config {
            line: 0,
            key: "protocol".into(),
            message,
        })?],
        None => vec![ProtocolKind::Bb84, ProtocolKind::Mdi],
    };
    let families: Vec<SourceFamily> = match args.source.as_deref() {
        Some(s) => vec![parse_source(s).map_err(|message| Error::Config {
            line: 0,
            key: "source".into(),
            message,
        })?],
        None => vec![SourceFamily::Wcs, SourceFamily::Hsps, SourceFamily::Thermal],
    };
    let seed = args.seed.unwrap_or(1);

    let mut combos = Vec::new();
    let mut total = 0usize;
    for &protocol in &protocols {
        for &family in &families {
            let report = oracle::certify_bounds(protocol, family, args.trials, seed)?;
            let alice = oracle::family_triple(family, Side::Alice, 20)?;
            let bob = oracle::family_triple(family, Side::Bob, 20)?;
            let identities = oracle::certify_appendix_identities(&alice, Some(&bob), 20, seed);
            total += report.violations.len() + identities.violations.len();
            for v in report.violations.iter().take(5) {
                eprintln!(
                    "violation [{} {}]: {} bound={} truth={} gap={}",
                    protocol.as_str(),
                    family.as_str(),
                    v.quantity,
                    v.bound,
                    v.truth,
                    v.gap
                );
            }
            combos.push(OracleComboReport {
                protocol: protocol.as_str().to_string(),
                source: family.as_str().to_string(),
                trials: report.trials,
                violations: report.violations.len(),
                precondition_failures: report.precondition_failures,
                max_gap: report.max_gap,
                identity_violations: identities.violations.len(),
            });
        }
    }
    let lemma = oracle::certify_lemma_monotonicity(1000, 10);
    total += lemma.violations.len();

    let report = OracleRunReport {
        seed,
        trials_per_combo: args.trials,
        combos,
        lemma_violations: lemma.violations.len(),
        total_violations: total,
    };
    fs::create_dir_all(out_dir)?;
    fs::write(
        out_dir.join("oracle_report.json"),
        serde_json::to_string_pretty(&report).map_err(|e| Error::Io(std::io::Error::other(e)))?
            + "\n",
    )?;
    println!(
        "oracle: {} combos, {} total violations (report in {})",
        report.combos.len(),
        total,
        out_dir.display()
    );
    Ok(if total == 0 { 0 } else { 2 })
}

/// Entry point used by the binary; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let Command::Run(args) = cli.command;
    match execute(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::UnknownScenario(_) | Error::InvalidParameter(_) => 1,
                _ => 1,
            }
        }
    }
}

fn execute(args: &RunArgs) -> Result<i32> {
    if args.oracle {
        return run_oracle(args, &args.out);
    }
    let selector = args.scenario.as_deref().ok_or_else(|| Error::Config {
        line: 0,
        key: "scenario".into(),
        message: "--scenario is required unless --oracle is given".into(),
    })?;
    let mut config = load_scenario(selector)?;
    apply_overrides(&mut config, &env_overrides())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let summary = run_scenario_to_dir(&config, &args.out)?;
    for path in &summary.outputs {
        println!("wrote {}", path.display());
    }
    for d in &summary.deviations {
        eprintln!("warning: {d}");
    }
    Ok(0)
}
