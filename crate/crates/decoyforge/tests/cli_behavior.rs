//! End-to-end behavior of the command-line interface: config files, CSV
//! schemas, exit codes.

use std::fs;

use clap::Parser;
use decoyforge::cli::{load_scenario, run, run_scenario_to_dir, Cli};
use decoyforge::protocol::builtin_scenario;

#[test]
fn scenario_file_roundtrip_and_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("custom.cfg");
    fs::write(
        &config_path,
        "protocol = bb84\nsource = wcs\nloss_db = 5,15\nmu1 = 0.2\nseed = 9\n",
    )
    .unwrap();
    let config = load_scenario(config_path.to_str().unwrap()).unwrap();
    assert_eq!(config.name, "custom");
    assert_eq!(config.seed, 9);

    let out = dir.path().join("out");
    let summary = run_scenario_to_dir(&config, &out).unwrap();
    assert!(summary.dominance_ok);

    // Every output exists and is non-empty.
    for path in &summary.outputs {
        let metadata = fs::metadata(path).unwrap();
        assert!(metadata.len() > 0, "{path:?} is empty");
    }

    // The raw CSV parses back with the documented schema.
    let mut reader = csv::Reader::from_path(out.join("sweep_raw.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(&headers[0], "loss_db");
    assert_eq!(&headers[7], "s_lower_3");
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        for field in row.iter().take(13) {
            field.parse::<f64>().unwrap();
        }
    }

    // Figure CSVs for the point-to-point protocol.
    for fig in ["fig1.csv", "fig2.csv", "fig3.csv"] {
        assert!(out.join(fig).exists(), "{fig} missing");
    }
    assert!(!out.join("fig4.csv").exists());

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"], "custom");
    assert!(manifest["config_hash"].as_str().unwrap().len() == 16);
    assert_eq!(manifest["summary"]["points"], 2);
}

#[test]
fn mdi_scenarios_emit_their_figure_set() {
    let mut config = builtin_scenario("mdi_wcs").unwrap();
    config.loss_grid = vec![20.0];
    let dir = tempfile::tempdir().unwrap();
    run_scenario_to_dir(&config, dir.path()).unwrap();
    for fig in ["fig4.csv", "fig5.csv", "fig6.csv", "fig7.csv", "fig8.csv"] {
        assert!(dir.path().join(fig).exists(), "{fig} missing");
    }
    assert!(!dir.path().join("fig1.csv").exists());
}

#[test]
fn missing_config_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let cli = Cli::parse_from([
        "decoyforge",
        "run",
        "--scenario",
        "/definitely/not/a/file.cfg",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(run(cli), 1);
}

#[test]
fn malformed_config_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.cfg");
    fs::write(&config_path, "protocol = bb84\nmu1 = not_a_number\n").unwrap();
    let cli = Cli::parse_from([
        "decoyforge",
        "run",
        "--scenario",
        config_path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(run(cli), 1);
}

#[test]
fn oracle_mode_writes_report_and_exits_clean() {
    let dir = tempfile::tempdir().unwrap();
    let cli = Cli::parse_from([
        "decoyforge",
        "run",
        "--oracle",
        "--trials",
        "50",
        "--seed",
        "7",
        "--protocol",
        "bb84",
        "--source",
        "wcs",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(run(cli), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("oracle_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["seed"], 7);
    assert_eq!(report["total_violations"], 0);
    assert_eq!(report["combos"][0]["protocol"], "bb84");
}
