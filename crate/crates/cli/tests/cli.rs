//! End-to-end checks of the command-line driver: exit codes, output
//! schemas, determinism, and the documented example behaviors.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_xbar-pmm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("command runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        stderr_of(&out)
    );
    stdout_of(&out)
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .collect()
}

const SWEEP_HEADER: &str =
    "n,k,mode,arrays,cycles,area_mm2,latency_us,energy_nj,throughput_kops,tpa_kops_mm2";

#[test]
fn run_json_is_deterministic_and_schema_complete() {
    let args = [
        "run", "--degree", "32", "--bitwidth", "8", "--sigma", "0.25", "--seed", "3", "--format",
        "json",
    ];
    let first = run_ok(&args);
    let second = run_ok(&args);
    assert_eq!(first, second);

    let doc: serde_json::Value = serde_json::from_str(&first).unwrap();
    for key in ["config", "ring", "plan", "product", "error_stats", "cost"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    assert_eq!(doc["product"].as_array().unwrap().len(), 32);
    assert_eq!(doc["ring"]["n"], 32);
    assert_eq!(doc["config"]["sigma"], 0.25);
}

#[test]
fn run_default_point_omits_error_stats_and_lands_in_interval_band() {
    let text = run_ok(&["run", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(doc.get("error_stats").is_none());
    assert_eq!(doc["ring"]["n"], 256);
    assert_eq!(doc["ring"]["k"], 16);
    let ii = doc["cost"]["initiation_interval"].as_u64().unwrap();
    assert!((64..=256).contains(&ii), "interval {ii} outside band");
}

#[test]
fn run_csv_is_one_row_of_the_documented_schema() {
    let text = run_ok(&[
        "run", "--degree", "64", "--bitwidth", "8", "--format", "csv",
    ]);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# xbar-pmm run v1"));
    assert!(lines[1].starts_with("# config:"));
    assert_eq!(lines[2], SWEEP_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("64,8,bit-mapping,"));
}

#[test]
fn verify_covers_every_oracle_suite_and_passes() {
    let text = run_ok(&["verify", "--pairs", "3", "--samples", "500"]);
    for suite in [
        "fabric_vs_reference",
        "ntt_software_vs_reference",
        "ntt_fabric_vs_reference",
        "barrett_vs_remainder",
        "barrett_exhaustive",
    ] {
        assert!(text.contains(suite), "coverage misses {suite}");
    }
    assert!(text.contains("0 mismatches"));
    assert!(text.contains("result: PASS"));
}

#[test]
fn verify_corrupted_barrett_constant_exits_one() {
    let out = run(&[
        "verify",
        "--degrees",
        "4",
        "--bitwidths",
        "4",
        "--pairs",
        "3",
        "--samples",
        "200",
        "--corrupt-barrett-mu",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_of(&out).contains("result: FAIL"));
}

#[test]
fn verify_rejects_non_power_of_two_degree() {
    let out = run(&["verify", "--degrees", "5", "--pairs", "2", "--samples", "100"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("power of two"));
}

#[test]
fn sweep_csv_rows_match_grid_and_round_trip() {
    let text = run_ok(&[
        "sweep",
        "--degrees",
        "64,128",
        "--bitwidths",
        "4,8",
        "--format",
        "csv",
    ]);
    assert!(text.lines().next().unwrap().starts_with("# xbar-pmm sweep v1"));
    assert!(text.lines().any(|l| l == SWEEP_HEADER));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 2 * 2 * 2);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 10);
        fields[0].parse::<usize>().unwrap();
        fields[1].parse::<u32>().unwrap();
        assert!(matches!(fields[2], "bit-mapping" | "conventional"));
        fields[3].parse::<usize>().unwrap();
        fields[4].parse::<u64>().unwrap();
        for f in &fields[5..] {
            let v: f64 = f.parse().unwrap();
            assert_eq!(&v.to_string(), f, "float field does not round-trip");
        }
    }
}

#[test]
fn sweep_json_point_count_matches_grid() {
    let text = run_ok(&[
        "sweep",
        "--degrees",
        "64",
        "--bitwidths",
        "4,8,16",
        "--modes",
        "bit-mapping",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["points"].as_array().unwrap().len(), 3);
}

#[test]
fn compare_mapping_reference_point_ratios() {
    let text = run_ok(&["compare-mapping", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let entries = doc["ratios"]["entries"].as_array().unwrap();
    let ratio = |field: &str| -> f64 {
        entries
            .iter()
            .find(|e| e["field"] == field)
            .unwrap_or_else(|| panic!("missing field {field}"))["ratio"]
            .as_f64()
            .unwrap()
    };
    assert!(ratio("area.shift_adder") <= 0.20);
    assert!(ratio("throughput_per_area") >= 3.0);
    for e in entries {
        let a = e["a"].as_f64().unwrap();
        let b = e["b"].as_f64().unwrap();
        if b != 0.0 {
            let want = a / b;
            let got = e["ratio"].as_f64().unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }
}

#[test]
fn compare_mapping_csv_schema() {
    let text = run_ok(&[
        "compare-mapping",
        "--degree",
        "64",
        "--bitwidth",
        "8",
        "--format",
        "csv",
    ]);
    assert!(text.lines().any(|l| l == "field,bit_mapping,conventional,ratio"));
    assert!(text.contains("throughput_per_area,"));
}

#[test]
fn noise_study_with_zero_sigma_is_exact_on_both_routes() {
    let text = run_ok(&[
        "noise-study",
        "--sigmas",
        "0",
        "--degrees",
        "8",
        "--pairs",
        "2",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let config = &doc["configs"][0];
    assert_eq!(config["conv_mean_rate"], 0.0);
    assert_eq!(config["ntt_mean_rate"], 0.0);
    assert_eq!(config["holds"], true);
    for sample in config["samples"].as_array().unwrap() {
        assert_eq!(sample["conv_error_rate"], 0.0);
        assert_eq!(sample["ntt_error_rate"], 0.0);
    }
}

#[test]
fn noise_study_csv_lists_every_pair() {
    let text = run_ok(&[
        "noise-study",
        "--sigmas",
        "0.25,0.5",
        "--degrees",
        "8",
        "--pairs",
        "3",
        "--format",
        "csv",
    ]);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 2 * 3);
    for row in rows {
        assert_eq!(row.split(',').count(), 7);
    }
    assert!(text.contains("# holding:"));
}

#[test]
fn dump_plan_toy_weights_show_the_shift_adder_gap() {
    let text = run_ok(&["dump-plan", "--toy"]);
    assert!(text.contains("mode: bit-mapping"));
    assert!(text.contains("mode: conventional"));
    assert!(text.contains("shift-adders: 2"));
    assert!(text.contains("shift-adders: 8"));
}

#[test]
fn dump_plan_zero_polynomial_needs_one_physical_array() {
    let text = run_ok(&["dump-plan", "--zero", "--degree", "64", "--bitwidth", "8"]);
    assert!(text.contains("physical-arrays: 1"));
}

#[test]
fn dump_plan_reference_point_lists_sixteen_pes() {
    let text = run_ok(&["dump-plan", "--degree", "256", "--bitwidth", "16"]);
    assert!(text.contains("pe-count: 16"));
    assert!(text.contains("reuse-factor:"));
    assert!(text.contains("logical-arrays:"));
    assert!(text.contains("physical-arrays:"));
}

#[test]
fn config_file_loads_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "degree = 16\nbitwidth = 4\nseed = 9\n").unwrap();
    let text = run_ok(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--degree",
        "32",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["config"]["degree"], 32);
    assert_eq!(doc["config"]["bitwidth"], 4);
    assert_eq!(doc["config"]["modulus"], 15);
    assert_eq!(doc["config"]["seed"], 9);
}

#[test]
fn unknown_config_field_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "degree = 16\nbogus = 1\n").unwrap();
    let out = run(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("bogus"));
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let args = ["sweep", "--degrees", "64", "--bitwidths", "4", "--format", "csv"];
    let stdout_text = run_ok(&args);
    let mut with_out: Vec<&str> = args.to_vec();
    let path_str = path.to_str().unwrap();
    with_out.extend(["--out", path_str]);
    let piped = run_ok(&with_out);
    assert!(piped.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout_text);
    assert!(Path::new(path_str).exists());
}
