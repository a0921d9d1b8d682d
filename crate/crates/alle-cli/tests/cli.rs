//! Command-line behavior: exit codes, report determinism, and the
//! sensitivity fixture fed through the binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn alle() -> Command {
    Command::new(env!("CARGO_BIN_EXE_alle"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    alle()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_generator_config(dir: &Path, noise: f64, seed: u64) -> std::path::PathBuf {
    let path = dir.join("gen.json");
    let config = serde_json::json!({
        "state": "f",
        "mean_coeffs": [
            [0.0, 2.0, 0.0], [0.0, -1.5, 0.3], [1.0, 0.5, 0.2], [0.0, 0.8, -0.2],
            [0.0, 0.3, 0.1], [2.0, 1.1, 0.1], [0.0, 0.9, -0.2], [0.0, 0.4, 0.2],
            [0.0, 0.6, 0.05]
        ],
        "oscillation_gain": [0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01],
        "noise_std": noise,
        "steps_per_recording": 60,
        "seed": seed
    });
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn unknown_subcommand_exits_2_with_usage() {
    let out = alle().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.to_lowercase().contains("usage"), "{stderr}");
}

#[test]
fn missing_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "sensitivity",
            "--in",
            "nope.csv",
            "--criterion",
            "c2",
            "--out",
            "out",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_sensor_prefix_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_generator_config(dir.path(), 0.0, 1);
    let out = run_in(dir.path(), &["generate", "--config", "gen.json", "--out", "data"]);
    assert!(out.status.success());
    let out = run_in(
        dir.path(),
        &[
            "train", "--in", "data", "--per-recording", "40", "--family", "rf", "--sensors",
            "12", "--seed", "1", "--out", "model",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_threads_env_exits_2() {
    let out = alle()
        .env("ALLE_THREADS", "zero")
        .args(["generate", "--config", "x.json", "--out", "y"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_then_full_pipeline_runs() {
    let dir = tempfile::tempdir().unwrap();
    write_generator_config(dir.path(), 0.02, 7);
    assert!(run_in(dir.path(), &["generate", "--config", "gen.json", "--out", "data"])
        .status
        .success());

    // preprocess materializes the sample set
    let out = run_in(
        dir.path(),
        &[
            "preprocess", "--in", "data", "--per-recording", "40", "--out", "pre",
        ],
    );
    assert!(out.status.success());
    assert!(dir.path().join("pre/sample_set.csv").is_file());

    // train a forest on the criterion-ordered prefix
    let out = run_in(
        dir.path(),
        &[
            "train", "--in", "pre/sample_set.csv", "--family", "rf", "--sensors", "3",
            "--ordering", "c2", "--seed", "9", "--out", "model", "--trees", "25",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("model/model.json").is_file());

    // importance for the trained forest on the training set
    let out = run_in(
        dir.path(),
        &[
            "importance", "--model", "model/model.json", "--in", "pre/sample_set.csv",
            "--seed", "11", "--out", "imp",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("imp/importance.json").is_file());

    // the sweep writes the curve CSV next to the report
    let out = run_in(
        dir.path(),
        &[
            "sweep", "--in", "pre/sample_set.csv", "--family", "reg", "--ordering", "c2",
            "--seed", "13", "--out", "sweep",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let curve = fs::read_to_string(dir.path().join("sweep/sweep_curve.csv")).unwrap();
    assert!(curve.starts_with("M,r2,mae\n"));
    assert_eq!(curve.lines().count(), 10);
}

#[test]
fn svr_iteration_cap_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    write_generator_config(dir.path(), 0.3, 19);
    assert!(run_in(dir.path(), &["generate", "--config", "gen.json", "--out", "data"])
        .status
        .success());
    let out = run_in(
        dir.path(),
        &[
            "train", "--in", "data", "--per-recording", "40", "--family", "svr",
            "--sensors", "all", "--seed", "1", "--out", "model", "--svr-max-iter", "2",
            "--svr-c", "100", "--svr-eps", "0.0001",
        ],
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("converge"));
}

#[test]
fn sensitivity_summary_prints_four_decimal_values() {
    // The generate -> sensitivity closure at the binary level: the computed
    // raw-criterion ordering must equal the generator's ground truth, and the
    // summary renders values with four decimals.
    let dir = tempfile::tempdir().unwrap();
    write_generator_config(dir.path(), 0.0, 31);
    assert!(run_in(dir.path(), &["generate", "--config", "gen.json", "--out", "data"])
        .status
        .success());
    let out = run_in(
        dir.path(),
        &[
            "sensitivity", "--in", "data", "--per-recording", "40", "--criterion", "c2",
            "--out", "sens",
        ],
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("0.2000"), "{stdout}");

    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("data/ground_truth.json")).unwrap())
            .unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sens/sensitivity.json")).unwrap())
            .unwrap();
    assert_eq!(truth["order_c2"], report["report"]["order_c2"]);
}

#[test]
fn importance_rejects_non_forest_models() {
    let dir = tempfile::tempdir().unwrap();
    write_generator_config(dir.path(), 0.02, 3);
    assert!(run_in(dir.path(), &["generate", "--config", "gen.json", "--out", "data"])
        .status
        .success());
    let out = run_in(
        dir.path(),
        &[
            "train", "--in", "data", "--per-recording", "40", "--family", "reg",
            "--sensors", "all", "--seed", "1", "--out", "model",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run_in(
        dir.path(),
        &[
            "importance", "--model", "model/model.json", "--in", "data",
            "--per-recording", "40", "--seed", "1", "--out", "imp",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("random-forest"));
}

#[test]
fn reports_render_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    write_generator_config(dir.path(), 0.05, 21);
    assert!(run_in(dir.path(), &["generate", "--config", "gen.json", "--out", "data"])
        .status
        .success());
    let args = [
        "estimate", "--in", "data", "--per-recording", "40", "--family", "rf",
        "--fraction", "0.8", "--seed", "5", "--out", "est", "--trees", "20",
    ];
    assert!(run_in(dir.path(), &args).status.success());
    let first = fs::read(dir.path().join("est/estimate.json")).unwrap();
    assert!(run_in(dir.path(), &args).status.success());
    assert_eq!(first, fs::read(dir.path().join("est/estimate.json")).unwrap());
}

/// Reference normalized-criterion values for the vertical-distance column;
/// the binary must reproduce the known descending order when fed a sample set
/// engineered to yield exactly these values.
#[test]
fn sensitivity_reproduces_reference_ordering_from_csv() {
    let targets = [
        ("P0", 0.3165),
        ("PL1", 0.3117),
        ("PL2", 0.1672),
        ("PL3", 0.2676),
        ("PL4", 0.4260),
        ("PR1", 0.3280),
        ("PR2", 0.1723),
        ("PR3", 0.3130),
        ("PR4", 0.2750),
    ];
    // Build a 7-value mean profile per sensor with normalized criterion v:
    // profile 0, 1, 1-w, 1, 1-w, 1, 1-w has steps {1, w x5} and range 1, so
    // the normalized criterion is (1 + 5w) / 6; invert for w.
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("# state=d unit=mm\nY,X1,X2,X3,X4,X5,X6,X7,X8,X9\n");
    let grid = [-45.0, -30.0, -15.0, 0.0, 15.0, 30.0, 45.0];
    for (i, &label) in grid.iter().enumerate() {
        // Two identical samples per parameter keep the means exact.
        for _ in 0..2 {
            let mut row = vec![label.to_string()];
            for &(_, v) in &targets {
                let w: f64 = (6.0 * v - 1.0) / 5.0;
                let profile = [0.0, 1.0, 1.0 - w, 1.0, 1.0 - w, 1.0, 1.0 - w];
                row.push(profile[i].to_string());
            }
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
    }
    fs::write(dir.path().join("set.csv"), csv).unwrap();

    let out = run_in(
        dir.path(),
        &[
            "sensitivity", "--in", "set.csv", "--criterion", "c1", "--out", "sens",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sens/sensitivity.json")).unwrap())
            .unwrap();
    let order: Vec<String> = report["report"]["order_c1"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_owned())
        .collect();
    assert_eq!(
        order,
        ["PL4", "PR1", "P0", "PR3", "PL1", "PR4", "PL3", "PR2", "PL2"]
    );
    // The computed values match the targets to rounding precision.
    for (k, &(label, v)) in targets.iter().enumerate() {
        let got = report["report"]["c1"][k].as_f64().unwrap();
        assert!((got - v).abs() < 1e-9, "{label}: {got} vs {v}");
    }
}
