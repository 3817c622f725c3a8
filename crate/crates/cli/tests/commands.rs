use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

struct Run {
    code: i32,
    out: PathBuf,
    stdout: String,
    stderr: String,
}

fn mzk(dir: &Path, command: &str, toml: &str, extra: &[&str]) -> Run {
    let config = dir.join(format!("{command}.toml"));
    fs::write(&config, toml).unwrap();
    let out = dir.join(format!("{command}-out"));
    let Output { status, stdout, stderr } = Command::new(env!("CARGO_BIN_EXE_mzk"))
        .arg(command)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    Run {
        code: status.code().unwrap(),
        out,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_RUN: &str = "[grid]\nnx = 32\nny = 32\n[time]\nT = 0.5\ndt = 2e-3\nsample_every = 10\n";

#[test]
fn zero_data_gives_an_all_zero_csv() {
    let dir = tempfile::tempdir().unwrap();
    let r = mzk(
        dir.path(),
        "simulate",
        "[initial]\nkind = \"zero\"\n[grid]\nnx = 16\nny = 16\n[time]\nT = 0.05\n",
        &["--quiet"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.is_empty());
    let csv = fs::read_to_string(r.out.join("snapshots.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("t,l2_sq,"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() >= 2);
    for row in rows {
        assert!(row.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0), "{row}");
    }
    let bounds = json(r.out.join("bounds.json"));
    assert!(bounds["bounds"].as_array().unwrap().iter().all(|b| b["holds"] == true));
}

#[test]
fn admissible_run_reports_the_weighted_bound_holding() {
    let dir = tempfile::tempdir().unwrap();
    let r = mzk(dir.path(), "simulate", SMALL_RUN, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let bounds = json(r.out.join("bounds.json"));
    assert_eq!(bounds["hypotheses_met"], true);
    let weighted = bounds["bounds"]
        .as_array()
        .unwrap()
        .iter()
        .find(|b| b["name"] == "weighted_l2_decay")
        .unwrap();
    assert_eq!(weighted["holds"], true);
    assert!(bounds["weighted_l2_fit"]["gamma_fit"].as_f64().unwrap() > 0.0);

    let manifest = json(r.out.join("manifest.json"));
    assert_eq!(manifest["config"]["dt"], 2e-3);
    assert_eq!(manifest["run_id"].as_str().unwrap().len(), 12);
    for key in ["snapshots_csv", "constants_json", "bounds_json", "checkpoint"] {
        assert!(r.out.join(manifest["outputs"][key].as_str().unwrap()).is_file(), "{key}");
    }
    let (u, t) = mzk_core::checkpoint::read(r.out.join("final.zkcp")).unwrap();
    assert_eq!(t, 0.5);
    assert_eq!((u.grid().nx(), u.grid().ny()), (32, 32));
}

#[test]
fn nonpositive_dt_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let r = mzk(dir.path(), "simulate", "[time]\ndt = 0.0\n", &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("dt"), "{}", r.stderr);
    assert!(!r.out.exists());
}

#[test]
fn malformed_config_and_missing_flag_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mzk(dir.path(), "simulate", "[grid]\nnz = 3\n", &[]).code, 1);
    assert_eq!(mzk(dir.path(), "simulate", "[grid\n", &[]).code, 1);
    let status = Command::new(env!("CARGO_BIN_EXE_mzk")).arg("simulate").output().unwrap().status;
    assert_eq!(status.code(), Some(1));
    let status = Command::new(env!("CARGO_BIN_EXE_mzk")).arg("no-such-command").output().unwrap().status;
    assert_eq!(status.code(), Some(1));
}

#[test]
fn large_data_diverges_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let r = mzk(
        dir.path(),
        "simulate",
        "[grid]\nnx = 16\nny = 16\n[time]\nT = 1.0\ndt = 0.05\n[initial]\namplitude = 200.0\n",
        &[],
    );
    assert_eq!(r.code, 2, "{}{}", r.stdout, r.stderr);
    assert!(r.stderr.contains("diverged"), "{}", r.stderr);
}

#[test]
fn check_constants_accepts_small_data_on_the_unit_square() {
    let dir = tempfile::tempdir().unwrap();
    let r = mzk(dir.path(), "check-constants", "[initial]\namplitude = 0.004\n", &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let doc = json(r.out.join("constants.json"));
    assert_eq!(doc["admissible"], true);
    assert!((doc["A2"].as_f64().unwrap() - 15.038_107_151_770_2).abs() < 1e-9);
    let printed: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(printed, doc);
}

#[test]
fn check_constants_flags_a_large_domain() {
    let dir = tempfile::tempdir().unwrap();
    let r = mzk(dir.path(), "check-constants", "[domain]\nL = 10.0\nB = 10.0\n", &["--quiet"]);
    assert_eq!(r.code, 3);
    let doc = json(r.out.join("constants.json"));
    assert!(doc["A2"].as_f64().unwrap() < 0.0);
    assert!(doc["unmet"].as_array().unwrap().iter().any(|u| u == "A^2 > 0"));
}

#[test]
fn check_constants_flags_data_above_the_threshold() {
    let dir = tempfile::tempdir().unwrap();
    // fails the data condition but still has a full report
    let r = mzk(dir.path(), "check-constants", "[initial]\namplitude = 0.05\n", &["--quiet"]);
    assert_eq!(r.code, 3);
    assert_eq!(json(r.out.join("constants.json"))["admissible"], false);
    // ||u0||^2 = 3 a^2 / 8 exceeds both the threshold and 1/2
    let r = mzk(dir.path(), "check-constants", "[initial]\namplitude = 1.5\n", &["--quiet"]);
    assert_eq!(r.code, 3);
    let doc = json(r.out.join("constants.json"));
    assert_eq!(doc["admissible"], false);
    assert!(doc["u0_l2_sq"].as_f64().unwrap() > 0.609);
}

#[test]
fn verify_inequalities_passes_and_rejects_a_thin_grid() {
    let dir = tempfile::tempdir().unwrap();
    let r = mzk(
        dir.path(),
        "verify-inequalities",
        "[grid]\nnx = 64\nny = 64\n[functional]\nfields = 200\n",
        &["--seed", "11"],
    );
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    let doc = json(r.out.join("inequalities.json"));
    assert_eq!(doc["seed"], 11);
    assert_eq!(doc["sweep"]["checks"], 600);
    let y = &doc["steklov"][1];
    assert_eq!(y["direction"], "y");
    assert!(y["rel_error"].as_f64().unwrap() < 0.01);

    let r = mzk(dir.path(), "verify-inequalities", "[grid]\nny = 4\n", &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("grid too small"), "{}", r.stderr);
}

#[test]
fn convergence_needs_three_levels() {
    let dir = tempfile::tempdir().unwrap();
    let r = mzk(dir.path(), "convergence", "[convergence]\nlevels = [32]\n", &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("at least 3"), "{}", r.stderr);
}

#[test]
fn convergence_ladder_writes_the_order_table() {
    let dir = tempfile::tempdir().unwrap();
    let r = mzk(
        dir.path(),
        "convergence",
        "[convergence]\nlevels = [16, 32, 64]\nT = 0.1\npowers = [0]\nmin_order = 1.8\n",
        &[],
    );
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    let csv = fs::read_to_string(r.out.join("convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "power,n,dx,dt,max_error,order");
    assert_eq!(lines.len(), 5);
    let order: f64 = lines[4].rsplit(',').next().unwrap().parse().unwrap();
    assert!(order >= 1.8, "{csv}");
}

#[test]
fn decay_study_flags_inadmissible_amplitudes_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let toml = format!("{SMALL_RUN}[decay]\namplitudes = [0.004, 0.05]\n");
    let r = mzk(dir.path(), "decay-study", &toml, &[]);
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    let doc = json(r.out.join("decay.json"));
    let runs = doc["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    assert_eq!(runs[0]["hypotheses_met"], true);
    assert_eq!(runs[0]["weighted_l2_holds"], true);
    assert_eq!(runs[1]["hypotheses_met"], false);
    assert!(r.stdout.contains("hypotheses unmet"));
}

#[test]
fn decay_study_rejects_an_empty_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let r = mzk(dir.path(), "decay-study", "[decay]\namplitudes = []\n", &[]);
    assert_eq!(r.code, 1);
}

#[test]
fn commands_are_byte_for_byte_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let a = mzk(dir.path(), "simulate", SMALL_RUN, &["--seed", "5"]);
    let first: Vec<Vec<u8>> = ["snapshots.csv", "constants.json", "bounds.json", "final.zkcp", "manifest.json"]
        .iter()
        .map(|f| fs::read(a.out.join(f)).unwrap())
        .collect();
    let b = mzk(dir.path(), "simulate", SMALL_RUN, &["--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
    for (k, f) in ["snapshots.csv", "constants.json", "bounds.json", "final.zkcp", "manifest.json"]
        .iter()
        .enumerate()
    {
        assert_eq!(first[k], fs::read(b.out.join(f)).unwrap(), "{f}");
    }

    let toml = "[grid]\nnx = 32\nny = 32\n[functional]\nfields = 50\n";
    let a = mzk(dir.path(), "verify-inequalities", toml, &["--seed", "3"]);
    let first = fs::read(a.out.join("inequalities.json")).unwrap();
    mzk(dir.path(), "verify-inequalities", toml, &["--seed", "3"]);
    assert_eq!(first, fs::read(a.out.join("inequalities.json")).unwrap());
    let c = mzk(dir.path(), "verify-inequalities", toml, &["--seed", "4"]);
    assert_ne!(first, fs::read(c.out.join("inequalities.json")).unwrap());
}
