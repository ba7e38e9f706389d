use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_obsnoise");

fn obsnoise(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run_into(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = obsnoise(&args);
    assert!(o.status.success(), "run failed: {}", stderr(&o));
    o
}

fn schema_errors(summary: &Value) -> Vec<String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/summary.schema.json");
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    validator.iter_errors(summary).map(|e| e.to_string()).collect()
}

const BM: &str = "experiment = \"bm_convergence\"\nmap = \"ternary_shift\"\nz = [0.3, \"attractor_random\"]\n\
                  p = [1, 2]\nm = [100]\nn_blocks = 200\nrealizations = 3\nseed = 11\n";

#[test]
fn list_maps_prints_the_catalog() {
    let o = obsnoise(&["list-maps"]);
    assert!(o.status.success());
    let names: Vec<String> = String::from_utf8(o.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(names, ["ternary_shift", "hemmer", "pomeau_manneville", "cantor_ifs", "lozi"]);
}

#[test]
fn invalid_config_exits_one_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", &BM.replace("realizations = 3", "realizations = 0"));
    let o = obsnoise(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("realizations"), "{}", stderr(&o));

    let o = obsnoise(&["run", bad.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("o").exists());

    let unknown = write_config(dir.path(), "unknown.toml", &format!("{BM}colour = 1\n"));
    let o = obsnoise(&["validate", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));

    let missing = dir.path().join("missing.toml");
    assert_eq!(obsnoise(&["validate", missing.to_str().unwrap()]).status.code(), Some(1));

    let good = write_config(dir.path(), "good.toml", BM);
    assert!(obsnoise(&["validate", good.to_str().unwrap()]).status.success());
}

#[test]
fn runs_are_reproducible_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bm.toml", BM);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    run_into(&cfg, &a, &["--threads", "1"]);
    run_into(&cfg, &b, &["--threads", "1"]);
    run_into(&cfg, &c, &["--threads", "4"]);
    for file in ["rows.csv", "summary.json"] {
        let first = fs::read(a.join(file)).unwrap();
        assert_eq!(first, fs::read(b.join(file)).unwrap(), "{file}");
        assert_eq!(first, fs::read(c.join(file)).unwrap(), "{file}");
    }

    let rows = fs::read_to_string(a.join("rows.csv")).unwrap();
    let mut lines = rows.lines();
    assert_eq!(
        lines.next().unwrap(),
        "experiment,map,z,p,q,m,realization,kappa,mu,sigma,converged,bm_theory,seed"
    );
    assert_eq!(lines.count(), 2 * 2 * 3);
}

#[test]
fn manifest_round_trips_to_an_identical_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bm.toml", BM);
    let first = dir.path().join("first");
    run_into(&cfg, &first, &["--seed", "77"]);

    let manifest: Value = serde_json::from_str(&fs::read_to_string(first.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"].as_str().unwrap(), BM);
    assert_eq!(manifest["seed"], 77);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);

    let again = dir.path().join("again");
    run_into(&first.join("manifest.json"), &again, &[]);
    for file in ["rows.csv", "summary.json"] {
        assert_eq!(fs::read(first.join(file)).unwrap(), fs::read(again.join(file)).unwrap(), "{file}");
    }

    // The seed override really changes the draws.
    let plain = dir.path().join("plain");
    run_into(&cfg, &plain, &[]);
    assert_ne!(fs::read(first.join("rows.csv")).unwrap(), fs::read(plain.join("rows.csv")).unwrap());
}

#[test]
fn summaries_validate_against_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        ("bm", BM.to_string()),
        (
            "dim",
            "experiment = \"dimension\"\nmap = \"cantor_ifs\"\np = [1, 2, 3]\nm = [100]\nn_blocks = 100\nrealizations = 2\n".into(),
        ),
        (
            "trunc",
            "experiment = \"truncation\"\nmap = \"hemmer\"\nz = [0.1]\nq = [1, 6]\nm = [100]\nn_blocks = 100\nrealizations = 2\n".into(),
        ),
        (
            "hit",
            "experiment = \"hitting_time\"\nmap = \"ternary_shift\"\nz = [0.5]\np = [1]\nm = [100]\nrealizations = 20\n".into(),
        ),
    ];
    for (name, text) in configs {
        let cfg = write_config(dir.path(), &format!("{name}.toml"), &text);
        let out = dir.path().join(name);
        run_into(&cfg, &out, &[]);
        let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        let errors = schema_errors(&summary);
        assert!(errors.is_empty(), "{name}: {errors:?}");
        assert_eq!(out.join("survival.csv").exists(), name == "hit");
    }

    let mut broken: Value = serde_json::json!({
        "experiment": "dimension", "map": "lozi", "version": "0", "seed": 1,
        "cells": [], "dimension": [], "survival": [], "warnings": []
    });
    assert!(schema_errors(&broken).is_empty());
    broken["map"] = "henon".into();
    assert!(!schema_errors(&broken).is_empty());
}

#[test]
fn fit_subcommand_reads_a_csv_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("series.csv");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut text = String::from("t,x\n");
    for i in 0..200_000 {
        let x: f64 = rng.random();
        text.push_str(&format!("{i},{x}\n"));
    }
    fs::write(&path, text).unwrap();

    // Uniform draws observed at z = 0.5 give Gumbel maxima with location ln(2m).
    let o = obsnoise(&["fit", path.to_str().unwrap(), "--column", "x", "--m", "200", "--target", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["n_blocks"], 1000);
    assert!(report["kappa"].as_f64().unwrap().abs() < 0.1, "{report}");
    assert!((report["mu"].as_f64().unwrap() - (400f64).ln()).abs() < 0.15, "{report}");
    assert!((report["sigma"].as_f64().unwrap() - 1.0).abs() < 0.1, "{report}");

    let o = obsnoise(&["fit", path.to_str().unwrap(), "--column", "y", "--m", "200"]);
    assert_eq!(o.status.code(), Some(1));
    let o = obsnoise(&["fit", path.to_str().unwrap(), "--column", "x", "--m", "1000000"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dimension_subcommand_reuses_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "dim.toml",
        "experiment = \"dimension\"\nmap = \"ternary_shift\"\nz = [0.5]\np = [1, 2, 3, 4]\nm = [1000]\nn_blocks = 300\nrealizations = 3\n",
    );
    let out = dir.path().join("dim");
    run_into(&cfg, &out, &[]);
    let o = obsnoise(&["dimension", out.join("rows.csv").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let reports: Value = serde_json::from_slice(&o.stdout).unwrap();
    let d = reports[0]["estimate"]["dimension"].as_f64().unwrap();
    assert!((d - 1.0).abs() < 0.15, "dimension {d}");

    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["dimension"][0]["estimate"]["dimension"].as_f64().unwrap(), d);
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let o = obsnoise(&["validate", path.to_str().unwrap()]);
        assert!(o.status.success(), "{}: {}", path.display(), stderr(&o));
        n += 1;
    }
    assert!(n >= 4);
}
