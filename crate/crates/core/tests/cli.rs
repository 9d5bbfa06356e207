use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_obslab");

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn obslab(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("OBSLAB_THREADS").output().expect("binary runs")
}

fn run_into(cfg: &Path, dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", cfg.to_str().unwrap(), "--output-dir", dir.to_str().unwrap(), "--quiet"];
    args.extend_from_slice(extra);
    obslab(&args)
}

fn read_result(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("result.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn list_names_every_experiment() {
    let a = obslab(&["list"]);
    assert!(a.status.success());
    let text = String::from_utf8(a.stdout).unwrap();
    for name in [
        "evolve",
        "verify-fisher-limit",
        "verify-uncertainty",
        "verify-minimizer",
        "verify-madelung",
        "sweep-alpha",
        "transform-check",
        "momentum-divergence",
    ] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(name)), "{name} missing");
    }
    assert_eq!(text.lines().filter(|l| l.trim_start().starts_with('[')).count(), 8);
    assert_eq!(obslab(&["list"]).stdout, text.as_bytes());
}

#[test]
fn uncertainty_run_writes_result() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("u");
    let o = run_into(&config("uncertainty.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_result(&out);
    assert_eq!(r["experiment"], "verify-uncertainty");
    assert_eq!(r["seed"], 42);
    assert_eq!(r["pass"], true);
    assert!((r["results"]["cross"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert!(r["timestamp"].as_u64().is_some());
    assert_eq!(r["checks"]["cross_relative_error"]["pass"], true);
}

#[test]
fn sweep_summary_has_one_row_per_alpha() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let o = run_into(&config("sweep_alpha.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(out.join("summary.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "l2_discrepancy").unwrap();
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert!(row[col].parse::<f64>().unwrap() <= 1e-10);
    }
}

#[test]
fn bad_config_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    let cfg = write_config(tmp.path(), "experiment = \"evolve\"\n[physics]\nmass = -1.0\n");
    let o = run_into(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let cfg = write_config(tmp.path(), "experiment = \"evolve\"\nbogus = 1\n");
    assert_eq!(run_into(&cfg, &out, &[]).status.code(), Some(2));

    let cfg = write_config(tmp.path(), "experiment = \"no-such-thing\"\n");
    assert_eq!(run_into(&cfg, &out, &[]).status.code(), Some(2));

    assert_eq!(run_into(&tmp.path().join("missing.toml"), &out, &[]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn tightened_threshold_fails_with_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("u");
    let o = run_into(&config("uncertainty.toml"), &out, &["--set", "checks.uncertainty_mc_rel=1e-9"]);
    assert_eq!(o.status.code(), Some(1));
    let r = read_result(&out);
    assert_eq!(r["pass"], false);
    assert_eq!(r["checks"]["mc_relative_error"]["pass"], false);
}

#[test]
fn guard_exits_3_and_names_itself() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "experiment = \"evolve\"\n[potential]\nfamily = \"constant\"\nv0 = 1e6\n[run]\ndt_step = 0.01\nn_steps = 10\n",
    );
    let o = run_into(&cfg, &tmp.path().join("g"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("AliasGuard"));
}

fn without_timestamp(dir: &Path) -> Value {
    let mut r = read_result(dir);
    r.as_object_mut().unwrap().remove("timestamp");
    r
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn runs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for cfg in ["evolve_free.toml", "uncertainty.toml", "sweep_alpha.toml"] {
        assert_eq!(run_into(&config(cfg), &a, &[]).status.code(), Some(0));
        assert_eq!(run_into(&config(cfg), &b, &[]).status.code(), Some(0));
        assert_eq!(without_timestamp(&a), without_timestamp(&b), "{cfg}");
        assert_eq!(csv_files(&a), csv_files(&b), "{cfg}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = config("sweep_alpha.toml");
    assert_eq!(run_into(&cfg, &a, &[]).status.code(), Some(0));
    let one = Command::new(BIN)
        .args(["run", cfg.to_str().unwrap(), "--output-dir", b.to_str().unwrap(), "--quiet"])
        .env("OBSLAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(without_timestamp(&a), without_timestamp(&b));
    assert_eq!(csv_files(&a), csv_files(&b));

    let bad = Command::new(BIN)
        .args(["run", cfg.to_str().unwrap(), "--output-dir", b.to_str().unwrap()])
        .env("OBSLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("u");
    let o = run_into(&config("uncertainty.toml"), &out, &["--seed", "7", "--set", "run.samples=20000"]);
    assert_eq!(o.status.code(), Some(0));
    let r = read_result(&out);
    assert_eq!(r["seed"], 7);
    assert_eq!(r["config"]["seed"], 7);
    assert_eq!(r["config"]["run"]["samples"], 20000);
}

#[test]
fn fields_csv_has_expected_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("e");
    let o = run_into(&config("evolve_free.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(out.join("fields_600.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["x", "rho", "S", "re_psi", "im_psi"]);
    assert_eq!(rdr.records().count(), 1024);
}
