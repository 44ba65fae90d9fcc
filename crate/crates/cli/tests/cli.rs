//! End-to-end tests of the `medassign` binary: every subcommand, the
//! artifact formats, and the exit-code contract (0 success, 2 schema/config,
//! 3 solver, 4 integrity).

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn medassign() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_medassign"));
    // Hermetic by default; the env-var test opts back in.
    cmd.env_remove("MEDASSIGN_OUT");
    cmd
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "expected exit {code}\nstdout: {}\nstderr: {}",
        stdout(out),
        stderr(out)
    );
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Small generated world shared by the pipeline tests.
fn generate_corpus(dir: &Path, seed: u64) {
    let out = medassign()
        .args([
            "generate",
            "--mediators",
            "10",
            "--stations",
            "3",
            "--case-types",
            "2",
            "--cases",
            "200",
            "--history-days",
            "60",
            "--seed",
            &seed.to_string(),
            "--out",
        ])
        .arg(dir)
        .output()
        .unwrap();
    assert_exit(&out, 0);
}

const CORPUS_FILES: [&str; 4] = ["mediators.csv", "cases.csv", "rates.csv", "durations.csv"];

#[test]
fn generate_same_seed_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    generate_corpus(&a, 11);
    generate_corpus(&b, 11);
    for f in CORPUS_FILES {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f} differs across identical seeds");
    }
}

#[test]
fn generate_seed_changes_output() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    generate_corpus(&a, 11);
    generate_corpus(&b, 12);
    assert_ne!(read(&a.join("cases.csv")), read(&b.join("cases.csv")));
}

#[test]
fn generate_writes_versioned_headers() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("c");
    generate_corpus(&dir, 11);
    for f in CORPUS_FILES {
        let text = read(&dir.join(f));
        assert!(text.starts_with("#schema:v1\n"), "{f} missing schema line");
    }
}

#[test]
fn estimate_va_pipeline_produces_tables() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("corpus");
    generate_corpus(&corpus, 11);
    let out_dir = tmp.path().join("out");
    let out = medassign()
        .args(["estimate-va", "--corpus"])
        .arg(&corpus)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let text = stdout(&out);
    assert!(text.contains("sigma_mu_hat"), "stdout: {text}");
    let table = read(&out_dir.join("tables/va_estimates.csv"));
    assert!(table.starts_with("#schema:v1\n"));
    assert!(table.lines().nth(1).unwrap().starts_with("mediator,"));
    // One estimate row per mediator.
    assert_eq!(table.lines().count(), 2 + 10);
    assert!(out_dir.join("figures/va_histogram.svg").exists());
}

/// Forced-overload micro program: one mediator at load = capacity, one real
/// case worth 0.6. Taking it costs slack 1 at lambda 0.5, so the optimum is
/// objective 0.1 with a capacity price of 1.
const OVERLOAD_QP: &str = "# assignment-qp v1\n\
    penalty quadratic\n\
    lambda 0.5\n\
    horizon 10\n\
    mediator u0 load 3 cap 3 va 0.1\n\
    case r0 real cell 1 1 p 0.5 arrival 0\n\
    edge u0 r0\n";

#[test]
fn solve_prints_the_known_optimum() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("overload.qp");
    fs::write(&path, OVERLOAD_QP).unwrap();
    let out = medassign().arg("solve").arg(&path).output().unwrap();
    assert_exit(&out, 0);
    let text = stdout(&out);
    assert!(text.contains("status: Optimal"), "stdout: {text}");
    assert!(text.contains("objective: 0.100000"), "stdout: {text}");
    assert!(text.contains("x[u0 -> r0] = 1.000000"), "stdout: {text}");
}

#[test]
fn solve_json_envelope_is_versioned() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("overload.qp");
    fs::write(&path, OVERLOAD_QP).unwrap();
    let out = medassign().arg("solve").arg(&path).arg("--json").output().unwrap();
    assert_exit(&out, 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["schema"], "medassign-solution-v1");
    assert_eq!(doc["solution"]["status"], "Optimal");
    let xi = doc["solution"]["xi"][0].as_f64().unwrap();
    assert!((xi - 1.0).abs() < 1e-6, "xi = {xi}");
}

#[test]
fn solve_missing_instance_is_config_error() {
    let out = medassign()
        .args(["solve", "/nonexistent/instance.qp"])
        .output()
        .unwrap();
    assert_exit(&out, 2);
}

#[test]
fn solve_malformed_instance_is_config_error() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("bad.qp");
    fs::write(&path, "# assignment-qp v1\nmediator u0 load x\n").unwrap();
    let out = medassign().arg("solve").arg(&path).output().unwrap();
    assert_exit(&out, 2);
    assert!(stderr(&out).contains("error:"));
}

#[test]
fn solve_rejects_unversioned_instance() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("bad.qp");
    // Valid body, missing the format header line.
    fs::write(&path, OVERLOAD_QP.trim_start_matches("# assignment-qp v1\n")).unwrap();
    let out = medassign().arg("solve").arg(&path).output().unwrap();
    assert_exit(&out, 2);
}

fn simulate_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(
        &path,
        "version = 1\n\n\
         [data]\n\
         preset = \"scenario1\"\n\n\
         [run]\n\
         run_length_days = 30\n\
         seeds = [1, 2]\n\n\
         [[policies]]\n\
         name = \"least_load\"\n\n\
         [[policies]]\n\
         name = \"smart\"\n\
         mode = \"known\"\n\
         lambdas = [0.05]\n",
    )
    .unwrap();
    path
}

#[test]
fn simulate_then_report_reproduces_tables_byte_for_byte() {
    let tmp = TempDir::new().unwrap();
    let config = simulate_config(tmp.path());
    let sim_out = tmp.path().join("sim");
    let out = medassign()
        .args(["--workers", "2", "simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&sim_out)
        .output()
        .unwrap();
    assert_exit(&out, 0);
    assert!(stdout(&out).contains("4 runs"), "stdout: {}", stdout(&out));

    let runs = sim_out.join("raw/runs.jsonl");
    let first_line = read(&runs).lines().next().unwrap().to_string();
    assert_eq!(first_line, "{\"schema\":\"medassign-runs-v1\"}");

    let rep_out = tmp.path().join("rep");
    let out = medassign()
        .args(["report", "--runs"])
        .arg(&runs)
        .arg("--out")
        .arg(&rep_out)
        .output()
        .unwrap();
    assert_exit(&out, 0);
    for f in [
        "tables/comparison.csv",
        "tables/shadow_prices.csv",
        "tables/allocation.csv",
        "figures/agreement.svg",
        "figures/ocdm.svg",
        "figures/gini.svg",
        "figures/shadow_prices.svg",
    ] {
        assert_eq!(read(&sim_out.join(f)), read(&rep_out.join(f)), "{f} not reproduced");
    }
}

#[test]
fn simulate_missing_config_is_config_error() {
    let out = medassign()
        .args(["simulate", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_exit(&out, 2);
}

#[test]
fn report_rejects_runs_without_schema_header() {
    let tmp = TempDir::new().unwrap();
    let runs = tmp.path().join("runs.jsonl");
    fs::write(&runs, "{\"policy\":\"x\"}\n").unwrap();
    let out = medassign().args(["report", "--runs"]).arg(&runs).output().unwrap();
    assert_exit(&out, 2);
    assert!(stderr(&out).contains("schema"), "stderr: {}", stderr(&out));
}

#[test]
fn corrupted_corpus_is_an_integrity_error() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("corpus");
    generate_corpus(&corpus, 11);
    // Duplicate the first data row of cases.csv: ids must be unique.
    let cases = corpus.join("cases.csv");
    let mut text = read(&cases);
    let dup = text.lines().nth(2).unwrap().to_string();
    text.push_str(&dup);
    text.push('\n');
    fs::write(&cases, text).unwrap();
    let out = medassign()
        .args(["estimate-va", "--corpus"])
        .arg(&corpus)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_exit(&out, 4);
}

#[test]
fn corpus_without_schema_header_is_config_error() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("corpus");
    generate_corpus(&corpus, 11);
    let mediators = corpus.join("mediators.csv");
    let stripped = read(&mediators).replacen("#schema:v1\n", "", 1);
    fs::write(&mediators, stripped).unwrap();
    let out = medassign()
        .args(["estimate-va", "--corpus"])
        .arg(&corpus)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_exit(&out, 2);
}

#[test]
fn drift_writes_one_row_per_outcome() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("out");
    let out = medassign()
        .args(["drift", "--steps", "12", "--period", "4", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_exit(&out, 0);
    assert!(stdout(&out).contains("recalibrated"), "stdout: {}", stdout(&out));
    let table = read(&out_dir.join("tables/drift.csv"));
    assert!(table.starts_with("#schema:v1\n"));
    // Schema line + header + one row per outcome.
    assert_eq!(table.lines().count(), 2 + 12);
    assert!(out_dir.join("figures/drift.svg").exists());
}

#[test]
fn out_env_var_names_the_default_directory() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("from-env");
    let out = medassign()
        .env("MEDASSIGN_OUT", &out_dir)
        .args(["drift", "--steps", "3"])
        .output()
        .unwrap();
    assert_exit(&out, 0);
    assert!(out_dir.join("tables/drift.csv").exists());
}

#[test]
fn explicit_out_overrides_the_env_var() {
    let tmp = TempDir::new().unwrap();
    let env_dir = tmp.path().join("from-env");
    let flag_dir = tmp.path().join("from-flag");
    let out = medassign()
        .env("MEDASSIGN_OUT", &env_dir)
        .args(["drift", "--steps", "3", "--out"])
        .arg(&flag_dir)
        .output()
        .unwrap();
    assert_exit(&out, 0);
    assert!(flag_dir.join("tables/drift.csv").exists());
    assert!(!env_dir.exists());
}
