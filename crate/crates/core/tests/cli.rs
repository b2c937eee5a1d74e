//! End-to-end checks of the `cdma-sig` binary.

use std::path::Path;
use std::process::{Command, Output};

use cdma_sig::baselines::frame_residual;
use cdma_sig::capacity::exact_capacity_1d;
use cdma_sig::io::{read_matrix, MatrixFile, RunFile};
use cdma_sig::SignatureMatrix;

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdma-sig")).args(args).current_dir(dir).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = cli(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn write_identity(dir: &Path, name: &str, n: usize) {
    let f = MatrixFile::from_matrix(&SignatureMatrix::identity(n), Some(format!("identity{n}")), None);
    std::fs::write(dir.join(name), f.to_json().unwrap()).unwrap();
}

fn csv_rows(text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| headers.iter().zip(rec.unwrap().iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect()
}

fn num(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

#[test]
fn generate_writes_reloadable_baselines() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["generate", "--kind", "wbe", "--m", "2", "--n", "4", "--seed", "1", "--out", "w.json"]);
    let a = read_matrix(&p.join("w.json")).unwrap();
    assert!(frame_residual(&a) <= 1e-10);

    ok(p, &["generate", "--kind", "random", "--m", "3", "--n", "4", "--seed", "1", "--out", "r.json"]);
    let bytes = std::fs::read_to_string(p.join("r.json")).unwrap();
    let reread = MatrixFile::from_matrix(&read_matrix(&p.join("r.json")).unwrap(), Some("random".into()), None);
    assert_eq!(reread.to_json().unwrap(), bytes);
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = cli(p, &["generate", "--kind", "orthogonal", "--m", "2", "--n", "3", "--out", "o.json"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(p.join("bad.json"), "{\"m\": 2}").unwrap();
    assert_eq!(cli(p, &["eval", "bad.json", "--sigma", "1"]).status.code(), Some(2));
    assert_eq!(cli(p, &["optimize", "--criterion", "xyz", "--m", "2", "--n", "3", "--out", "x.json"]).status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["generate", "--kind", "wbe", "--m", "2", "--n", "3", "--tol", "1e-300", "--out", "w.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn eval_identity_and_scalar_channel() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_identity(p, "id2.json", 2);
    let out = ok(p, &["eval", "id2.json", "--sigma", "0.001", "--budget", "20000", "--seed", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    assert!((num(&rows[0], "per_user_capacity") - 1.0).abs() < 0.01);
    let again = ok(p, &["eval", "id2.json", "--sigma", "0.001", "--budget", "20000", "--seed", "3"]);
    assert_eq!(again.stdout, text.as_bytes());

    write_identity(p, "id1.json", 1);
    let out = ok(p, &["eval", "id1.json", "--sigma", "1", "--budget", "200000", "--seed", "4"]);
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    let exact = exact_capacity_1d(1.0, 1.0).unwrap();
    assert!((num(&rows[0], "per_user_capacity") - exact).abs() <= 3.0 * num(&rows[0], "capacity_std_error"));
}

#[test]
fn optimize_improves_and_beats_random_search() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["optimize", "--criterion", "md", "--m", "2", "--n", "3", "--generations", "40", "--seed", "2", "--out", "md.json"]);
    let run = RunFile::from_json(&std::fs::read_to_string(p.join("md.json")).unwrap()).unwrap();
    assert!(run.best_fitness >= run.history[0].generation_best);
    assert!(read_matrix(&p.join("md.matrix.json")).is_ok());

    let args =
        ["optimize", "--criterion", "ed", "--m", "3", "--n", "4", "--sigma", "0.3", "--generations", "100", "--seed", "5", "--random-baseline", "--out", "ed.json", "--matrix-out", "best.json"];
    ok(p, &args);
    let first = std::fs::read(p.join("ed.json")).unwrap();
    let run = RunFile::from_json(std::str::from_utf8(&first).unwrap()).unwrap();
    let baseline = run.random_baseline.unwrap();
    assert_eq!(baseline.evaluations, 64 * 100);
    assert!(run.best_fitness >= baseline.best_fitness);
    let best = read_matrix(&p.join("best.json")).unwrap();
    assert_eq!(best, run.best_matrix.to_matrix().unwrap());
    ok(p, &args);
    assert_eq!(std::fs::read(p.join("ed.json")).unwrap(), first);
}

#[test]
fn sweep_columns_follow_the_noise() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["generate", "--kind", "wbe", "--m", "2", "--n", "3", "--seed", "8", "--out", "w.json"]);
    ok(p, &["generate", "--kind", "random", "--m", "2", "--n", "3", "--seed", "8", "--out", "r.json"]);
    ok(p, &["sweep", "w.json", "r.json", "--sigma-grid", "0.1:2:6", "--budget", "20000", "--seed", "1", "--out", "s.csv"]);
    let rows = csv_rows(&std::fs::read_to_string(p.join("s.csv")).unwrap());
    assert_eq!(rows.len(), 12);
    for block in rows.chunks(6) {
        for w in block.windows(2) {
            let cap_band = 3.0 * (num(&w[0], "capacity_std_error").powi(2) + num(&w[1], "capacity_std_error").powi(2)).sqrt();
            assert!(num(&w[1], "per_user_capacity") <= num(&w[0], "per_user_capacity") + cap_band);
            let ber_band = 3.0 * (num(&w[0], "ber_std_error").powi(2) + num(&w[1], "ber_std_error").powi(2)).sqrt();
            assert!(num(&w[1], "ber") >= num(&w[0], "ber") - ber_band);
            assert!(num(&w[1], "sigma") > num(&w[0], "sigma"));
        }
        for r in block {
            assert!(num(r, "ber") <= num(r, "union_bound") + 3.0 * num(r, "ber_std_error"));
            assert!((num(r, "snr_db") + 20.0 * num(r, "sigma").log10()).abs() < 1e-9);
        }
    }
}

#[test]
fn overload_sweep_reports_every_user_count() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let args = ["overload-sweep", "--criterion", "ed", "--m", "2", "--n-list", "2,3,4", "--sigma", "0.5", "--budget", "50000", "--generations", "60", "--seed", "3", "--out", "o.csv"];
    ok(p, &args);
    let first = std::fs::read_to_string(p.join("o.csv")).unwrap();
    let rows = csv_rows(&first);
    let ns: Vec<f64> = rows.iter().map(|r| num(r, "n")).collect();
    assert_eq!(ns, vec![2.0, 3.0, 4.0]);
    let base = &rows[0];
    assert_eq!(num(base, "beta"), 1.0);
    for r in &rows[1..] {
        let band = 3.0 * (num(base, "capacity_std_error").powi(2) + num(r, "capacity_std_error").powi(2)).sqrt();
        assert!(num(base, "per_user_capacity") + band >= num(r, "per_user_capacity"));
    }
    ok(p, &args);
    assert_eq!(std::fs::read_to_string(p.join("o.csv")).unwrap(), first);

    let bad = cli(p, &["overload-sweep", "--criterion", "ed", "--m", "3", "--n-list", "2,4", "--sigma", "0.5"]);
    assert_eq!(bad.status.code(), Some(2));
}
