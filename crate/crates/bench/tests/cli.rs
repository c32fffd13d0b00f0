use std::process::Command;

fn lsketch(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_lsketch")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn solve_prints_a_csv_report() {
    let (code, stdout, _) = lsketch(&["solve", "--method", "sampling", "--n", "128", "--d", "3", "--seeds", "2"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 3);
    assert!(stdout.starts_with("kind,"));
}

#[test]
fn solve_writes_json_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let (code, _, _) = lsketch(&[
        "solve", "--method", "projection", "--n", "100", "--d", "2", "--k", "40", "--best-of", "3", "--format", "json",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(out).unwrap();
    let report = lsketch_bench::ExperimentReport::from_json(&text).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.rows[0].params.k, Some(40));
}

#[test]
fn bench_runs_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    std::fs::write(
        &cfg,
        r#"{"specs": [{"kind": "ill_conditioned", "n": 128, "d": 4, "kappa_target": 1000, "gamma_target": 0.9}],
            "methods": ["exact", "cgnr"], "seeds": 2}"#,
    )
    .unwrap();
    let (code, stdout, _) = lsketch(&["bench", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    assert_eq!(stdout.lines().count(), 5);
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    assert_eq!(lsketch(&["solve", "--method", "bogus"]).0, 1);
    assert_eq!(lsketch(&["frobnicate"]).0, 1);
    assert_eq!(lsketch(&["bench", "--config", "/nonexistent/config.json"]).0, 1);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\"specs\": [], \"methods\": [\"exact\"],\n \"seeds\": -1}").unwrap();
    let (code, _, stderr) = lsketch(&["bench", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("line 2"), "{stderr}");
    assert_eq!(lsketch(&["--help"]).0, 0);
}

#[test]
fn numerical_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "x,y\n1,2\n2,4\n3,6\n").unwrap();
    std::fs::write(&b, "b\n1\n0\n1\n").unwrap();
    let (code, _, stderr) =
        lsketch(&["solve", "--method", "exact", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap(), "--header"]);
    assert_eq!(code, 2, "{stderr}");
}

#[test]
fn file_problems_solve() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "1\n1\n").unwrap();
    std::fs::write(&b, "1\n3\n").unwrap();
    let (code, stdout, _) = lsketch(&["solve", "--method", "exact", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report = lsketch_bench::ExperimentReport::from_csv(&stdout).unwrap();
    let row = &report.rows[0];
    assert!(row.spec.is_none());
    assert!((row.z_exact - 2f64.sqrt()).abs() < 1e-12);
}
