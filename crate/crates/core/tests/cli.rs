use std::path::Path;
use std::process::{Command, Output};

fn entroclust(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entroclust"))
        .args(args)
        .current_dir(cwd)
        .env_remove("ENTROCLUST_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn generate_is_deterministic_and_reports_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "generate", "--d", "100", "--s", "5", "--a-norm", "2.548", "--n", "2000", "--seed", "1", "--out",
    ];
    let first = entroclust(&[&args[..], &["a.csv"]].concat(), dir.path());
    let second = entroclust(&[&args[..], &["b.csv"]].concat(), dir.path());
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert_eq!(stdout(&first).trim(), "n=2000 d=100 s=5 anorm=2.548 seed=1");
    let a = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().next(), Some("# n=2000 d=100 seed=1"));
    assert_eq!(second.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["generate", "--d", "100", "--s", "200", "--a-norm", "2", "--n", "10"],
        &["fit", "--data", "missing.csv", "--lambda", "0.1"],
        &["verify", "--only", "no_such"],
        &["landscape", "--a-norm", "2", "--mu-grid", "", "--r-grid", "1"],
        &["sweep", "missing-plan.json"],
        &["no-such-command"],
    ];
    for args in cases {
        let o = entroclust(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    let o = entroclust(&["verify", "--only", "no_such"], dir.path());
    assert!(stderr(&o).contains("particular_case"), "{}", stderr(&o));
}

#[test]
fn fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let gen = entroclust(
        &[
            "generate", "--d", "2", "--s", "1", "--a-norm", "3", "--n", "400", "--seed", "3", "--out", "d.csv",
        ],
        dir.path(),
    );
    assert_eq!(gen.status.code(), Some(0));

    let fit = |extra: &[&str]| {
        let o = entroclust(
            &[&["fit", "--data", "d.csv", "--seed", "5"][..], extra].concat(),
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()
    };
    let a = fit(&["--lambda", "0.02"]);
    let b = fit(&["--lambda", "0.02"]);
    assert_eq!(a, b);
    let beta: Vec<f64> = serde_json::from_value(a["beta_hat"].clone()).unwrap();
    let angle = (beta[0].abs() / beta.iter().map(|v| v * v).sum::<f64>().sqrt()).acos();
    assert!(angle < 15f64.to_radians(), "{beta:?}");

    let auto = fit(&["--lambda-auto", "--a-inf", "3"]);
    let tuning = &auto["config_echo"]["tuning"];
    for key in ["m_n", "lambda0", "lambda"] {
        assert!(tuning[key].as_f64().is_some(), "missing {key}: {auto}");
    }
    let (l, l0) = (tuning["lambda"].as_f64().unwrap(), tuning["lambda0"].as_f64().unwrap());
    assert!((l - 4.5 * l0).abs() < 1e-12 * l);

    let mismatch = entroclust(
        &["fit", "--data", "d.csv", "--lambda", "0.1", "--u", "1,0,0"],
        dir.path(),
    );
    assert_eq!(mismatch.status.code(), Some(2));
    let no_a_inf = entroclust(&["fit", "--data", "d.csv", "--lambda-auto"], dir.path());
    assert_eq!(no_a_inf.status.code(), Some(2));
}

#[test]
fn verify_single_check_and_show_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = entroclust(&["verify", "--only", "particular_case", "--out", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let reports = report["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["status"], "pass");

    let show = entroclust(&["report", "show", "r.json"], dir.path());
    assert_eq!(show.status.code(), Some(0));
    assert!(stdout(&show).contains("particular_case"));
}

#[test]
fn failed_report_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"schema": 1, "reports": [{"lemma_id": "x", "status": "fail", "worst_violation": 1.0,
        "grid_size": 1, "tolerance": 0.0, "notes": ""}]}"#;
    std::fs::write(dir.path().join("bad.json"), body).unwrap();
    let o = entroclust(&["report", "show", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn landscape_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = entroclust(
        &[
            "landscape",
            "--a-norm",
            "2.548",
            "--mu-grid=-1,0,1",
            "--r-grid",
            "0.5:1.5:3",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(text.lines().next(), Some("mu,r,risk,d_mu,d_r,excess,feasible"));
    assert_eq!(rows.len(), 9);
    for row in rows.iter().filter(|r| r[0] == "0.0") {
        assert_eq!(row[3], "0.0");
    }
    for k in 0..3 {
        assert_eq!(
            rows[k][2].parse::<f64>().unwrap(),
            rows[6 + k][2].parse::<f64>().unwrap()
        );
    }
}

#[test]
fn sweep_writes_outputs_and_reports_plan_errors_together() {
    let dir = tempfile::tempdir().unwrap();
    let plan = r#"{"name": "tiny", "spec": {"d": 6, "s": 2, "a_norm": 3.0}, "n_grid": [50, 100],
        "replicates": 2, "fit": {"lambda": {"rate": 0.3}, "restarts": 1}, "outputs": "out", "master_seed": 4}"#;
    std::fs::write(dir.path().join("plan.json"), plan).unwrap();
    let o = entroclust(&["sweep", "plan.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["results.csv", "summary.json", "metadata.json"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    let bad = r#"{"name": "", "spec": {"d": 6, "s": 9, "a_norm": -1.0}, "n_grid": [100, 50],
        "replicates": 0, "outputs": "out", "master_seed": 4}"#;
    std::fs::write(dir.path().join("bad.json"), bad).unwrap();
    let o = entroclust(&["sweep", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for needle in ["name", "spec.s", "a_norm", "strictly increasing", "replicates"] {
        assert!(err.contains(needle), "missing {needle:?} in {err}");
    }
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |value: &str| {
        Command::new(env!("CARGO_BIN_EXE_entroclust"))
            .args(["landscape", "--a-norm", "2", "--mu-grid", "0,1", "--r-grid", "1"])
            .current_dir(dir.path())
            .env("ENTROCLUST_THREADS", value)
            .output()
            .unwrap()
    };
    let one = run("1");
    let two = run("2");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, two.stdout);
    assert_eq!(run("zero").status.code(), Some(2));
}

#[test]
fn sweep_outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let plan = r#"{"name": "threads", "spec": {"d": 8, "s": 2, "a_norm": 2.6}, "n_grid": [60, 120],
        "replicates": 3, "fit": {"lambda": {"rate": 0.3}, "restarts": 2}, "outputs": "unused", "master_seed": 8}"#;
    std::fs::write(dir.path().join("plan.json"), plan).unwrap();
    let run = |threads: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_entroclust"))
            .args(["sweep", "plan.json", "--out", out])
            .current_dir(dir.path())
            .env("ENTROCLUST_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let summary = std::fs::read_to_string(dir.path().join(out).join("summary.json")).unwrap();
        let csv = std::fs::read_to_string(dir.path().join(out).join("results.csv")).unwrap();
        // drop wall_ms, the only clock-dependent column
        let rows: Vec<String> = csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect();
        (summary, rows)
    };
    assert_eq!(run("1", "one"), run("3", "three"));
}
