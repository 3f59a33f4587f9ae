use std::process::{Command, Output};

fn fpcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpcalc")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn normalize_prints_trace_json() {
    let out = fpcalc(&["normalize", "-p", "2", "x1^-1 x0 x2 x0^-1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["normal"], "x1 x0 x0^-1 x1^-1");
    assert_eq!(v["tau"], serde_json::json!([4, 2, 1, 3]));

    let out = fpcalc(&["normalize", "-p", "5", "x1 x100^-1 x50 x1^-1 x100 x46^-1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["tau"], serde_json::json!([3, 6, 2, 4, 1, 5]));
}

#[test]
fn eval_and_member() {
    let out = fpcalc(&["eval", "-p", "2", "x0 x0^-1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "*|*");

    let out = fpcalc(&["eval", "--json", "y1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["p"], 2);

    assert_eq!(stdout(&fpcalc(&["member", "--oriented", "y0 y1"])).trim(), "1");
    assert_eq!(stdout(&fpcalc(&["member", "--oriented", "y0"])).trim(), "0");
}

#[test]
fn graph_outputs() {
    let out = fpcalc(&["graph", "-p", "2", "--dot", "y0 y1"]);
    assert!(out.status.success());
    let dot = stdout(&out);
    assert!(dot.starts_with("graph"));
    let out = fpcalc(&["graph", "-p", "3", "x0"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["edges"].as_array().unwrap().len(), 2 * (v["vertex_count"].as_u64().unwrap() as usize - 1));
}

#[test]
fn theta_second_moment_csv() {
    let out = fpcalc(&["moments", "--state", "theta", "-d", "2", "-n", "1..9"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "state,p,d,n,count,normalized_value_num,normalized_value_den,status");
    let counts: Vec<u64> = lines.map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert_eq!(counts, (1..=9).map(|n| 4 * n - 2).collect::<Vec<u64>>());
}

#[test]
fn gamma_json_and_output_file() {
    let path = std::env::temp_dir().join(format!("fpcalc-test-{}.json", std::process::id()));
    let out = fpcalc(&[
        "moments",
        "--state",
        "gamma",
        "-d",
        "4",
        "-n",
        "1..2",
        "--format",
        "json",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["count"], 6);
    assert_eq!(rows[1]["count"], 28);
}

#[test]
fn worker_count_does_not_change_output() {
    let run = |w: &str| stdout(&fpcalc(&["moments", "--state", "gamma", "-d", "4", "-n", "1..5", "--workers", w]));
    assert_eq!(run("1"), run("3"));
}

#[test]
fn exit_codes() {
    assert_eq!(fpcalc(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(fpcalc(&["normalize", "x0 zz"]).status.code(), Some(2));
    assert_eq!(fpcalc(&["moments", "--state", "theta", "-p", "3", "-d", "2", "-n", "1"]).status.code(), Some(2));
    assert_eq!(fpcalc(&["graph", "-p", "4", "x0"]).status.code(), Some(2));
    let out = fpcalc(&["moments", "--state", "gamma", "-d", "6", "-n", "1..3", "--engine", "brute", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn bounds_report_logs_errata() {
    let out = fpcalc(&["bounds", "-d", "2", "-n", "8"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("erratum"));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v[0]["total"], 16);
}

#[test]
fn verify_suite_passes() {
    let out = fpcalc(&["verify", "--suite", "rewrite", "--seed", "3"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).lines().all(|l| l.starts_with("ok")));
}
