use std::io::Write;
use std::process::{Command, Output, Stdio};

fn halasz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halasz"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn halasz_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_halasz"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn elo_prints_unreduced_ratio() {
    let out = halasz(&["bound", "elo", "--n", "10"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("252/1024"));
    let v = json(&halasz(&["--format", "json", "bound", "elo", "--n", "10"]));
    assert_eq!(v["result"]["value"], "63/256");
    assert_eq!(v["result"]["unreduced"], "252/1024");
}

#[test]
fn census_matches_enumeration() {
    let v = json(&halasz(&["--format", "json", "hadamard", "census", "--k", "2", "--n", "4"]));
    assert_eq!(v["result"]["count"], "96");
    assert_eq!(v["command"], "hadamard census");
    assert!(v["version"].as_str().unwrap().starts_with("halasz-cli "));
    let norm = json(&halasz(&[
        "--format", "json", "hadamard", "census", "--k", "2", "--n", "4", "--normalize",
    ]));
    assert_eq!(norm["result"]["count"], "96");
}

#[test]
fn emitted_matrices_are_orthogonal() {
    let v = json(&halasz(&[
        "--format", "json", "hadamard", "census", "--k", "2", "--n", "2", "--emit-matrices",
    ]));
    let ms = v["result"]["matrices"].as_array().unwrap();
    assert_eq!(ms.len(), 8);
    for m in ms {
        let rows: Vec<Vec<i32>> = m
            .as_str()
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split_whitespace().map(|t| if t == "+" { 1 } else { -1 }).collect())
            .collect();
        let dot: i32 = rows[0].iter().zip(&rows[1]).map(|(a, b)| a * b).sum();
        assert_eq!(dot, 0);
    }
}

#[test]
fn seeded_runs_are_byte_identical() {
    let args = [
        "--format", "json", "verify", "halasz-sweep", "--instances", "20", "--seed", "7", "--max-n", "10",
    ];
    let a = halasz(&args);
    let b = halasz(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["params"]["instances"], 20);
    assert_eq!(v["passed"], true);
}

#[test]
fn thread_count_does_not_change_output() {
    let base = ["--format", "json", "verify", "replication", "--instances", "30", "--seed", "3"];
    let one = halasz(&[&["--threads", "1"][..], &base[..]].concat());
    let two = halasz(&[&["--threads", "2"][..], &base[..]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(halasz(&["bound", "elo"]).status.code(), Some(2));
    assert_eq!(halasz(&["no-such-command"]).status.code(), Some(2));
    let out = halasz(&["bound", "halasz-atom", "--ranks", "1,1,1", "--ell", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert!(out.stdout.is_empty());
}

#[test]
fn malformed_input_exits_2() {
    let out = halasz_stdin(&["oracle", "atoms", "--system", "-"], "{not json");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_exhaustion_exits_3() {
    let out = halasz(&["hadamard", "census", "--k", "3", "--n", "12", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn system_from_stdin() {
    let sys = r#"{"d":1,"vectors":[[1],[1],[1],[1]],"partition":[[0,1],[2,3]]}"#;
    let out = halasz_stdin(&["--format", "json", "bound", "halasz-atom", "--system", "-"], sys);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["result"]["atom_max"], "3/8");
    assert_eq!(v["result"]["bound"]["exact"], "1/2");
    let out = halasz_stdin(&["--format", "json", "oracle", "atoms", "--system", "-"], sys);
    assert_eq!(json(&out)["result"]["max_atom"], "3/8");
}

#[test]
fn normal_check_reports_both_forms() {
    let out = halasz_stdin(&["--format", "json", "normal", "check", "--matrix", "-"], "2 2\n+ -\n- +\n");
    let v = json(&out);
    assert_eq!(v["result"]["normal"], true);
    let out = halasz_stdin(&["--format", "json", "normal", "check", "--matrix", "-"], "2 2\n+ +\n- +\n");
    assert_eq!(json(&out)["result"]["normal"], true);
    let out = halasz_stdin(&["--format", "json", "normal", "check", "--matrix", "-"], "3 3\n+ + +\n+ + -\n- + +\n");
    let v = json(&out);
    assert_eq!(v["result"]["matrix_form"], v["result"]["entrywise_form"]);
}

#[test]
fn normal_census_counts() {
    let v = json(&halasz(&["--format", "json", "normal", "census", "--n", "3"]));
    assert_eq!(v["result"]["normal_count"], 80);
    assert_eq!(v["passed"], true);
}

#[test]
fn csv_has_flat_rows() {
    let out = halasz(&["--format", "csv", "bound", "odlyzko", "--d", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("key,value\n"));
    assert!(text.lines().any(|l| l == "result.value,8"));
}

#[test]
fn howard_comparison() {
    let v = json(&halasz(&["--format", "json", "bound", "howard", "--d", "3", "--m", "10"]));
    assert!(v["result"]["improved"].as_f64().unwrap() <= v["result"]["howard"].as_f64().unwrap());
}

#[test]
fn rank_partition_of_identity() {
    let out = halasz_stdin(
        &["--format", "json", "rank-partition", "--matrix", "-", "--r", "1", "--ell", "2"],
        "2 2\n1 0\n0 1\n",
    );
    let v = json(&out);
    assert_eq!(v["result"]["found"], true);
    assert_eq!(v["passed"], true);
}
