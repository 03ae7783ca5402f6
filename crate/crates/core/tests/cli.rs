use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dyncolor"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dyncolor-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn without_timing(text: &str) -> Value {
    let mut v: Value = serde_json::from_str(text).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn gen_forest_is_a_tree() {
    let o = run(&["gen", "--kind", "forest", "--n", "10", "--delta", "9", "--count", "9", "--seed", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n 10 delta 9");
    assert_eq!(lines.len(), 10);
    let mut parent: Vec<usize> = (0..10).collect();
    fn root(p: &mut Vec<usize>, x: usize) -> usize {
        if p[x] == x {
            x
        } else {
            let r = root(p, p[x]);
            p[x] = r;
            r
        }
    }
    for line in &lines[1..] {
        let t: Vec<usize> = line[2..].split(' ').map(|x| x.parse().unwrap()).collect();
        assert!(line.starts_with('+'));
        let (a, b) = (root(&mut parent, t[0]), root(&mut parent, t[1]));
        assert_ne!(a, b, "cycle at {line}");
        parent[a] = b;
    }
}

#[test]
fn gen_zero_count_is_header_only() {
    let o = run(&["gen", "--kind", "churn", "--n", "5", "--delta", "2", "--count", "0"]);
    assert_eq!(stdout(&o), "n 5 delta 2\n");
}

#[test]
fn gen_rejects_bad_arguments() {
    let o = run(&["gen", "--kind", "random", "--n", "1", "--delta", "2", "--count", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["gen", "--kind", "bogus", "--n", "5", "--delta", "2", "--count", "3"]);
    assert!(!o.status.success());
}

#[test]
fn run_empty_stream() {
    let path = tmp("empty.txt");
    std::fs::write(&path, "n 4 delta 2\n").unwrap();
    let o = run(&["run", path.to_str().unwrap()]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["updates"], 0);
    assert_eq!(v["total_recourse"], 0);
    assert_eq!(v["mean_recourse"], 0.0);
}

#[test]
fn run_with_oracle_on_churn() {
    let path = tmp("churn500.txt");
    let o = run(&[
        "gen", "--kind", "churn", "--n", "80", "--delta", "8", "--count", "500", "--seed", "3",
        "--output", path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let o = run(&["run", path.to_str().unwrap(), "--oracle-check", "1", "--seed", "9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["updates"], 500);
    assert_eq!(v["oracle_checks"], 500);
    assert_eq!(v["seed"], 9);
    assert!(v["timing"]["ns_per_update_p99"].as_u64().is_some());
}

#[test]
fn malformed_line_exits_1_with_line_number() {
    let path = tmp("bad.txt");
    std::fs::write(&path, "n 4 delta 2\n+ 0 1\n+ 3\n").unwrap();
    let o = run(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");

    std::fs::write(&path, "n 4 delta 2\n- 0 1\n").unwrap();
    assert_eq!(run(&["verify", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn verify_fixtures_pass() {
    for name in ["forest.txt", "churn.txt", "cluster.txt"] {
        for extra in [&[][..], &["--no-partition"][..]] {
            let path = fixture(name);
            let mut args = vec!["verify", path.to_str().unwrap(), "--epsilon", "0.5"];
            args.extend_from_slice(extra);
            let o = run(&args);
            assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
            let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
            assert_eq!(v["passed"], true);
        }
    }
}

#[test]
fn static_reports_colors_and_bound() {
    let path = tmp("single.txt");
    std::fs::write(&path, "n 2 delta 1\n+ 0 1\n").unwrap();
    let o = run(&["static", path.to_str().unwrap(), "--epsilon", "0.5"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["colors_used"], 1);
    assert_eq!(v["proper"], true);
    // (1 + 61 * 0.5) * 1
    assert_eq!(v["color_bound"], 31.5);

    let o = run(&["static", fixture("forest.txt").to_str().unwrap()]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["edges"], 59);
}

#[test]
fn identical_inputs_give_identical_metrics() {
    let churn = fixture("churn.txt");
    let args = ["run", churn.to_str().unwrap(), "--seed", "4", "--resample-every", "100"];
    let a = stdout(&run(&args));
    let b = stdout(&run(&args));
    assert_eq!(without_timing(&a), without_timing(&b));
    let c = stdout(&run(&["run", churn.to_str().unwrap(), "--seed", "5"]));
    assert_ne!(without_timing(&a), without_timing(&c));
}

#[test]
fn csv_output_and_trials() {
    let churn = fixture("churn.txt");
    let out = tmp("trials.csv");
    let o = run(&[
        "run", churn.to_str().unwrap(), "--trials", "3", "--format", "csv", "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("seed,epsilon,delta,updates,total_recourse,mean_recourse"));
    let seeds: std::collections::HashSet<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(seeds.len(), 3);

    let o = run(&["run", churn.to_str().unwrap(), "--trials", "2"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn stdin_stream() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = bin()
        .args(["run", "-", "--format", "csv"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"n 3 delta 2\n+ 0 1\n+ 1 2\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).lines().nth(1).unwrap().contains(",2,"));
}
