use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chvrank_core::{GammaCertificate, HardInstance};
use serde_json::{json, Value};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chvrank")).args(args).output().expect("spawn chvrank")
}

fn run_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chvrank")).args(args).env(key, val).output().expect("spawn chvrank")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn write_json(p: &Path, v: &Value) {
    fs::write(p, serde_json::to_string_pretty(v).unwrap()).unwrap();
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_lays_out_a_then_three_bases_then_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("inst.json");
    let o = run(&["gen", "--m", "64", "--seed", "7", "--eps", "1/4", "-o", p(&f)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&f);
    assert_eq!(v["config"]["command"], "gen");
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["eps"], "1/4");
    let hard: HardInstance = serde_json::from_value(v["hard"].clone()).unwrap();
    hard.validate().unwrap();
    let c: Vec<String> = serde_json::from_value(v["c"].clone()).unwrap();
    let a: Vec<String> = hard.a.iter().map(|x| x.to_string()).collect();
    assert_eq!(&c[..64], &a[..]);
    let l = hard.bases[0].len();
    let b: Vec<&String> = hard.bases[0].iter().map(|&i| &c[i]).collect();
    for k in 0..3 {
        assert_eq!(hard.bases[k], (64 + k * l..64 + (k + 1) * l).collect::<Vec<_>>());
        assert_eq!(hard.bases[k].iter().map(|&i| &c[i]).collect::<Vec<_>>(), b);
    }
    for (i, x) in c.iter().enumerate().skip(64 + 3 * l) {
        if i != hard.parity_slot {
            assert_eq!(x, "0");
        }
    }
    // D defaults to 2^(m/8)
    assert_eq!(hard.d.to_string(), "256");
}

#[test]
fn artifacts_are_byte_identical_across_runs_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert!(run(&["gen", "--m", "16", "--seed", "3", "-o", p(&a)]).status.success());
    assert!(run(&["--jobs", "1", "gen", "--m", "16", "--seed", "3", "-o", p(&b)]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let x = run(&["--jobs", "1", "audit", p(&a), "--eps", "1/64", "--alpha", "20"]);
    let y = run(&["--jobs", "4", "audit", p(&a), "--eps", "1/64", "--alpha", "20"]);
    assert_eq!(x.stdout, y.stdout);
    assert_eq!(x.status.code(), y.status.code());
}

#[test]
fn lmin_reports_witness_or_certified_budget() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("ones.json");
    write_json(&f, &json!({"c": ["1", "1", "1", "1"], "eps": "1/4"}));
    let o = run(&["lmin", p(&f), "--budget", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["result"]["value"], 3);
    assert_eq!(v["result"]["budget_exceeded"], false);

    let o = run(&["lmin", p(&f), "--budget", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let v = stdout_json(&o);
    assert_eq!(v["result"]["budget_exceeded"], true);
    assert_eq!(v["result"]["value"], Value::Null);
}

#[test]
fn budget_env_override_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("ones.json");
    write_json(&f, &json!({"c": ["1", "1", "1", "1", "1", "1"], "eps": "1/8"}));
    let o = run_env(&["lmin", p(&f), "--budget", "6"], "CHVRANK_LMIN_MAX_VECTORS", "10");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn upper_is_verified_critical() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("i.json");
    write_json(&f, &json!({"c": ["3", "1", "4", "1", "5"], "eps": "1/8"}));
    let v = stdout_json(&run(&["upper", p(&f)]));
    assert_eq!(v["result"]["verified"], true);
    assert_eq!(v["result"]["bound"], "40/1");
}

#[test]
fn rank_bound_formula_and_gamma_floor() {
    let o = run(&["rank-bound", "--gamma", "2", "--delta0", "1/4", "--delta1", "1/16"]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert_eq!(v["result"]["floor_bound"], "1");
    assert!(v["result"]["bound"].as_str().unwrap().starts_with("1.386294361"));

    let o = run(&["rank-bound", "--gamma", "1", "--delta0", "1/4", "--delta1", "1/16"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
}

#[test]
fn usage_errors_exit_nonzero() {
    assert_ne!(run(&["frobnicate"]).status.code(), Some(0));
    assert_ne!(run(&["rank-bound", "--gamma", "2"]).status.code(), Some(0));
    assert_eq!(run(&["lmin", "/nonexistent/x.json", "--budget", "1"]).status.code(), Some(1));
}

#[test]
fn gamma_certificate_round_trips_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("ones.json");
    let cert = dir.path().join("cert.json");
    write_json(&f, &json!({"c": ["1", "1", "1", "1"], "eps": "1/4"}));
    let o = run(&[
        "gamma", p(&f), "--method", "exact-lmin", "--delta0", "1/4", "--delta1", "1/8", "--grid", "1/4,1/8", "--lmin-budget", "2",
        "-o", p(&cert),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&cert);
    assert_eq!(v["kind"], "gamma");
    let parsed: GammaCertificate = serde_json::from_value(v["certificate"].clone()).unwrap();
    assert_eq!(serde_json::to_value(&parsed).unwrap(), v["certificate"]);
    assert!(parsed.sound);
    // L > 2 at both points, stitched over the single cell
    assert_eq!(parsed.points.iter().map(|x| x.l_bound).collect::<Vec<_>>(), vec![3, 3]);
    assert_eq!(parsed.gamma.to_string(), "3/8");

    let o = run(&["verify-cert", p(&cert)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["valid"], true);

    // gamma < 2 is refused downstream
    assert_eq!(run(&["rank-bound", "--cert", p(&cert)]).status.code(), Some(1));

    let mut bad = v.clone();
    // L_c(1/4) = 3 for the all-ones vector, so a claimed bound of 9 is false
    bad["certificate"]["points"][0]["l_bound"] = json!(9);
    let tampered = dir.path().join("bad.json");
    write_json(&tampered, &bad);
    let o = run(&["verify-cert", p(&tampered)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["valid"], false);
}

#[test]
fn greedy_certificate_replays_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let cert = dir.path().join("greedy.json");
    assert!(run(&["gen", "--m", "160", "--seed", "1", "--basis", "tight", "-o", p(&inst)]).status.success());
    let n = read_json(&inst)["c"].as_array().unwrap().len();
    let ct: Vec<String> = (0..n).map(|i| ((i * 37) % 101 + 1).to_string()).collect();
    let o = run(&["greedy-cert", p(&inst), "--ctilde", &ct.join(","), "-o", p(&cert)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&cert);
    assert_eq!(v["kind"], "greedy");
    assert_eq!(v["claims"]["preconditions_hold"], true);
    assert_eq!(v["claims"]["value_bound_holds"], true);
    assert_eq!(stdout_json(&run(&["verify-cert", p(&cert)]))["valid"], true);

    let mut bad = v.clone();
    let j = bad["certificate"]["J"].as_array_mut().unwrap();
    j.pop();
    let tampered = dir.path().join("bad.json");
    write_json(&tampered, &bad);
    assert_eq!(run(&["verify-cert", p(&tampered)]).status.code(), Some(1));
}

#[test]
fn audit_reports_witness_on_easy_regime() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("inst.json");
    assert!(run(&["gen", "--m", "64", "--d", "256", "--seed", "0", "-o", p(&f)]).status.success());
    let o = run(&["audit", p(&f), "--eps", "1/64", "--alpha", "2000"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["report"]["verdict"], "counterexample_found");
    assert_eq!(v["report"]["zero_approximant_ok"], true);
    assert_eq!(v["config"]["residual"], "128/1");
}

#[test]
fn closure_and_trace_on_small_polytopes() {
    let dir = tempfile::tempdir().unwrap();
    let sq = dir.path().join("sq.json");
    write_json(&sq, &json!({"n": 2, "ineqs": [{"a": ["1", "1"], "b": "3/2"}]}));
    let o = run(&["closure", p(&sq), "--k", "1"]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert!(v["semantics"].as_str().unwrap().contains("relaxation"));
    let ineqs = v["polytope"]["ineqs"].as_array().unwrap();
    assert!(ineqs.iter().any(|h| h["a"] == json!(["1", "1"]) && h["b"] == "1/1"));

    let inst = dir.path().join("p.json");
    write_json(&inst, &json!({"c": ["1", "1"], "eps": "1/4"}));
    let o = run(&["trace", p(&inst), "--k", "2", "--rounds", "2"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config: "));
    assert_eq!(&lines[1..], ["round,eps_bar", "0,1/4", "1,0/1", "2,0/1"]);

    // instances above dimension four are rejected
    let big = dir.path().join("big.json");
    write_json(&big, &json!({"c": ["1", "1", "1", "1", "1"], "eps": "1/4"}));
    assert_eq!(run(&["closure", p(&big)]).status.code(), Some(1));
}
