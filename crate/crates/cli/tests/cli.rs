use std::process::Command;

use serde_json::Value;
use steinbounds_cli::main_with_args;
use steinbounds_cli::run::VerificationReport;

fn run(args: &str) -> (Value, i32) {
    let argv = std::iter::once("steinbounds").chain(args.split_whitespace());
    let o = main_with_args(argv);
    let text = if o.stdout.is_empty() { &o.stderr } else { &o.stdout };
    (serde_json::from_str(text).unwrap_or(Value::String(text.clone())), o.code)
}

fn close(v: &Value, want: f64, tol: f64) -> bool {
    (v.as_f64().unwrap() - want).abs() <= tol
}

#[test]
fn bound_examples() {
    let (v, code) = run("bound dickman --c 1 --n 12");
    assert_eq!(code, 0);
    assert!(close(&v["value"], 5.0 / 24.0, 1e-15));
    assert_eq!(v["theorem_id"], "dickman");

    let (v, _) = run("bound t --dof 8");
    assert!(close(&v["value"], 0.5, 1e-12));

    let (v, _) = run("bound srs --values 1,2,3,4 --n 2");
    assert!(close(&v["value"], 15.348, 1e-3));
    assert!(close(&v["components"]["third_moment_term"], 2.5820, 1e-4));
    assert!(close(&v["components"]["covariance_term"], 12.7662, 1e-4));
}

#[test]
fn report_fields_in_order() {
    let o = main_with_args(["steinbounds", "bound", "harmonic", "--n", "5"]);
    let keys: Vec<String> = serde_json::from_str::<serde_json::Map<String, Value>>(&o.stdout).unwrap().keys().cloned().collect();
    assert_eq!(
        keys,
        ["theorem_id", "status", "value", "components", "preconditions", "diagnostics", "warnings", "inputs_digest"]
    );
}

#[test]
fn verify_examples() {
    let (v, code) = run("verify dickman --c 1 --n 12 --exact");
    assert_eq!(code, 0);
    assert_eq!(v["satisfied"], true);
    assert!(v["truth"].as_f64().unwrap() <= 0.2083);

    let (v, code) = run("verify t --dof 8 --h cos --quadrature");
    assert_eq!(code, 0);
    assert_eq!(v["satisfied"], true);
    assert_eq!(v["bound"], 0.5);

    let (v, code) = run("verify srs --values 1,2,3,4 --n 2 --exact");
    assert_eq!(code, 0);
    assert_eq!(v["truth_method"], "exact");
    assert_eq!(v["satisfied"], true);
}

#[test]
fn t_truth_matches_reference() {
    // |E cos W - e^{-1/2}| for the unit-variance t(8) law, from a 30-digit mpmath quadrature
    let (v, _) = run("verify t --dof 8");
    assert!(close(&v["truth"], 0.027_234_066_869_368, 1e-11), "{}", v["truth"]);
}

#[test]
fn tables() {
    let o = main_with_args("steinbounds table dickman --c 1 --sweep n=4:64:4".split(' '));
    let mut lines = o.stdout.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "bound").unwrap();
    let ncol = header.iter().position(|h| *h == "n").unwrap();
    let mut count = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let n: f64 = f[ncol].parse().unwrap();
        assert!((f[col].parse::<f64>().unwrap() - 2.5 / n).abs() < 1e-15);
        count += 1;
    }
    assert_eq!(count, 16);
    assert!(o.stdout.contains("\r\n"));

    let o = main_with_args("steinbounds table t --sweep dof=5:50:1".split(' '));
    for line in o.stdout.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let m: f64 = f[1].parse().unwrap();
        assert!((f[3].parse::<f64>().unwrap() - 2.0 / (m - 4.0)).abs() < 1e-14);
    }

    let o = main_with_args("steinbounds table harmonic --sweep n=2:40:1 --truth --output json".split(' '));
    let rows: Vec<Value> = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(rows.len(), 39);
    for r in rows {
        let n = r["n"].as_f64().unwrap();
        assert!(close(&r["bound"], 2.5 / n, 1e-15));
        assert!(r["truth"].as_f64().unwrap() <= r["bound"].as_f64().unwrap());
    }
}

#[test]
fn table_truth_column_for_dickman_decreases() {
    let o = main_with_args("steinbounds table dickman --c 1 --sweep n=4:16:4 --truth".split(' '));
    let header: Vec<&str> = o.stdout.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "truth").unwrap();
    let truths: Vec<f64> = o.stdout.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert!(truths.windows(2).all(|w| w[1] < w[0]), "{truths:?}");
}

#[test]
fn exit_codes() {
    let (v, code) = run("bound mp --w binomial:5,0.4 --z poisson:2");
    assert_eq!(code, 2);
    assert_eq!(v["status"], "inapplicable");
    let o = main_with_args("steinbounds bound mp --w binomial:5,0.4 --z poisson:2".split(' '));
    let err: Value = serde_json::from_str(&o.stderr).unwrap();
    assert_eq!(err["error"], "inapplicable");

    let (v, code) = run("bound t --dof 3");
    assert_eq!(code, 3);
    assert_eq!(v["error"], "domain");

    assert_eq!(run("bound urn --m 3 --n 5").1, 3);
    assert_eq!(run("bound srs --values 1,2 --n 2").1, 3);
    assert_eq!(run("bound dickman --c 1 --n 4 --metric w").1, 3);
    assert_eq!(run("bound nonsense").1, 3);
    assert_eq!(run("table t --sweep q=1:2:1").1, 3);
    assert_eq!(main_with_args(["steinbounds", "--help"]).code, 0);
}

#[test]
fn unsatisfied_verification_exits_one() {
    let (v, code) = run("verify mp --w gamma:2,2 --z gamma:3,3");
    assert_eq!(code, 0);
    let mut report: VerificationReport = serde_json::from_value(v).unwrap();
    report.truth = report.bound + 1.0;
    report.satisfied = false;
    assert_eq!(report.exit_code(), 1);
}

#[test]
fn deterministic_across_runs() {
    let args = "steinbounds verify srs --values 1,5,2,8,3 --n 2 --mc --seed 7 --samples 20000";
    let a = main_with_args(args.split(' '));
    let b = main_with_args(args.split(' '));
    assert_eq!(a, b);
    assert!(a.stdout.contains("monte_carlo"));
}

#[test]
fn binary_streams_and_threads() {
    let bin = env!("CARGO_BIN_EXE_steinbounds");
    let args = ["verify", "urn", "--m", "3", "--n", "40", "--k", "2", "--mc", "--samples", "20000", "--seed", "3"];
    let one = Command::new(bin).args(args).env("STEINBOUNDS_THREADS", "1").output().unwrap();
    let four = Command::new(bin).args(args).env("STEINBOUNDS_THREADS", "4").output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert!(one.stderr.is_empty());

    let bad = Command::new(bin).args(["bound", "t", "--dof", "2"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(3));
    assert!(bad.stdout.is_empty());
    let err: Value = serde_json::from_slice(&bad.stderr).unwrap();
    assert_eq!(err["error"], "domain");

    let zero = Command::new(bin).args(["bound", "t", "--dof", "8"]).env("STEINBOUNDS_THREADS", "0").output().unwrap();
    assert_eq!(zero.status.code(), Some(3));
}
