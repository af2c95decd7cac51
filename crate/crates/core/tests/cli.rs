use std::path::PathBuf;

use serde_json::{json, Value};
use stodom::cli::run;
use stodom::counterexamples::section32_instance;
use stodom::lift::FibreMap;
use stodom::rational::rat;
use stodom::{Configuration, FiniteMeasure, Space};

fn stodom(args: &[&str]) -> stodom::cli::Outcome {
    run(std::iter::once("stodom").chain(args.iter().copied()))
}

fn report(args: &[&str]) -> (Value, i32) {
    let o = stodom(args);
    assert!(!o.stdout.is_empty(), "no output for {args:?}: {}", o.stderr);
    (serde_json::from_str(&o.stdout).expect("json report"), o.code)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stodom-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_instance(name: &str, mu: &FiniteMeasure, rho: &FiniteMeasure, pm: &FibreMap) -> String {
    let path = scratch(name);
    let value = json!({ "mu": mu.to_file(), "rho": rho.to_file(), "fibre_map": pm.to_file() });
    std::fs::write(&path, value.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn verify_counterexamples_passes() {
    let (r, code) = report(&["verify", "counterexamples"]);
    assert_eq!(code, 0);
    assert_eq!(r["command"], "verify");
    assert_eq!(r["pass"], true);
}

#[test]
fn exhaustive_bk_report() {
    let (r, code) = report(&["bk", "--exhaustive", "4", "--p", "1/2"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["events"], 168);
    assert_eq!(r["result"]["violations"], 0);
}

#[test]
fn coupling_on_a_valid_instance() {
    let pm = FibreMap::from_sizes(&[2]).unwrap();
    let rho = FiniteMeasure::bernoulli_product(&rat(1, 2), 2).unwrap();
    let mu = FiniteMeasure::new(
        Space::binary(2),
        [(Configuration(vec![0, 0]), rat(1, 2)), (Configuration(vec![0, 1]), rat(1, 4)), (Configuration(vec![1, 0]), rat(1, 4))],
    )
    .unwrap();
    let path = write_instance("valid.json", &mu, &rho, &pm);
    let (r, code) = report(&["coupling", "--instance", &path]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["monotone"], true);
    assert_eq!(r["result"]["dominated"], true);
}

#[test]
fn failed_assumption_exits_one() {
    let f = section32_instance();
    let path = write_instance("section.json", &f.mu, &f.rho, &f.pm);
    let o = stodom(&["coupling", "--instance", &path]);
    assert_eq!(o.code, 1, "{}", o.stderr);
    assert!(o.stderr.contains("assumption"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(stodom(&["reach", "--graph", "nonsense:3", "--radius", "1"]).code, 2);
    assert_eq!(stodom(&["aug-compare", "--trials", "10"]).code, 2, "randomized commands need a seed");
    assert_eq!(stodom(&["no-such-command"]).code, 2);
    assert_eq!(stodom(&["bk", "--e1", "0x1", "--e2", "0x1", "--n", "1"]).code, 2, "non-increasing events");
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_stodom");
    let ok = std::process::Command::new(exe).args(["reach", "--graph", "path:3", "--radius", "1"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = std::process::Command::new(exe).args(["reach", "--radius", "1"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn config_is_spliced_and_overridden() {
    let path = scratch("config.json");
    std::fs::write(&path, r#"{"command": "reach", "graph": "path:5", "radius": 2, "p": ["1/2", "1/3"]}"#).unwrap();
    let p = path.to_string_lossy().into_owned();
    let (r, code) = report(&["--config", &p]);
    assert_eq!(code, 0);
    assert_eq!(r["args"]["radius"], 2);
    assert_eq!(r["args"]["p"], "1/2,1/3");
    let (r, _) = report(&["reach", "--config", &p, "--radius", "3"]);
    assert_eq!(r["args"]["radius"], 3);
    assert_eq!(r["args"]["graph"], "path:5");
    let wrong = stodom(&["cells", "--config", &p]);
    assert_eq!(wrong.code, 2);
}

#[test]
fn csv_output() {
    let o = stodom(&["reach", "--graph", "path:4", "--radius", "2", "--p", "1/2,1/4", "--format", "csv"]);
    assert_eq!(o.code, 0);
    let lines: Vec<&str> = o.stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].contains('p'));
    assert!(lines[1].contains("1/4") || lines[1].contains("1/2"));
    assert_eq!(stodom(&["verify", "counterexamples", "--format", "csv"]).code, 2);
}

#[test]
fn out_file_and_timing() {
    let path = scratch("out.json");
    let p = path.to_string_lossy().into_owned();
    let o = stodom(&["reach", "--graph", "path:3", "--radius", "1", "--out", &p, "--timing"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.is_empty());
    assert!(o.stderr.contains("wall time"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "reach");
    assert!(v["args"].get("jobs").is_none());
}

#[test]
fn seeded_runs_repeat() {
    let args = ["reach", "--graph", "box:7x7", "--probe", "24", "--radius", "3", "--method", "mc", "--trials", "500", "--seed", "3"];
    assert_eq!(stodom(&args).stdout, stodom(&args).stdout);
}
