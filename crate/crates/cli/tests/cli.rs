use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use genbound::threshold::{CellGrid, GridOptions, LabeledDataset};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_genbound"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.lines().next().unwrap_or("")).unwrap_or_else(|e| panic!("{e}: {text}"))
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bound_examples() {
    let cases: [(&[&str], f64, f64); 3] = [
        (&["--method", "single_rule", "--n", "1000", "--errors", "200", "--epsilon", "0.01"], 0.2402, 5e-4),
        (&["--method", "vapnik_baseline", "--n", "1000", "--errors", "200", "--h", "10", "--epsilon", "0.01"], 0.6104, 1e-3),
        (&["--method", "trans", "--n", "1000", "--k", "15", "--errors", "200", "--h", "10", "--epsilon", "0.01"], 0.4093, 5e-4),
    ];
    for (args, expected, tol) in cases {
        let out = bin().arg("bound").args(args).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        let v = json(&out);
        assert!((v["bound"].as_f64().unwrap() - expected).abs() < tol, "{v}");
        for key in ["method", "inputs", "bound", "clipped", "vacuous"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn floats_have_seventeen_digits() {
    let out = run(&["bound", "--method", "single_rule", "--n", "1000", "--errors", "200"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let bound = text.split("\"bound\":").nth(1).unwrap().split(',').next().unwrap();
    let mantissa = bound.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{bound}");
}

#[test]
fn validation_errors_exit_2() {
    let out = run(&["bound", "--method", "single_rule", "--n", "1000", "--r", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "validation");
    let out = run(&["bound", "--method", "deviation", "--n", "1000", "--r", "0.2", "--kl", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["bound", "--method", "single_rule", "--n", "1000", "--r", "0.2", "--epsilon", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reproduce_table() {
    let out = run(&["reproduce"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("16/16 rows pass"));
    let out = run(&["reproduce", "--only", "T5", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert_eq!(json(&Output { stdout: text.into_bytes(), ..out })["id"], "T5");
    let out = run(&["reproduce", "--tolerance-scale", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

const TWELVE: &str = "f1,y\n0.05,0\n0.12,0\n0.2,1\n0.28,0\n0.33,0\n0.41,0\n0.52,1\n0.6,1\n0.67,0\n0.75,1\n0.83,1\n0.95,1\n";

#[test]
fn threshold_commands() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "t.csv", TWELVE);
    let out = run(&["threshold", "fit", "--data", s(&data), "--lambda", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let fit = json(&out);
    let parsed = genbound_csv(TWELVE);
    let grid = CellGrid::build(&parsed, GridOptions::default()).unwrap();
    assert!((fit["gibbs_risk"].as_f64().unwrap() - grid.gibbs_risk(0.0)).abs() < 1e-15);
    assert_eq!(fit["log_partition"].as_f64().unwrap(), 0.0);

    let out = run(&["threshold", "predict", "--data", s(&data), "--lambda", "4", "--input", s(&data)]);
    let pred = json(&out);
    let rows = pred["probabilities"].as_array().unwrap();
    assert_eq!(rows.len(), 12);
    for r in rows {
        let sum: f64 = r.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    let out = run(&["threshold", "bound", "--data", s(&data), "--lambda", "4"]);
    let b = json(&out);
    assert!(b["bound"].as_f64().unwrap() >= b["extras"]["gibbs_risk"].as_f64().unwrap());

    let out = run(&["threshold", "dimension", "--data", s(&data)]);
    assert!(json(&out)["d_e"].as_f64().unwrap() >= 0.0);

    let out = run(&["threshold", "fit", "--data", s(&data), "--cap", "5"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["error"]["kind"], "capacity");
}

fn genbound_csv(text: &str) -> LabeledDataset {
    let mut pats = Vec::new();
    let mut labels = Vec::new();
    for line in text.lines().skip(1) {
        let mut it = line.split(',');
        pats.push(vec![it.next().unwrap().parse().unwrap()]);
        labels.push(it.next().unwrap().parse().unwrap());
    }
    LabeledDataset::new(pats, labels, 2).unwrap()
}

#[test]
fn svm_commands() {
    let dir = TempDir::new().unwrap();
    let two = write(&dir, "two.csv", "f1,y\n1,1\n-1,-1\n");
    let model = dir.path().join("m.json");
    let out = run(&["svm", "train", "--data", s(&two), "--model", s(&model)]);
    assert_eq!(out.status.code(), Some(0));
    let t = json(&out);
    assert!((t["margin"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(t["b"].as_f64().unwrap().abs() < 1e-9);
    let rec: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    for key in ["kernel", "support_points", "alphas", "b", "c"] {
        assert!(rec.get(key).is_some());
    }
    let out = run(&["svm", "eval", "--model", s(&model), "--data", s(&two)]);
    let e = json(&out);
    assert_eq!(e["errors"], 0);
    assert!((e["margin"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let xor = write(&dir, "xor.csv", "f1,f2,y\n0,0,1\n1,1,1\n0,1,-1\n1,0,-1\n");
    let out = run(&["svm", "train", "--data", s(&xor), "--model", s(&model)]);
    assert_eq!(out.status.code(), Some(4));
    let out = run(&["svm", "train", "--data", s(&xor), "--kernel", "gaussian", "--model", s(&model)]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["svm", "eval", "--model", s(&model), "--data", s(&xor)]);
    assert_eq!(json(&out)["errors"], 0);

    let out = run(&["svm", "bound", "--model", s(&model), "--data", s(&xor), "--k", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["method"], "svm_trans");
    let out = run(&["svm", "bound", "--model", s(&model), "--data", s(&xor), "--k", "3", "--method", "margin"]);
    assert_eq!(json(&out)["method"], "svm_margin");
    let out = run(&["svm", "train", "--data", s(&two), "--kernel", "cubic", "--model", s(&model)]);
    assert_eq!(out.status.code(), Some(2));
}

fn replay(m: &[Vec<f64>]) -> usize {
    let n = m.len();
    let t: Vec<usize> = (0..n)
        .map(|k| (0..n).find(|&j| j != k && m[j][k] > 0.0).map_or(n + 1, |j| j + 1))
        .collect();
    let max = *t.iter().max().unwrap();
    t.iter().position(|&v| v == max).unwrap() + 1
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap_or(f64::INFINITY)).collect())
        .collect()
}

#[test]
fn select_command() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", "f1,f2,y\n0.1,0.3,0\n0.2,0.9,0\n0.35,0.1,0\n0.4,0.6,0\n0.6,0.2,1\n0.7,0.8,1\n0.8,0.5,1\n0.9,0.4,1\n");
    let out = run(&["select", "--data", s(&data), "--models", "1", "--lambdas", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["selection"]["k_hat"], 1);

    let args = ["select", "--data", s(&data), "--models", "1;1,2", "--lambdas", "1,4,8"];
    let out = run(&args);
    let v = json(&out);
    let k_hat = v["selection"]["k_hat"].as_u64().unwrap() as usize;
    assert_eq!(k_hat, replay(&matrix(&v["chained"]["matrix"])));
    assert_eq!(v["ordered"].as_array().unwrap().len(), 6);
    assert_eq!(run(&args).stdout, out.stdout);
}

#[test]
fn generate_is_seeded() {
    let a = run(&["generate", "--seed", "7", "--n", "20", "--h", "2", "--noise", "0.1"]);
    let b = run(&["generate", "--seed", "7", "--n", "20", "--h", "2", "--noise", "0.1"]);
    let c = run(&["generate", "--seed", "8", "--n", "20", "--h", "2", "--noise", "0.1"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("f1,f2,y\n"));
    assert_eq!(text.lines().count(), 21);
}
