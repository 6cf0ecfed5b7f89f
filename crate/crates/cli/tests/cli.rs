use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TRIANGLE: &str = r#"{"kind":"linear_scm","version":1,"payload":{"nodes":["X1","X2","X3"],
  "edges":[["X1","X2",0.5],["X1","X3",0.7],["X2","X3",0.4]]}}"#;

const CONFOUNDED: &str = r#"{"kind":"dag","version":1,"payload":{"nodes":["X","T","Y"],
  "edges":[["X","T"],["X","Y"],["T","Y"]]}}"#;

const COLLIDER: &str = r#"{"kind":"dag","version":1,"payload":{"nodes":["A","B","C"],
  "edges":[["A","C"],["B","C"]]}}"#;

const CPT: &str = r#"{"kind":"cpt_model","version":1,"payload":{"nodes":[
  {"name":"X","domain":["0","1"],"rows":[[0.6,0.4]]},
  {"name":"T","domain":["0","1"],"parents":["X"],"rows":[[0.7,0.3],[0.2,0.8]]},
  {"name":"Y","domain":["0","1"],"parents":["X","T"],"rows":[[0.9,0.1],[0.5,0.5],[0.7,0.3],[0.3,0.7]]}]}}"#;

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(model: Option<&Path>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_counterfact"));
    if let Some(m) = model {
        cmd.arg("--model").arg(m);
    }
    cmd.args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn counterfactual_on_the_triangle_model() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", TRIANGLE);
    let out = run(
        Some(&m),
        &[
            "counterfactual",
            "--observe",
            "X1=0.5,X2=1,X3=1.5",
            "--do",
            "X2=2",
            "--target",
            "X3",
        ],
    );
    assert_eq!(json(&out), serde_json::json!({"X3": 1.9}));
}

#[test]
fn identify_adjusts_for_the_confounder() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", CONFOUNDED);
    let v = json(&run(Some(&m), &["identify", "--do", "T", "--target", "Y"]));
    assert_eq!(v["expression"], "Σ_{x} P(Y|T,X=x) P(X=x)");
    assert_eq!(v["tree"]["kind"], "sum_over");
}

#[test]
fn collider_separates_its_parents() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", COLLIDER);
    let v = json(&run(
        Some(&m),
        &["dsep", "--x", "A", "--y", "B", "--given", ""],
    ));
    assert_eq!(v, serde_json::json!({"d_separated": true}));
    let v = json(&run(
        Some(&m),
        &["dsep", "--x", "A", "--y", "B", "--given", "C"],
    ));
    assert_eq!(v, serde_json::json!({"d_separated": false}));
}

#[test]
fn do_on_cpt_matches_adjustment() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", CPT);
    let v = json(&run(Some(&m), &["do", "--do", "T=1", "--target", "Y"]));
    // 0.6 * 0.5 + 0.4 * 0.7
    let p1 = v["distribution"]["1"].as_f64().unwrap();
    assert!((p1 - 0.58).abs() < 1e-12, "{v}");
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", TRIANGLE);
    let args = ["--seed", "9", "simulate", "--n", "25"];
    let a = run(Some(&m), &args);
    let b = run(Some(&m), &args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = run(Some(&m), &["--seed", "10", "simulate", "--n", "25"]);
    assert_ne!(a.stdout, c.stdout);
    let t1 = run(
        Some(&m),
        &["--output", "table", "--seed", "9", "simulate", "--n", "3"],
    );
    let t2 = run(
        Some(&m),
        &["--output", "table", "--seed", "9", "simulate", "--n", "3"],
    );
    assert_eq!(t1.stdout, t2.stdout);
}

#[test]
fn user_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let dag = write(&dir, "dag.json", CONFOUNDED);
    let bad = write(
        &dir,
        "bad.json",
        r#"{"kind":"dag","version":1,"payload":{"nodes":["A"],"edges":[],"colour":1}}"#,
    );
    let out = run(Some(&bad), &["validate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("payload.colour"));

    let out = run(
        Some(&dag),
        &["counterfactual", "--observe", "X=1", "--do", "T=1"],
    );
    assert_eq!(out.status.code(), Some(1));
    let out = run(Some(&dir.path().join("missing.json")), &["validate"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(Some(&dag), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    let cyclic = write(
        &dir,
        "cyc.json",
        r#"{"kind":"dag","version":1,"payload":{"nodes":["A","B"],"edges":[["A","B"],["B","A"]]}}"#,
    );
    assert_eq!(run(Some(&cyclic), &["validate"]).status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(run(None, &["--help"]).status.code(), Some(0));
}

#[test]
fn csv_tables_feed_matching() {
    let dir = TempDir::new().unwrap();
    let csv = write(
        &dir,
        "t.csv",
        "unit,treatment,outcome,x_1\na,1,5,0\nb,0,3,0\nc,1,7,1\nd,0,4,1\n",
    );
    let v = json(&run(Some(&csv), &["match", "--method", "exact"]));
    assert_eq!(v["units"].as_array().unwrap().len(), 4);
    let v = json(&run(Some(&csv), &["ate"]));
    assert!((v["ate"].as_f64().unwrap() - 2.5).abs() < 1e-12, "{v}");
}
