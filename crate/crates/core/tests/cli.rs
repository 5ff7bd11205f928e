use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn permclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permclass"))
        .args(args)
        .env_remove("PERMCLASS_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = permclass(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn perm_of_the_ones_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("ones.csv");
    fs::write(&m, "1,1,1\n1,1,1\n1,1,1\n").unwrap();
    let text = ok(&["perm", "exact", "--matrix", p(&m)]);
    assert!(text.starts_with("# permclass "));
    assert!(text.contains("\nper_alpha,6\n"), "{text}");
    assert!(text.contains("\nratio_last,3\n"), "{text}");
    let text = ok(&["perm", "approx", "--matrix", p(&m), "--order", "3", "--alpha", "2"]);
    // constant kernel: c (alpha + n) with n = 2 training points
    assert!(text.contains(",4\n"), "{text}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    ok(&["simulate", "chequerboard", "--seed", "5", "--out", p(&train)]);
    let queries = dir.path().join("q.csv");
    fs::write(&queries, "x1,x2\n0.5,0.5\n1.5,0.5\n2.9,2.9\n").unwrap();
    let mut outputs = Vec::new();
    let model = dir.path().join("model.json");
    let pred = dir.path().join("pred.csv");
    for _ in 0..2 {
        ok(&["fit", "--data", p(&train), "--kernel", "exponential", "--tau", "0.5", "--out", p(&model)]);
        ok(&["predict", "--model", p(&model), "--queries", p(&queries), "--out", p(&pred)]);
        let cv = ok(&["cv", "--data", p(&train), "--folds", "3", "--seed", "9"]);
        outputs.push((fs::read(&model).unwrap(), fs::read(&pred).unwrap(), cv));
    }
    assert_eq!(outputs[0], outputs[1]);
    let pred = String::from_utf8(outputs[0].1.clone()).unwrap();
    assert!(pred.lines().any(|l| l == "index,p_1,p_2,label"), "{pred}");
    assert_eq!(pred.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn failures_exit_nonzero_and_leave_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    ok(&["simulate", "chequerboard", "--out", p(&train)]);
    let model = dir.path().join("model.json");
    ok(&["fit", "--data", p(&train), "--out", p(&model)]);
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x1,x2,x3\n1,2,3\n").unwrap();
    let out_path = dir.path().join("pred.csv");
    let out = permclass(&["predict", "--model", p(&model), "--queries", p(&bad), "--out", p(&out_path)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert!(!out_path.exists());
    assert!(!dir.path().join("pred.csv.partial").exists());

    let missing = permclass(&["fit", "--data", "/nonexistent/x.csv", "--out", p(&model)]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/x.csv"));
    assert!(!permclass(&["perm", "exact"]).status.success());
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    ok(&["simulate", "chequerboard", "--out", p(&train)]);
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "alpha = 2.5\norder = \"1\"\n\n[kernel]\nfamily = \"exponential\"\ntau = 0.75\n").unwrap();
    let model = dir.path().join("model.json");
    ok(&["--config", p(&cfg), "fit", "--data", p(&train), "--out", p(&model)]);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&model).unwrap()).unwrap();
    let params = &v["result"]["params"];
    assert_eq!(params["alphas"][0], 2.5);
    assert_eq!(params["kernel"]["family"], "exponential");
    assert_eq!(params["kernel"]["tau"], 0.75);
    assert_eq!(params["method"], "1");
    ok(&["--config", p(&cfg), "fit", "--data", p(&train), "--alpha", "0.5", "--out", p(&model)]);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&model).unwrap()).unwrap();
    assert_eq!(v["result"]["params"]["alphas"][0], 0.5);
    assert_eq!(v["meta"]["config"]["alpha"], "0.5");
}
