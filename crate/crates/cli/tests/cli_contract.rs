use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wassfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wassfs")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_small_data(dir: &Path) -> (String, String) {
    let data = dir.join("train.csv");
    let mut text = String::from("a,b,c,label\n");
    for i in 0..40u32 {
        let (a, b, c) = (i % 2, (i / 2) % 2, (i * 7 / 3) % 2);
        let label = ["x", "y", "z"][((a + b) % 2 + c) as usize % 3];
        text.push_str(&format!("{a},{b},{c},{label}\n"));
    }
    fs::write(&data, text).unwrap();
    let metric = dir.join("metric.csv");
    fs::write(&metric, "x,y,z\n0,0.2,1\n0.2,0,1\n1,1,0\n").unwrap();
    (data.to_str().unwrap().into(), metric.to_str().unwrap().into())
}

#[test]
fn ot_prints_the_exact_cost() {
    let o = wassfs(&["ot", "--p", "0.5,0.5,0", "--q", "0,0.5,0.5", "--matrix", "0,0.2,1;0.2,0,1;1,1,0", "--measure", "exact"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    let line = out.lines().find(|l| l.starts_with("wasserstein-exact")).unwrap();
    let v: f64 = line.split('\t').nth(1).unwrap().parse().unwrap();
    // Sending 0 -> 2 directly (0.5) beats 0 -> 1 plus 1 -> 2 (0.6).
    assert!((v - 0.5).abs() < 1e-12, "{line}");
}

#[test]
fn input_errors_exit_2_and_name_the_field() {
    for (args, field) in [
        (vec!["select", "--synthetic", "hierarchical", "--synthetic-samples", "50", "--k", "0"], "--k"),
        (vec!["verify-bounds", "--trials", "0"], "--trials"),
        (vec!["verify-bounds", "--trials", "2", "--m", "9"], "--m"),
        (vec!["ot", "--p", "0.5,0.5", "--q", "0.2,0.3,0.5"], "--q"),
        (vec!["ot", "--p", "0.5,0.5", "--q", "0.5,0.5", "--lambda=-1", "--measure", "sinkhorn"], "--lambda"),
        (vec!["select", "--k", "2"], "--metric"),
    ] {
        let o = wassfs(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains(field), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn thread_variable_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_wassfs"))
        .args(["verify-bounds", "--trials", "2"])
        .env("WASSFS_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("WASSFS_THREADS"));
}

#[test]
fn flags_override_the_config_file_and_unknown_keys_fail() {
    let dir = tempfile::tempdir().unwrap();
    let (data, metric) = write_small_data(dir.path());
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, format!(r#"{{"data": "{data}", "metric": "{metric}", "k": 1, "seed": 3}}"#)).unwrap();
    let out = dir.path().join("run");
    let o = wassfs(&["select", "--config", cfg.to_str().unwrap(), "--k", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let trace = json(&out.join("trace.json"));
    assert_eq!(trace["retained"].as_array().unwrap().len(), 2);
    let echo = json(&out.join("config.json"));
    assert_eq!(echo["command"], "select");
    assert_eq!(echo["args"]["k"], 2);
    assert_eq!(echo["args"]["seed"], 3);
    assert!(json(&out.join("timing.json"))["select_seconds"].is_number());

    // The echoed arguments reproduce the run.
    let again = dir.path().join("again.json");
    fs::write(&again, echo["args"].to_string()).unwrap();
    let out2 = dir.path().join("run2");
    let o = wassfs(&["select", "--config", again.to_str().unwrap(), "--out", out2.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&out2.join("trace.json")), trace);

    fs::write(&cfg, r#"{"k": 1, "bogus": true}"#).unwrap();
    let o = wassfs(&["select", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bogus"), "{}", stderr(&o));
}

#[test]
fn eval_reads_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (data, metric) = write_small_data(dir.path());
    let sel = dir.path().join("sel");
    let o = wassfs(&["select", "--data", &data, "--metric", &metric, "--k", "2", "--out", sel.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ev = dir.path().join("ev");
    let trace = sel.join("trace.json");
    let o = wassfs(&[
        "eval", "--data", &data, "--metric", &metric, "--trace", trace.to_str().unwrap(), "--k", "2", "--top-k", "1",
        "--knn", "3", "--out", ev.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(&ev.join("eval.json"));
    let loss = report["loss"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&loss));
    let o = wassfs(&["eval", "--data", &data, "--metric", &metric, "--features", "0,7"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn sweep_writes_every_cell_and_their_means() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = wassfs(&[
        "noise-sweep", "--synthetic", "hierarchical", "--synthetic-samples", "300", "--p-list", "0.1,0.3", "--n-features",
        "3,5", "--seeds", "1,2", "--measures", "wasserstein-exact,kl", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let loss = fs::read_to_string(out.join("loss.tsv")).unwrap();
    let rows: Vec<Vec<&str>> = loss.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(loss.lines().next().unwrap(), "n_features\tk\tP\tmeasure\tloss\tseed");
    assert_eq!(rows.len(), 16);
    let avg = fs::read_to_string(out.join("averaged.tsv")).unwrap();
    let avg_rows: Vec<Vec<&str>> = avg.lines().skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(avg_rows.len(), 4);
    for a in &avg_rows {
        let cells: Vec<f64> = rows
            .iter()
            .filter(|r| r[0] == a[0] && r[3] == a[2])
            .map(|r| r[4].parse().unwrap())
            .collect();
        assert_eq!(cells.len(), 4);
        assert_eq!(a[4], "4");
        let mean = cells.iter().sum::<f64>() / 4.0;
        assert!((mean - a[3].parse::<f64>().unwrap()).abs() < 1e-12);
    }
}

#[test]
fn metric_check_reports_neighbors() {
    let dir = tempfile::tempdir().unwrap();
    let (_, metric) = write_small_data(dir.path());
    let o = wassfs(&["metric-check", "--metric", &metric]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("ok\t3 classes"));
    fs::write(dir.path().join("bad.csv"), "x,y\n0,1\n2,0\n").unwrap();
    let o = wassfs(&["metric-check", "--metric", dir.path().join("bad.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_bounds_writes_a_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let o = wassfs(&["verify-bounds", "--trials", "12", "--seed", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&out.join("report.json"));
    assert_eq!(r["summary"]["theorem1_violations"], 0);
    assert_eq!(r["trials"].as_array().unwrap().len(), 12);
}
