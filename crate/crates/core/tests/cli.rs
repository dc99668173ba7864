use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gittins(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gittins")).args(args).output().unwrap()
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn oracle_prints_index_table() {
    let out = gittins(&["oracle"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("arm,state,M_star,G_star"));
    // five toy arms of five states
    assert_eq!(lines.clone().count(), 25);
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(&first[..2], &[0.0, 0.0]);
    assert!((first[3] - 0.9).abs() < 1e-5);
    assert!((first[2] * 0.1 - first[3]).abs() < 1e-12);
}

#[test]
fn train_writes_counters_matching_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = gittins(&["train", "--out", out.to_str().unwrap(), "--seed", "3", "--cadence", "1000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let counters = read(&out.join("counters_3.csv"));
    assert_eq!(counters.lines().next(), Some("step,q_updates,index_updates"));
    assert_eq!(counters.lines().last(), Some("20000,100000,10000"));
    let metrics = read(&out.join("metrics_3.csv"));
    assert_eq!(metrics.lines().count(), 21);
    let indices = read(&out.join("indices_3.csv"));
    assert!(indices.starts_with("step,t0_s0,t0_s1"));
    let manifest = read(&out.join("manifest.txt"));
    assert!(manifest.contains("run.seeds = 3"));
}

#[test]
fn train_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = gittins(&["train", "--out", d.to_str().unwrap(), "--seed", "0,1", "--steps", "3000", "--algo", "qwi"]);
        assert!(o.status.success());
    }
    for f in ["metrics_0.csv", "indices_1.csv", "counters_1.csv"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "env.kind = elementary\nrun.algo = qgi\nrun.steps = 500\n").unwrap();
    let out = dir.path().join("o");
    let o = gittins(&["train", "--config", cfg.to_str().unwrap(), "--algo", "restart", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = read(&out.join("manifest.txt"));
    assert!(manifest.contains("env.kind = elementary"));
    assert!(manifest.contains("run.algo = restart"));
    assert_eq!(read(&out.join("counters_0.csv")).lines().last(), Some("500,2000,0"));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "run.algo = qgi\nrun.stepz = 5\n").unwrap();
    let o = gittins(&["train", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("run.stepz"), "{err}");
}

#[test]
fn schedule_writes_episode_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let cfg = dir.path().join("s.cfg");
    fs::write(&cfg, "env.kind = scheduling\nsched.kind = poisson\n").unwrap();
    let o = gittins(&["schedule", "--config", cfg.to_str().unwrap(), "--episodes", "20", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = read(&out.join("metrics_0.csv"));
    assert!(metrics.starts_with("episode,flowtime,oracle_flowtime,regret,pct_optimal_actions"));
    assert_eq!(metrics.lines().count(), 21);
    for line in metrics.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v[3], v[1] - v[2]);
    }
    assert!(read(&out.join("indices_0.csv")).starts_with("table,state,index,oracle_index"));
}

#[test]
fn schedule_rejects_qwi() {
    let dir = tempfile::tempdir().unwrap();
    let o = gittins(&["schedule", "--algo", "qwi", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn gridsearch_writes_convergence_map() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g.cfg");
    fs::write(
        &cfg,
        "grid.x_values = 0.2,0.4\ngrid.y_values = 0.6\ngrid.runs = 2\ngrid.deltas = 0.05,0.1\nrun.steps = 5000\n",
    )
    .unwrap();
    let out = dir.path().join("g");
    let o = gittins(&["gridsearch", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let map = read(&out.join("convergence_map.csv"));
    let mut lines = map.lines();
    assert_eq!(lines.next(), Some("x_axis,y_axis,delta,fraction_converged"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][..3], [0.2, 0.6, 0.05]);
    for r in &rows {
        assert!([0.0, 0.5, 1.0].contains(&r[3]));
    }
}
