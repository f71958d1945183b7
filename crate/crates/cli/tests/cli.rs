use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn byzalloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_byzalloc"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config(horizon: usize, alpha: &str, graph: &str) -> String {
    format!(
        r#"name = "cli"
seed = 3
horizon = {horizon}

[network]
{graph}
byzantine = [2]

[[agents]]
kind = "thermal"
eta = 0.05
zeta = 2.0
xi = 0.0
lo = 10.0
hi = 90.0

[[agents]]
kind = "thermal"
eta = 0.07
zeta = 1.0
xi = 0.0
lo = 0.0
hi = 80.0

[[agents]]
kind = "thermal"
eta = 0.06
zeta = 1.5
xi = 0.0
lo = 5.0
hi = 70.0

[[agents]]
kind = "wind"
rho = 1.0
v_in = 3.0
v_out = 25.0
v_r = 13.0
sigma_ue = 5.0
sigma_oe = 30.0
p_r = 100.0
lo = 0.0
hi = 100.0

[weibull]
kind = "fixed"
scale = 9.0
shape = 2.0

[demand]
kind = "gaussian"
mean = 40.0
stddev = 3.0

[attack]
kind = "small_value"
value = -300.0

[algorithm]
kind = "resilient"
rule = "ctm_arc"
alpha = {alpha}
beta = 2.0
theta = 0.01
"#
    )
}

const COMPLETE: &str = "agents = 4\nedges = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]";

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.toml", &config(25, "1.0", COMPLETE));
    let out = dir.path().join("out");
    let o = byzalloc(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("cumulative_violation="));
    for f in ["trace.csv", "metrics.csv", "meta.json", "config.toml"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["algorithm"], "ctm_arc");
    assert_eq!(meta["final_metrics"]["t"], 25);
    assert!(meta["config_hash"].as_str().is_some_and(|h| !h.is_empty()));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.toml", &config(20, "1.0", COMPLETE));
    let run = |name: &str, seed: Option<&str>| {
        let out = dir.path().join(name);
        let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        assert!(byzalloc(&args).status.success());
        fs::read(out.join("trace.csv")).unwrap()
    };
    let default = run("d", None);
    assert_eq!(default, run("three", Some("3")));
    assert_ne!(default, run("four", Some("4")));
}

#[test]
fn zero_horizon_gives_header_only_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.toml", &config(0, "1.0", COMPLETE));
    let out = dir.path().join("out");
    assert!(
        byzalloc(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .status
            .success()
    );
    assert_eq!(
        fs::read_to_string(out.join("metrics.csv")).unwrap(),
        "t,cumulative_regret,cumulative_violation\n"
    );
    assert_eq!(fs::read_to_string(out.join("trace.csv")).unwrap().lines().count(), 2);
}

#[test]
fn validate_reports_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.toml", &config(10, "1.0", COMPLETE));
    let o = byzalloc(&["validate", good.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("valid"));

    let bad_text = config(10, "-1.0", COMPLETE).replace("byzantine = [2]", "byzantine = [7]");
    let bad = write(dir.path(), "bad.toml", &bad_text);
    let o = byzalloc(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("algorithm"), "{err}");
    assert!(err.contains("network.byzantine"), "{err}");
}

#[test]
fn failed_run_leaves_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &config(10, "-1.0", COMPLETE));
    let out = dir.path().join("out");
    let o = byzalloc(&["run", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!out.exists());
    let o = byzalloc(&["run", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn metrics_subcommand_recomputes_from_trace() {
    let dir = tempfile::tempdir().unwrap();
    let graph_dir = dir.path().join("graphs");
    fs::create_dir(&graph_dir).unwrap();
    fs::write(
        graph_dir.join("k4.txt"),
        "# complete graph\nn 4\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n",
    )
    .unwrap();
    let cfg_dir = dir.path().join("configs");
    fs::create_dir(&cfg_dir).unwrap();
    let cfg = write(
        &cfg_dir,
        "a.toml",
        &config(40, "1.0", "graph_file = \"../graphs/k4.txt\""),
    );
    let out = dir.path().join("out");
    assert!(
        byzalloc(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .status
            .success()
    );

    let trace = out.join("trace.csv");
    let o = byzalloc(&["metrics", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), fs::read_to_string(out.join("metrics.csv")).unwrap());

    let written = dir.path().join("again.csv");
    let o = byzalloc(&[
        "metrics",
        trace.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        written.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read(&written).unwrap(), fs::read(out.join("metrics.csv")).unwrap());

    let lone = dir.path().join("lone");
    fs::create_dir(&lone).unwrap();
    fs::copy(&trace, lone.join("trace.csv")).unwrap();
    let o = byzalloc(&["metrics", lone.join("trace.csv").to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("no config"));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,cumulative_violation"));
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    for (a, b) in lines.zip(metrics.lines().skip(1)) {
        let full: Vec<&str> = b.split(',').collect();
        assert_eq!(a, format!("{},{}", full[0], full[2]));
    }
}

#[test]
fn sweep_runs_each_config_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfgs = dir.path().join("configs");
    fs::create_dir(&cfgs).unwrap();
    write(&cfgs, "one.toml", &config(15, "1.0", COMPLETE));
    write(&cfgs, "two.toml", &config(15, "0.5", COMPLETE));
    let out = dir.path().join("out");
    let o = byzalloc(&["sweep", cfgs.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("one/trace.csv").is_file());
    assert!(out.join("two/trace.csv").is_file());

    write(&cfgs, "three.toml", &config(15, "-2.0", COMPLETE));
    let o = byzalloc(&["sweep", cfgs.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
    assert!(stderr(&o).contains("1 of 3 runs failed"));
}
