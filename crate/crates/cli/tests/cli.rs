use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use newton_cli::Summary;

fn newton(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_newton"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn quadratic_run_reaches_optimality() {
    let dir = tempfile::tempdir().unwrap();
    let o = newton(
        &[
            "run",
            "--problem",
            "quadratic",
            "--method",
            "tr-full",
            "--eps-g",
            "1e-6",
            "--out",
            "out",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/summary.json")).unwrap();
    let s: Summary = serde_json::from_str(&text).unwrap();
    assert_eq!(s.termination, "optimality");
    assert_eq!(s.method, "tr-full");
    assert_eq!(s.problem, "quadratic");
    assert_eq!(s.seed, 42);
    assert!(s.final_loss < 1e-10);
    let trace = fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    assert!(trace.starts_with("iter,props,loss"));
    assert_eq!(trace.lines().count(), s.iterations + 2);
}

#[test]
fn summary_keys_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let o = newton(
        &["run", "--problem", "rosenbrock", "--method", "arc-full"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    assert_eq!(
        keys,
        [
            "final_loss",
            "iterations",
            "method",
            "problem",
            "seed",
            "termination",
            "total_props"
        ]
    );
}

#[test]
fn invalid_settings_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "--eta", "0"][..],
        &["run", "--gamma", "1"],
        &["run", "--problem", "nls"],
        &["run", "--problem", "nls", "--data", "missing.svm"],
        &["run", "--grad-ratio", "1.5"],
        &["sigma-sweep", "--sigmas", ""],
        &["sigma-sweep", "--sigmas", "abc"],
        &["frobnicate"],
    ] {
        let o = newton(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"problem": "rosenbrock", "method": "arc-full", "seed": 7, "max-iters": 3}"#,
    )
    .unwrap();
    let o = newton(&["run", "--config", "cfg.json", "--seed", "9"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s: Summary =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(s.problem, "rosenbrock");
    assert_eq!(s.method, "arc-full");
    assert_eq!(s.seed, 9);
    assert_eq!(s.termination, "max-iterations");
    assert_eq!(s.iterations, 3);

    fs::write(dir.path().join("bad.json"), r#"{"no-such-key": 1}"#).unwrap();
    let o = newton(&["run", "--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_writes_one_group_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "compare",
        "--problem",
        "synth-nls",
        "--samples",
        "300",
        "--methods",
        "tr-full,tr-inexact,arc-full",
        "--seeds",
        "1",
        "--max-props",
        "20000",
        "--out",
        "c.csv",
    ];
    let o = newton(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,seed,iter,props,loss"));
    let mut methods: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    methods.dedup();
    assert_eq!(methods, ["tr-full", "tr-inexact", "arc-full"]);

    let again = newton(&[&args[..12], &["again.csv"]].concat(), dir.path());
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(
        text,
        fs::read_to_string(dir.path().join("again.csv")).unwrap()
    );
}

#[test]
fn sigma_sweep_keeps_values_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let o = newton(
        &[
            "sigma-sweep",
            "--problem",
            "synth-nls",
            "--samples",
            "200",
            "--sigmas",
            "1e-2,1,100",
            "--max-props",
            "5000",
            "--out",
            "s.csv",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 6);
    let fixed: Vec<&str> = rows
        .iter()
        .filter(|r| r[0] == "fixed")
        .map(|r| r[1])
        .collect();
    assert_eq!(fixed, ["1e-2", "1", "100"]);
    assert!(rows.iter().all(|r| r[6] == "prop-budget"));
}

#[test]
fn check_passes_and_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = newton(&["check"], dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let o = newton(&["check", "--perturb-gradient", "1e-3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn help_lists_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = newton(&["run", "--help"], dir.path());
    let text = String::from_utf8_lossy(&o.stdout);
    for flag in [
        "--problem",
        "--data",
        "--method",
        "--eps-g",
        "--eps-h",
        "--eta",
        "--gamma",
        "--delta0",
        "--sigma0",
        "--fixed-sigma",
        "--nu",
        "--grad-ratio",
        "--hess-ratio",
        "--arc-mode",
        "--zero-small-grad",
        "--max-iters",
        "--max-props",
        "--seed",
        "--out",
        "--scale-features",
        "--flip-labels",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
    assert!(text.contains("[default: 0.1]"));
    assert!(text.contains("[default: 0.01]"));
}

#[test]
fn libsvm_file_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::new();
    for i in 0..40 {
        let label = if i % 3 == 0 { "-1" } else { "+1" };
        text.push_str(&format!(
            "{label} 1:{} 3:{}\n",
            (i as f64 * 0.37).sin(),
            (i as f64 * 0.11).cos()
        ));
    }
    fs::write(dir.path().join("tiny.svm"), text).unwrap();
    let o = newton(
        &[
            "run",
            "--problem",
            "nls",
            "--data",
            "tiny.svm",
            "--method",
            "arc-subh",
            "--hess-ratio",
            "0.5",
            "--max-iters",
            "20",
        ],
        dir.path(),
    );
    assert!(matches!(o.status.code(), Some(0)), "{}", stderr(&o));
}
