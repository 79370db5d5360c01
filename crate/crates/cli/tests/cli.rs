use std::path::Path;
use std::process::{Command, Output};

fn combwalk(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_combwalk"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn records_do_not_depend_on_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |jobs: &str| {
        let out = dir.path().join(jobs);
        let o = combwalk(
            &out,
            &[
                "--jobs",
                jobs,
                "--seed",
                "5",
                "--alpha",
                "0.5",
                "simulate",
                "--replicas",
                "300",
            ],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out.join("records.csv")).unwrap()
    };
    assert_eq!(run("1"), run("8"));
}

#[test]
fn output_header_works_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(
        code(&combwalk(
            &a,
            &["--alpha", "2", "--family", "poly", "graph", "-s", "n_max=30"]
        )),
        0
    );
    let cfg = a.join("graph.csv");
    assert_eq!(
        code(&combwalk(&b, &["--config", cfg.to_str().unwrap(), "graph"])),
        0
    );
    assert_eq!(
        std::fs::read(cfg).unwrap(),
        std::fs::read(b.join("graph.csv")).unwrap()
    );
    // A header written by another command is rejected.
    let o = combwalk(
        &b,
        &["--config", b.join("graph.csv").to_str().unwrap(), "kernel"],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.txt");
    std::fs::write(&grid, "N = 16, 32\nthis line is not a setting\n").unwrap();
    let o = combwalk(
        dir.path(),
        &["bounds", "--grid-file", grid.to_str().unwrap()],
    );
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::write(&grid, "N = 16, x\n").unwrap();
    assert_eq!(
        code(&combwalk(
            dir.path(),
            &["bounds", "--grid-file", grid.to_str().unwrap()]
        )),
        2
    );
    assert_eq!(
        code(&combwalk(dir.path(), &["bounds", "--bound", "nonsense"])),
        2
    );
    assert_eq!(code(&combwalk(dir.path(), &["kernel", "--x", "(3,9)"])), 2);
    assert_eq!(code(&combwalk(dir.path(), &["-s", "nope=1", "graph"])), 2);
    assert_eq!(code(&combwalk(dir.path(), &["simulate", "--bogus"])), 2);
}

#[test]
fn single_bound_selection_and_failure_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = combwalk(dir.path(), &["bounds", "--bound", "hk1d", "-s", "L=32,64"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = json(&dir.path().join("bounds_report.json"));
    let reports = report["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["bound_id"], "hk1d");
    assert_eq!(report["header"]["L"], "32,64");
    let csv = std::fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    assert!(csv
        .lines()
        .filter(|l| !l.starts_with("#!"))
        .skip(1)
        .all(|l| l.starts_with("hk1d,")));

    // An impossible trend limit makes the fitted bound fail.
    let o = combwalk(
        dir.path(),
        &[
            "bounds",
            "--bound",
            "hk1d",
            "-s",
            "L=32,64",
            "-s",
            "trend_max=-1",
        ],
    );
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL hk1d"));
}

#[test]
fn exact_kernel_and_resistance_oracles() {
    let dir = tempfile::tempdir().unwrap();
    let o = combwalk(
        dir.path(),
        &[
            "--alpha", "2", "kernel", "--x", "(0,0)", "--y", "(8,2)", "--n", "14", "--exact",
        ],
    );
    assert_eq!(code(&o), 0);
    let k = json(&dir.path().join("kernel.json"));
    assert_eq!(k["exact_agrees"], true);
    assert!(k["value"].as_f64().unwrap() > 0.0);

    let o = combwalk(
        dir.path(),
        &["resist", "--u", "(-3,1)", "--v", "(8,2)", "--radius", "5"],
    );
    assert_eq!(code(&o), 0);
    let r = json(&dir.path().join("resist.json"));
    assert_eq!(r["distance"], 14);
    assert_eq!(r["exit_time_agrees"], true);
}

#[test]
fn moments_and_growth_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&combwalk(
            dir.path(),
            &["moments", "--count", "h2", "--law"]
        )),
        0
    );
    let m = json(&dir.path().join("moments.json"));
    let law: Vec<f64> = m["law"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let mean: f64 = law.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    assert!((mean - m["mean"].as_f64().unwrap()).abs() < 1e-12);

    let o = combwalk(
        dir.path(),
        &["growth", "--grid", "8,16,64", "--replicas", "20"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g = json(&dir.path().join("growth_summary.json"));
    assert_eq!(g["dropped"], serde_json::json!([8]));
    assert_eq!(g["quantiles"].as_array().unwrap().len(), 2);
}
