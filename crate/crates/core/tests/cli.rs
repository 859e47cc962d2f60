mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::crate_dir;

fn tai(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tai"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("TAI_SOLVER_THREADS", t);
    }
    cmd.output().unwrap()
}

fn scenario(name: &str) -> String {
    crate_dir().join("scenarios").join(name).display().to_string()
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn solve_is_deterministic_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in [None, Some("1"), Some("4")].into_iter().enumerate() {
        let out = tmp.path().join(format!("run{i}"));
        let o = tai(
            &[
                "solve",
                "--config",
                &scenario("cotra_style.toml"),
                "--out",
                out.to_str().unwrap(),
            ],
            threads,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(["spine.csv", "branches.csv", "summary.csv"].map(|f| read(&out, f)));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn summary_repeats_first_spine_row() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tai(
        &[
            "solve",
            "--config",
            &scenario("metaculus_style.toml"),
            "--out",
            tmp.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success());
    let spine = read(tmp.path(), "spine.csv");
    let summary = read(tmp.path(), "summary.csv");
    let header: Vec<&str> = spine.lines().next().unwrap().split(',').collect();
    let row1: Vec<&str> = spine.lines().nth(1).unwrap().split(',').collect();
    let col = |name: &str| row1[header.iter().position(|h| *h == name).unwrap()];
    let s: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(s[0], "metaculus_style");
    assert_eq!(s[1], "1");
    assert_eq!(
        &s[2..],
        &[
            col("rate_1y"),
            col("rate_30y"),
            col("rental"),
            col("savings"),
            col("wedge")
        ]
    );
    assert_eq!(spine.lines().count(), 31);
    let branches = read(tmp.path(), "branches.csv");
    assert_eq!(
        branches.lines().next().unwrap(),
        "arrival_year,offset,k_hat,c_hat,rental"
    );
    assert_eq!(branches.lines().count(), 1 + 60 * 121);
}

#[test]
fn zero_hazard_rows_are_the_steady_state() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tai(
        &[
            "solve",
            "--config",
            &scenario("zero_hazard.toml"),
            "--out",
            tmp.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let spine = read(tmp.path(), "spine.csv");
    let rows: Vec<&str> = spine.lines().skip(1).map(|l| l.split_once(',').unwrap().1).collect();
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| *r == rows[0]));
    let fields: Vec<&str> = rows[0].split(',').collect();
    // rental, rate_1y and rate_30y all equal 1.018 / 0.99 - 1
    assert_eq!(&fields[4..7], &["0.0282828282828"; 3]);
    assert_eq!(fields[8], "0");
    assert!(read(tmp.path(), "branches.csv").lines().count() == 1);
}

#[test]
fn table_has_one_row_per_source_and_lambda() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tai(
        &[
            "table",
            "--config",
            &scenario("zero_hazard.toml"),
            &scenario("cotra_style.toml"),
            "--out",
            tmp.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = read(tmp.path(), "table1.csv");
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "source_label,lambda,rate_1y_year1,rate_30y_year1");
    assert_eq!(lines.len(), 1 + 2 + 4);
    assert!(lines[1].starts_with("zero_hazard,0,0.0282828282828,"));
    assert!(lines[3].starts_with("cotra_style,0,"));
    assert!(lines[6].starts_with("cotra_style,4,"));
}

#[test]
fn malformed_anchor_line_is_reported_with_its_number() {
    let tmp = tempfile::tempdir().unwrap();
    let anchors = tmp.path().join("anchors.csv");
    fs::write(&anchors, "year,cumulative\n5,0.2\n10,zero point four\n").unwrap();
    let out = tmp.path().join("fit.csv");
    let o = tai(
        &[
            "fit-timeline",
            "--anchors",
            anchors.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("anchors.csv:3"), "{err}");
    assert!(!out.exists());
}

#[test]
fn fit_writes_distribution_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fitted.csv");
    let anchors = crate_dir().join("data").join("metaculus_style_anchors.csv");
    let o = tai(
        &[
            "fit-timeline",
            "--anchors",
            anchors.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--max-n",
            "4",
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dist = tai_core::timeline::read_distribution(&out).unwrap();
    assert_eq!(dist.horizon(), 60);
    assert!((dist.annual_probs().iter().sum::<f64>() + dist.p_never() - 1.0).abs() < 1e-12);
    let report = read(tmp.path(), "fitted.fit.toml");
    assert!(report.contains("loss = "));
    assert!(report.contains("[[anchors]]"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();

    let missing = tmp.path().join("nope.toml");
    assert_eq!(
        tai(&["solve", "--config", missing.to_str().unwrap(), "--out", out], None)
            .status
            .code(),
        Some(4)
    );

    let cfg = write_config(
        tmp.path(),
        "[model]\neta = 0.5\ng_tai = 0.5\n[timeline]\nannual_probs = [0.1]\np_never = 0.9\n",
    );
    let o = tai(&["solve", "--config", &cfg, "--out", out], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("convergence condition"));

    let cfg = write_config(
        tmp.path(),
        "[timeline]\nannual_probs = [0.3]\np_never = 0.7\n[solver]\nmax_iter = 1\n",
    );
    let o = tai(&["solve", "--config", &cfg, "--out", out], None);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!Path::new(out).join("spine.csv").exists());

    let o = tai(
        &["solve", "--config", &scenario("cotra_style.toml"), "--out", out],
        Some("many"),
    );
    assert_eq!(o.status.code(), Some(2));
}
