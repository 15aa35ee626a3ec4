use std::path::Path;
use std::process::{Command, Output};

fn shapegraph(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shapegraph"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn annulus(dir: &Path) {
    let out = shapegraph(&["gen", "annulus", "--n", "600", "--seed", "3", "--out", "points.csv"], dir);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn run_writes_graphml() {
    let dir = tempfile::tempdir().unwrap();
    annulus(dir.path());
    let out = shapegraph(
        &["run", "--input", "points.csv", "--out", "g.graphml", "--beta", "200", "--report", "report.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let xml = std::fs::read_to_string(dir.path().join("g.graphml")).unwrap();
    assert!(xml.contains("<graphml") && xml.contains("<node id=\"n0\">"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    for key in [
        "stage_times_ms",
        "n",
        "m_sampled",
        "landmarks",
        "communities",
        "edges_induced",
        "edges_spanning",
        "edges_reinstated",
        "modularity_q",
        "threshold_c",
        "seed",
    ] {
        assert!(report.get(key).is_some(), "report lacks {key}");
    }
    assert_eq!(report["n"], 600);
    assert_eq!(report["m_sampled"], 200);
}

#[test]
fn missing_input_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = shapegraph(&["run", "--input", "missing.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("missing.csv"));
}

#[test]
fn run_without_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = shapegraph(&["run"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = shapegraph(&["run", "--input", "x.csv", "--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_csv_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "0,0\n1\n").unwrap();
    let out = shapegraph(&["run", "--input", "bad.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("bad.csv") && err.contains("line 2"), "{err}");
}

#[test]
fn bad_tearing_mode_fails() {
    let dir = tempfile::tempdir().unwrap();
    annulus(dir.path());
    let out = shapegraph(&["run", "--input", "points.csv", "--tearing", "sometimes"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    annulus(dir.path());
    std::fs::write(dir.path().join("cfg.txt"), "# small run\nbeta = 100\nseed = 5\nm-frac = 1/2\n").unwrap();
    let out = shapegraph(
        &["run", "--input", "points.csv", "--config", "cfg.txt", "--seed", "9", "--report", "r.json", "--out", "g.json"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 9);
    assert_eq!(report["m_sampled"], 300);
    assert_eq!(report["walks"], 100 * report["landmarks"].as_u64().unwrap());
}

#[test]
fn binary_labels_dot_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = shapegraph(
        &["gen", "blobs", "--n", "900", "--d", "5", "--centers", "3", "--separation", "30", "--out", "blobs.bin"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let out = shapegraph(
        &["run", "--input", "blobs.bin", "--beta", "200", "--out", "g.json", "--dump-weights", "w.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(std::fs::read_to_string(dir.path().join("w.csv")).unwrap().lines().count() > 0);

    let out = shapegraph(&["run", "--input", "blobs.bin", "--beta", "200", "--out", "g.dot"], dir.path());
    assert!(out.status.success());
    let dot = std::fs::read_to_string(dir.path().join("g.dot")).unwrap();
    assert!(dot.starts_with("graph ") && dot.contains("dominant_label"));

    let out = shapegraph(&["metrics", "--input", "blobs.bin", "--summary", "g.json"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let m: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(m["components"], 3);
    assert!(m["segments"].as_u64().unwrap() >= 3);
    let cos = m["avg_intra_segment_cosine"].as_f64().unwrap();
    assert!((-1.0..=1.0).contains(&cos));
}

#[test]
fn bench_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = shapegraph(&["bench", "--sizes", "400,800", "--d", "5"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("n,seconds,knn_s,walks_s,louvain_s,tearing_s,landmarks,communities"));
    assert_eq!(lines.count(), 2);
    assert!(stderr(&out).contains("slope"));
}
