use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use splpo::report::RunReport;

const T1: &str = "SPLPO 1\n2 2\n3 1\n2 5\n4 2\n1 2\n2 1\n";

fn splpo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splpo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn t1(dir: &Path) -> String {
    let p = dir.join("t1.splpo");
    fs::write(&p, T1).unwrap();
    p.to_string_lossy().into_owned()
}

fn one_row(out: &Output) -> splpo::report::ReportRow {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rows = RunReport::from_csv(&String::from_utf8_lossy(&out.stdout)).unwrap().rows;
    assert_eq!(rows.len(), 1);
    rows.pop().unwrap()
}

#[test]
fn t1_exact_hc_and_ada() {
    let dir = tempfile::tempdir().unwrap();
    let inst = t1(dir.path());
    let sol = dir.path().join("sol.json");

    let out = splpo(&["solve", &inst, "-a", "exact", "--out", sol.to_str().unwrap()]);
    let row = one_row(&out);
    assert_eq!(row.best_ub, Some(8.0));
    assert_eq!(row.status, "optimal");
    let doc: Value = serde_json::from_str(&fs::read_to_string(&sol).unwrap()).unwrap();
    assert_eq!(doc["objective"], 8.0);
    assert_eq!(doc["provenance"]["algorithm"], "exact");

    assert_eq!(one_row(&splpo(&["solve", &inst, "-a", "hc"])).best_ub, Some(8.0));
    assert_eq!(one_row(&splpo(&["solve", &inst, "-a", "brute"])).best_ub, Some(8.0));

    let row = one_row(&splpo(&["solve", &inst, "-a", "ada"]));
    assert_eq!(row.best_ub, Some(8.0));
    assert!(row.lower_bound.unwrap() <= 8.0);
}

#[test]
fn report_rows_append() {
    let dir = tempfile::tempdir().unwrap();
    let inst = t1(dir.path());
    let report = dir.path().join("r.csv");
    for alg in ["hc", "hs", "sg"] {
        let out = splpo(&["solve", &inst, "-a", alg, "--report", report.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let rows = RunReport::from_csv(&fs::read_to_string(&report).unwrap()).unwrap().rows;
    let algs: Vec<&str> = rows.iter().map(|r| r.algorithm.as_str()).collect();
    assert_eq!(algs, ["hc", "hs", "sg"]);
    assert!(rows[2].lower_bound.unwrap() <= 8.0 + 1e-9);
}

#[test]
fn generate_is_deterministic_and_named() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = splpo(&["generate", "-m", "9", "-n", "7", "--seed", "3", "--count", "2", "--out-dir", d.path().to_str().unwrap()]);
        assert!(out.status.success());
    }
    for k in 1..=2 {
        let name = format!("a9_7_{k}.splpo");
        let x = fs::read(a.path().join(&name)).unwrap();
        assert_eq!(x, fs::read(b.path().join(&name)).unwrap());
    }
    assert_ne!(
        fs::read(a.path().join("a9_7_1.splpo")).unwrap(),
        fs::read(a.path().join("a9_7_2.splpo")).unwrap()
    );
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(splpo(&["generate", "-m", "0", "-n", "3", "--out-dir", d]).status.code(), Some(2));
    assert_eq!(splpo(&["bench", &format!("{d}/none_*.splpo")]).status.code(), Some(2));
    let inst = t1(dir.path());
    assert_eq!(splpo(&["solve", &inst, "-a", "nope"]).status.code(), Some(2));
    assert_eq!(splpo(&["solve", &inst, "-a", "ada", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(splpo(&["solve", &inst, "-a", "hc", "--ps", "2"]).status.code(), Some(2));
}

#[test]
fn node_limit_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(splpo(&["generate", "-m", "30", "-n", "20", "--out-dir", d]).status.success());
    let inst = format!("{d}/a30_20_1.splpo");
    let out = splpo(&["solve", &inst, "-a", "exact", "--node-limit", "1"]);
    assert_eq!(out.status.code(), Some(4));
    let row = RunReport::from_csv(&String::from_utf8_lossy(&out.stdout)).unwrap().rows.remove(0);
    assert_eq!(row.status, "incomplete");
    assert!(row.lower_bound.unwrap() <= row.best_ub.unwrap());
}

#[test]
fn bench_orders_rows_and_hc_beats_hs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = splpo(&["generate", "-m", "14", "-n", "10", "--seed", "11", "--count", "4", "--out-dir", d]);
    assert!(out.status.success());
    let csv = dir.path().join("bench.csv");
    let out = splpo(&["bench", &format!("{d}/a14_10_*.splpo"), "-a", "hc,hs,exact", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = RunReport::from_csv(&fs::read_to_string(&csv).unwrap()).unwrap().rows;
    assert_eq!(rows.len(), 12);
    for (k, chunk) in rows.chunks(3).enumerate() {
        assert!(chunk.iter().all(|r| r.instance == format!("a14_10_{}", k + 1)));
        let gap = |i: usize| chunk[i].gap_o_pct.unwrap();
        assert_eq!(gap(2), 0.0);
        assert!(gap(0) <= gap(1) && gap(0) >= 0.0);
    }

    let optima = dir.path().join("optima.txt");
    let lines: String = rows
        .chunks(3)
        .map(|c| format!("{} {}\n", c[2].instance, c[2].best_ub.unwrap()))
        .collect();
    fs::write(&optima, lines).unwrap();
    let out = splpo(&["bench", &format!("{d}/a14_10_*.splpo"), "-a", "ada", "--optima", optima.to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success());
    let report = RunReport::from_json(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert!(report.rows.iter().all(|r| r.gap_o_pct.unwrap() >= 0.0));
}
