use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn svgraph(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svgraph"))
        .args(args)
        .current_dir(dir)
        .env_remove("SVG_JOBS")
        .output()
        .expect("spawn svgraph")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = svgraph(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stats(dir: &Path, graph: &str) -> Value {
    let text = fs::read_to_string(dir.join(format!("{graph}.stats.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Rows of an eval CSV as (header → value) lookups.
fn eval_rows(csv: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = csv.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

fn field<'a>(row: &'a [(String, String)], key: &str) -> &'a str {
    &row.iter().find(|(k, _)| k == key).unwrap().1
}

#[test]
fn build_writes_graph_and_stats() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(dir.path(), &["build", "--synthetic", "100,2,7", "--kernel", "euc,1.0", "--method", "svg", "-o", "g.txt"]);
    assert!(stdout.contains("build time"));
    let text = fs::read_to_string(dir.path().join("g.txt")).unwrap();
    assert_eq!(text.lines().next(), Some("100"));
    assert_eq!(text.lines().count(), 101);
    let s = stats(dir.path(), "g.txt");
    assert_eq!(s["n"], 100);
    assert_eq!(s["method"], "svg");
    assert!(s["degree"]["mean"].as_f64().unwrap() > 1.0);
}

#[test]
fn degree_bounds_are_respected() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["build", "--synthetic", "100,4,1", "--method", "svg-l0", "--M", "8", "-o", "l0.txt"]);
    assert!(stats(dir.path(), "l0.txt")["degree"]["max"].as_u64().unwrap() <= 8);
    ok(
        dir.path(),
        &["build", "--synthetic", "100,4,1", "--kernel", "euc,1", "--method", "mrng", "--pool", "knn,2", "--M", "8", "-o", "t.txt"],
    );
    let s = stats(dir.path(), "t.txt");
    assert!(s["degree"]["max"].as_u64().unwrap() <= 8);
    assert_eq!(s["pool"], "knn:2");
}

#[test]
fn eval_complete_and_kernel_rule_graphs() {
    let dir = TempDir::new().unwrap();
    let csv = ok(
        dir.path(),
        &["eval", "--synthetic", "40,3,2", "--kernel", "euc,1", "--method", "complete", "--search", "greedy", "--search", "beam,2", "--mode", "fixed"],
    );
    let rows = eval_rows(&csv);
    assert_eq!(rows.len(), 2);
    assert_eq!(
        csv.lines().next().unwrap(),
        "method,d,n,sigma,M,L,mode,recall,mean_kernel_evals"
    );
    for (row, l) in rows.iter().zip(["1", "2"]) {
        assert_eq!(field(row, "recall"), "1");
        assert_eq!(field(row, "L"), l);
        assert_eq!(field(row, "mode"), "fixed");
    }
    let csv = ok(dir.path(), &["eval", "--synthetic", "50,2,3", "--kernel", "euc,0.5", "--method", "kernel-rule"]);
    assert_eq!(field(&eval_rows(&csv)[0], "recall"), "1");
}

#[test]
fn eval_of_saved_graph_matches_in_memory_build() {
    let dir = TempDir::new().unwrap();
    let common = ["--synthetic", "80,3,4", "--kernel", "euc,median"];
    let mut build = vec!["build"];
    build.extend(common);
    build.extend(["--method", "svg-l0", "--M", "6", "-o", "svg.txt"]);
    ok(dir.path(), &build);
    let mut from_file = vec!["eval"];
    from_file.extend(common);
    from_file.extend(["--graph", "svg.txt", "--mode", "random,5"]);
    let mut in_memory = vec!["eval"];
    in_memory.extend(common);
    in_memory.extend(["--method", "svg-l0", "--M", "6", "--mode", "random,5"]);
    let a = eval_rows(&ok(dir.path(), &from_file));
    let b = eval_rows(&ok(dir.path(), &in_memory));
    assert_eq!(field(&a[0], "recall"), field(&b[0], "recall"));
    assert_eq!(field(&a[0], "mean_kernel_evals"), field(&b[0], "mean_kernel_evals"));
    assert_eq!(field(&a[0], "method"), "svg");
}

#[test]
fn eval_appends_to_output_file() {
    let dir = TempDir::new().unwrap();
    for seed in ["1", "2"] {
        ok(
            dir.path(),
            &["eval", "--synthetic", &format!("30,2,{seed}"), "--method", "mrng", "-o", "rows.csv"],
        );
    }
    let text = fs::read_to_string(dir.path().join("rows.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(text.matches("method,").count(), 1);
}

#[test]
fn search_reports_terminals() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["build", "--synthetic", "60,2,0", "--kernel", "euc,1", "--method", "kernel-rule", "-o", "k.txt"]);
    let out = ok(
        dir.path(),
        &["search", "--synthetic", "60,2,0", "--kernel", "euc,1", "--graph", "k.txt", "--query", "5,17,42"],
    );
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "query,terminal,hops,kernel_evals");
    for (line, q) in lines[1..].iter().zip(["5", "17", "42"]) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], q);
        assert_eq!(cols[1], q);
    }
}

#[test]
fn audit_writes_reports() {
    let dir = TempDir::new().unwrap();
    let out = ok(
        dir.path(),
        &["audit", "--synthetic", "40,2,1", "--kernel", "euc,1.0", "--delaunay-check", "-o", "rep"],
    );
    assert!(out.contains("0 violations"), "{out}");
    assert!(out.contains("delaunay subset:"));
    let hist = fs::read_to_string(dir.path().join("rep_hist.csv")).unwrap();
    assert_eq!(hist.lines().count(), 21);
    assert_eq!(hist.lines().next(), Some("bin,lower,upper,count"));
    let total: u64 = hist
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 40);
    let json: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("rep.json")).unwrap()).unwrap();
    assert_eq!(json["n"], 40);
    assert!(json["delaunay"]["checked_edges"].as_u64().unwrap() > 0);
    assert!(json["epsilon_general"].as_array().unwrap().iter().all(|e| e.as_f64().unwrap() >= 0.0));
    let csv = fs::read_to_string(dir.path().join("rep.csv")).unwrap();
    assert!(csv.starts_with("key,value\n"));
}

#[test]
fn sweep_fig8_is_deterministic_across_job_counts() {
    let dir = TempDir::new().unwrap();
    let args = ["sweep", "fig8", "--seeds", "2", "--n", "20", "--dims", "2,4"];
    let mut one = args.to_vec();
    one.extend(["--jobs", "1", "-o", "a.csv"]);
    let mut two = args.to_vec();
    two.extend(["--jobs", "3", "-o", "b.csv"]);
    ok(dir.path(), &one);
    ok(dir.path(), &two);
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let recall_rows = text.lines().filter(|l| l.contains(",recall,")).count();
    assert_eq!(recall_rows, 2 * 4 * 2);
    assert!(text.starts_with("figure,method,d,n,sigma,M,r,L,mode,metric,mean,std,runs\n"));
}

#[test]
fn sweep_respects_jobs_environment_variable() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_svgraph"))
        .args(["sweep", "fig6", "--seeds", "2", "--n", "20", "--dims", "2,3", "-o", "f6.csv"])
        .env("SVG_JOBS", "0")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--jobs"));
    ok(dir.path(), &["sweep", "fig6", "--seeds", "2", "--n", "20", "--dims", "2,3", "-o", "f6.csv"]);
    let text = fs::read_to_string(dir.path().join("f6.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 3);
}

#[test]
fn sweep_fig9_and_fig11_on_small_inputs() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["sweep", "fig9", "--seeds", "2", "--n", "30", "--dims", "2", "-o", "f9.csv"]);
    let f9 = fs::read_to_string(dir.path().join("f9.csv")).unwrap();
    for method in ["mrng", "mrng-truncated", "svg-l0", "svg-l0-incremental"] {
        assert_eq!(f9.lines().filter(|l| l.starts_with(&format!("fig9,{method},"))).count(), 2);
    }

    let data: String = (0..40)
        .map(|i| format!("{},{},{}\n", (i * 7 % 40) as f64 / 40.0, (i * 13 % 40) as f64 / 40.0, (i % 5) as f64 / 5.0))
        .collect();
    fs::write(dir.path().join("pts.csv"), data).unwrap();
    ok(dir.path(), &["sweep", "fig11", "--data", "pts.csv", "-o", "f11.csv"]);
    let f11 = fs::read_to_string(dir.path().join("f11.csv")).unwrap();
    assert_eq!(f11.lines().count(), 1 + 3 * 7 * 2);
    assert!(f11.lines().skip(1).all(|l| l.contains(",random:0,")));
}

#[test]
fn convert_round_trips_between_formats() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("a.csv"), "0.5,1.25\n-2,3\n").unwrap();
    ok(dir.path(), &["convert", "a.csv", "b.fvecs"]);
    assert_eq!(fs::metadata(dir.path().join("b.fvecs")).unwrap().len(), 2 * (4 + 2 * 4));
    ok(dir.path(), &["convert", "b.fvecs", "c.csv"]);
    let back = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    let values: Vec<f64> = back
        .lines()
        .flat_map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .collect();
    assert_eq!(values, vec![0.5, 1.25, -2.0, 3.0]);
}

#[test]
fn head_and_sample_subsets() {
    let dir = TempDir::new().unwrap();
    let rows: String = (0..50).map(|i| format!("{i},{}\n", i * i)).collect();
    fs::write(dir.path().join("d.csv"), rows).unwrap();
    ok(dir.path(), &["build", "--data", "d.csv", "--head", "10", "--method", "mrng", "-o", "h.txt"]);
    assert_eq!(stats(dir.path(), "h.txt")["n"], 10);
    ok(dir.path(), &["build", "--data", "d.csv", "--sample", "20", "--seed", "3", "--method", "mrng", "-o", "s.txt"]);
    assert_eq!(stats(dir.path(), "s.txt")["n"], 20);
}

#[test]
fn errors_exit_nonzero_with_context() {
    let dir = TempDir::new().unwrap();
    let cases: [(&[&str], &str); 5] = [
        (&["build", "--synthetic", "10,2,0", "--kernel", "cosine,1"], "cosine"),
        (&["build", "--synthetic", "10,2"], "n,d,seed"),
        (&["build", "--data", "missing.csv"], "missing.csv"),
        (&["build", "--synthetic", "10,2,0", "--method", "svg", "--M", "4"], "svg-l0"),
        (&["eval", "--synthetic", "10,2,0", "--method", "mrng", "--pool", "knn,2"], "--M"),
    ];
    for (args, needle) in cases {
        let out = svgraph(dir.path(), args);
        assert!(!out.status.success(), "{args:?} should fail");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{args:?}: {err}");
    }
    ok(dir.path(), &["build", "--synthetic", "10,2,0", "-o", "small.txt"]);
    let out = svgraph(dir.path(), &["eval", "--synthetic", "12,2,0", "--graph", "small.txt"]);
    assert!(!out.status.success());
}
