use std::path::Path;
use std::process::{Command, Output};

fn fairalloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairalloc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SYMMETRIC: &str = r#"{"alpha": 1.0,
  "links": [{"id": 0, "capacity": 2.0}],
  "routes": [{"id": 0, "weight": 1.0, "links": [0]}, {"id": 1, "weight": 1.0, "links": [0]}]}"#;

#[test]
fn gen_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let part = dir.path().join("p.json");
    for out in [&a, &b] {
        let o = fairalloc(&[
            "gen",
            "--seed",
            "4",
            "--nodes",
            "12",
            "--links",
            "20",
            "--routes",
            "15",
            "--out",
            path(out),
            "--domains",
            "3",
            "--partition-out",
            path(&part),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let inst = alphafair::Instance::load(&a).unwrap();
    let partition = alphafair::Partition::load(&inst, &part).unwrap();
    assert_eq!(partition.n_domains(), 3);
}

#[test]
fn solve_symmetric_instance() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("sym.json");
    std::fs::write(&inst, SYMMETRIC).unwrap();
    let trace = dir.path().join("trace.csv");
    let sol = dir.path().join("sol.json");
    let o = fairalloc(&[
        "solve",
        "--instance",
        path(&inst),
        "--out",
        path(&trace),
        "--solution",
        path(&sol),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let x: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6);
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("run,iteration,event,algorithm,"));
    let gap: f64 = stderr(&o)
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix("gap="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(gap < 1e-6);
}

#[test]
fn lagr_with_time_budget_reports_gap() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("sym.json");
    std::fs::write(&inst, SYMMETRIC).unwrap();
    let o = fairalloc(&[
        "solve",
        "--instance",
        path(&inst),
        "--algorithm",
        "lagr",
        "--time-budget",
        "0.2",
        "--out",
        path(&dir.path().join("t.csv")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("gap="));
    assert!(stderr(&o).contains("best_feasible_gap="));
}

#[test]
fn dynamic_traces_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    let o = fairalloc(&[
        "gen",
        "--seed",
        "8",
        "--nodes",
        "10",
        "--links",
        "18",
        "--routes",
        "20",
        "--out",
        path(&inst),
    ]);
    assert!(o.status.success());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = fairalloc(&[
            "dynamic",
            "--instance",
            path(&inst),
            "--domains",
            "2",
            "--amplitude",
            "0.1,0.6",
            "--events",
            "4",
            "--iters-per-event",
            "5",
            "--seed",
            "3",
            "--out",
            path(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn sweep_and_loadcurve_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    assert!(fairalloc(&[
        "gen",
        "--seed",
        "2",
        "--nodes",
        "8",
        "--links",
        "12",
        "--routes",
        "10",
        "--out",
        path(&inst)
    ])
    .status
    .success());
    let sweep = dir.path().join("sweep.csv");
    let o = fairalloc(&[
        "sweep-lambda",
        "--instance",
        path(&inst),
        "--grid",
        "0.1,1,10",
        "--out",
        path(&sweep),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&sweep).unwrap().lines().count(), 1 + 3 + 1);

    let curve = dir.path().join("curve.csv");
    let o = fairalloc(&[
        "loadcurve",
        "--instance",
        path(&inst),
        "--instance",
        path(&inst),
        "--out",
        path(&curve),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&curve).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], rows[1]);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fairalloc(&["solve", "--algorithm", "simplex"]).status.code(), Some(2));
    assert_eq!(fairalloc(&["solve", "--lambda", "-1"]).status.code(), Some(2));
    assert_eq!(fairalloc(&["frobnicate"]).status.code(), Some(2));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"alpha": 1.0, "links": [], "routes": [], "extra": 1}"#).unwrap();
    let o = fairalloc(&["solve", "--instance", path(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));

    let missing = dir.path().join("missing.json");
    assert_eq!(
        fairalloc(&["solve", "--instance", path(&missing)]).status.code(),
        Some(2)
    );

    let o = fairalloc(&["dynamic", "--amplitude", "1.5", "--events", "1"]);
    assert_eq!(o.status.code(), Some(2));
}
