use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nodalflow"))
        .args(args)
        .current_dir(cwd)
        .env_remove("NODALFLOW_THREADS")
        .output()
        .unwrap()
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn generate(dir: &Path, file: &str, family: &str, params: &str) {
    let out = run(
        &[
            "generate", "--family", family, "--params", params, "-o", file,
        ],
        dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn generated_file_is_canonical() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "generate",
            "--family",
            "er",
            "--params",
            "12,0.3",
            "--seed",
            "3",
            "--connected",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed = nodalflow::io::parse_graph(&text).unwrap();
    assert_eq!(nodalflow::io::serialize_graph(&parsed), text);
    let meta = parsed.meta.unwrap();
    assert_eq!(meta.family, "er");
    assert!(meta.attempts.unwrap() >= 1);
    assert!(parsed.graph.is_connected());
}

#[test]
fn nodal_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "gp.json", "petersen", "7,3");
    let out = run(&["nodal", "--graph", "gp.json", "--k", "7"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    assert_eq!(v["nu"], 3);
    assert_eq!(v["nu_combinatorial"], 3);
    assert_eq!(v["deficiency"], 4);
}

#[test]
fn assumption_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "c5.json", "cycle", "5");
    generate(dir.path(), "i7.json", "interval", "7");

    let lenient = run(&["nodal", "--graph", "c5.json", "--k", "2"], dir.path());
    assert_eq!(lenient.status.code(), Some(0));
    assert!(!json_stdout(&lenient)["warnings"]
        .as_array()
        .unwrap()
        .is_empty());

    let strict = run(
        &["nodal", "--graph", "c5.json", "--k", "2", "--strict"],
        dir.path(),
    );
    assert_eq!(strict.status.code(), Some(3));
    assert_eq!(json_stdout(&strict)["simple"], false);

    let zero = run(&["nodal", "--graph", "i7.json", "--k", "2"], dir.path());
    assert_eq!(zero.status.code(), Some(3));
    assert_eq!(json_stdout(&zero)["nowhere_zero"], false);

    let fixed = run(
        &[
            "nodal",
            "--graph",
            "i7.json",
            "--k",
            "2",
            "--perturb",
            "--perturb-magnitude",
            "4e-4",
        ],
        dir.path(),
    );
    assert_eq!(fixed.status.code(), Some(0));
    assert_eq!(json_stdout(&fixed)["nu"], 2);
}

#[test]
fn bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"n\":2,\"edges\":[[0,0,1]]}").unwrap();
    for args in [
        &["generate", "--family", "moebius", "--params", "3"][..],
        &["generate", "--family", "petersen", "--params", "7,7"],
        &["nodal", "--graph", "missing.json", "--k", "1"],
        &["nodal", "--graph", "bad.json", "--k", "1"],
    ] {
        assert_eq!(run(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
    generate(dir.path(), "k5.json", "complete", "5");
    assert_eq!(
        run(&["nodal", "--graph", "k5.json", "--k", "9"], dir.path())
            .status
            .code(),
        Some(2)
    );
    let threads = Command::new(env!("CARGO_BIN_EXE_nodalflow"))
        .args(["nodal", "--graph", "k5.json", "--k", "2"])
        .current_dir(dir.path())
        .env("NODALFLOW_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn edge_flow_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "grid.json", "grid", "7,5");
    let out = run(
        &[
            "flow",
            "--method",
            "edge",
            "--graph",
            "grid.json",
            "--k",
            "5",
            "--steps",
            "50",
            "--out",
            "e",
            "--svg",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("e.json")).unwrap()).unwrap();
    assert_eq!(summary, json_stdout(&out));
    assert_eq!(summary["converged_count"], 3);
    assert_eq!(summary["crossings_below"], 2);
    let csv = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 36);
    assert!(csv.lines().count() >= 51);
    assert!(std::fs::read_to_string(dir.path().join("e.svg"))
        .unwrap()
        .contains("<polyline"));
}

#[test]
fn vertex_flow_marks_ghost_branches() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "k5.json", "complete", "5");
    let out = run(
        &[
            "flow", "--method", "vertex", "--graph", "k5.json", "--k", "2", "--steps", "80",
            "--out", "v",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    assert_eq!(v["nu"], 2);
    let origins = v["branch_origins"].as_array().unwrap();
    assert_eq!(origins.len(), 5 + 4);
    assert!(origins.iter().filter(|o| *o == "ghost").count() >= 4);
}

#[test]
fn scan_and_dirichlet() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "c5.json", "cycle", "5");
    let out = run(
        &["scan", "--graph", "c5.json", "--plot", "s.svg"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("1\t0.000000000000\t1\t"));
    assert!(dir.path().join("s.svg").exists());

    let d = run(&["dirichlet", "--graph", "c5.json", "--k", "2"], dir.path());
    let v = json_stdout(&d);
    assert_eq!(v["d_components"], 2);
    assert_eq!(v["multiplicity"], 2);
    assert_eq!(v["dirichlet_eigenvalues"].as_array().unwrap().len(), 5);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "gp.json", "petersen", "7,3");
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = Command::new(env!("CARGO_BIN_EXE_nodalflow"))
            .args([
                "flow", "--method", "edge", "--graph", "gp.json", "--k", "7", "--steps", "40",
                "--out", threads,
            ])
            .current_dir(dir.path())
            .env("NODALFLOW_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        outputs.push((
            out.stdout,
            std::fs::read(dir.path().join(format!("{threads}.csv"))).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}
