//! End-to-end CLI contract tests: exit codes, output files, determinism of
//! the fixture generator, failure reporting.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_hypack")
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("CLI binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

#[test]
fn validate_feasible_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let problem = fixtures().join("annulus.json");
    let out = run_in(dir.path(), &["validate", problem.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("feasible"));
    assert!(stdout.contains("mesh invariants: ok"));
}

#[test]
fn validate_rejects_all_boundary_face() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tri.json");
    std::fs::write(
        &path,
        r#"{"mesh": {"vertices": [{"id":0},{"id":1},{"id":2}], "faces": [[0,1,2]]},
            "boundary_k": {"0":1,"1":1,"2":1}, "target_t": {}}"#,
    )
    .unwrap();
    let out = run_in(dir.path(), &["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("boundary"));
}

#[test]
fn validate_reports_infeasible_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wheel.json");
    // hub target exactly pi * degree sits on the polytope boundary
    std::fs::write(
        &path,
        format!(
            r#"{{"mesh": {{"vertices": [{{"id":0}},{{"id":1}},{{"id":2}},{{"id":3}},{{"id":4}}],
                "faces": [[0,1,2],[0,2,3],[0,3,4],[0,4,1]]}},
                "boundary_k": {{"1":1,"2":1,"3":1,"4":1}},
                "target_t": {{"0": {}}}}}"#,
            4.0 * std::f64::consts::PI
        ),
    )
    .unwrap();
    let out = run_in(dir.path(), &["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("infeasible"));
    assert!(stdout.contains("witness subset [0]"));
}

#[test]
fn solve_writes_result_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let problem = fixtures().join("annulus.json");
    let out = run_in(
        dir.path(),
        &["solve", problem.to_str().unwrap(), "--out", "run"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/result.json")).unwrap())
            .unwrap();
    assert_eq!(result["converged"], serde_json::Value::Bool(true));
    assert!(result["residual_inf"].as_f64().unwrap() <= 1e-10);
    let trace = std::fs::read_to_string(dir.path().join("run/trace.csv")).unwrap();
    assert!(trace.starts_with("step,time,residual_inf,energy_monitor,dt\n"));
    assert!(trace.lines().count() >= 2);
}

#[test]
fn solvers_agree_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let problem = fixtures().join("annulus.json");
    let newton = run_in(
        dir.path(),
        &["solve", problem.to_str().unwrap(), "--out", "n"],
    );
    assert_eq!(code(&newton), 0);
    let calabi = run_in(
        dir.path(),
        &[
            "solve",
            problem.to_str().unwrap(),
            "--solver",
            "calabi",
            "--out",
            "c",
        ],
    );
    assert_eq!(code(&calabi), 0);
    let load = |p: &str| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(p)).unwrap()).unwrap()
    };
    let kn = load("n/result.json");
    let kc = load("c/result.json");
    for (id, value) in kn["k"].as_object().unwrap() {
        let a = value.as_f64().unwrap();
        let b = kc["k"][id].as_f64().unwrap();
        assert!(
            ((a - b) / a).abs() < 1e-8,
            "vertex {id}: newton {a} vs calabi {b}"
        );
    }
}

#[test]
fn infeasible_skip_diverges_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"mesh": {"vertices": [{"id":0},{"id":1},{"id":2},{"id":3},{"id":4}],
            "faces": [[0,1,2],[0,2,3],[0,3,4],[0,4,1]]},
            "boundary_k": {"1":1,"2":1,"3":1,"4":1},
            "target_t": {"0": 14.0}}"#,
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &[
            "solve",
            path.to_str().unwrap(),
            "--feasibility",
            "skip",
            "--out",
            "run",
        ],
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    // trace still written, result flags divergence, curvature runs upward
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/result.json")).unwrap())
            .unwrap();
    assert_eq!(result["converged"], serde_json::Value::Bool(false));
    assert_eq!(result["diverged"], serde_json::Value::Bool(true));
    assert!(result["k"]["0"].as_f64().unwrap() > 1e10);
    assert!(dir.path().join("run/trace.csv").exists());
}

#[test]
fn compare_scaled_boundary_holds() {
    let dir = tempfile::tempdir().unwrap();
    let problem = fixtures().join("annulus.json");
    let star = fixtures().join("annulus_star.json");
    let out = run_in(
        dir.path(),
        &[
            "compare",
            problem.to_str().unwrap(),
            star.to_str().unwrap(),
            "--out",
            "cmp",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("cmp/comparison.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["hypothesis_boundary_ordered"], true);
    assert_eq!(report["dual_monotone"], true);
    let summary = &report["report"]["summary"];
    for key in [
        "vertex_violations",
        "area_violations",
        "arc_violations",
        "dual_violations",
        "chain_violations",
    ] {
        assert_eq!(summary[key], 0, "{key} should be zero");
    }
}

#[test]
fn compare_identical_boundaries_tie() {
    let dir = tempfile::tempdir().unwrap();
    let problem = fixtures().join("annulus.json");
    // extract the problem's own boundary as the star file
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&problem).unwrap()).unwrap();
    let star = serde_json::json!({"boundary_k": parsed["boundary_k"]});
    let star_path = dir.path().join("same.json");
    std::fs::write(&star_path, serde_json::to_string(&star).unwrap()).unwrap();
    let out = run_in(
        dir.path(),
        &[
            "compare",
            problem.to_str().unwrap(),
            star_path.to_str().unwrap(),
            "--out",
            "cmp",
        ],
    );
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("cmp/comparison.json")).unwrap(),
    )
    .unwrap();
    let max_ratio = report["max_principle"]["max_ratio"].as_f64().unwrap();
    assert!((max_ratio - 1.0).abs() < 1e-9);
}

#[test]
fn compare_mixed_boundary_reports_hypothesis_violation() {
    let dir = tempfile::tempdir().unwrap();
    let problem = fixtures().join("annulus.json");
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&problem).unwrap()).unwrap();
    let mut boundary = parsed["boundary_k"].as_object().unwrap().clone();
    let mut flip = true;
    for (_, value) in boundary.iter_mut() {
        let v = value.as_f64().unwrap();
        *value = serde_json::json!(if flip { v * 1.4 } else { v * 0.6 });
        flip = !flip;
    }
    let star_path = dir.path().join("mixed.json");
    std::fs::write(
        &star_path,
        serde_json::to_string(&serde_json::json!({"boundary_k": boundary})).unwrap(),
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &[
            "compare",
            problem.to_str().unwrap(),
            star_path.to_str().unwrap(),
            "--out",
            "cmp",
        ],
    );
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("cmp/comparison.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["hypothesis_boundary_ordered"], false);
    // no monotonicity rows may be emitted without the hypothesis
    assert!(report["report"].is_null());
    assert_eq!(
        report["max_principle"]["argmax_contains_boundary"], true,
        "argmax localization must still hold"
    );
}

#[test]
fn layout_renders_selected_faces() {
    let dir = tempfile::tempdir().unwrap();
    let problem = fixtures().join("annulus.json");
    let solve = run_in(
        dir.path(),
        &["solve", problem.to_str().unwrap(), "--out", "run"],
    );
    assert_eq!(code(&solve), 0);
    let out = run_in(
        dir.path(),
        &[
            "layout",
            "run/result.json",
            "--faces",
            "0,3",
            "--out",
            "svg",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("svg/face_0000.svg").exists());
    assert!(dir.path().join("svg/face_0003.svg").exists());
    assert!(!dir.path().join("svg/face_0001.svg").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("cross-validation"));

    // whole batch: one SVG per face
    let out = run_in(dir.path(), &["layout", "run/result.json", "--out", "all"]);
    assert_eq!(code(&out), 0);
    let count = std::fs::read_dir(dir.path().join("all")).unwrap().count();
    assert_eq!(count, 36);
}

#[test]
fn layout_refuses_unconverged_result() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"mesh": {"vertices": [{"id":0},{"id":1},{"id":2},{"id":3},{"id":4}],
            "faces": [[0,1,2],[0,2,3],[0,3,4],[0,4,1]]},
            "boundary_k": {"1":1,"2":1,"3":1,"4":1},
            "target_t": {"0": 14.0}}"#,
    )
    .unwrap();
    let solve = run_in(
        dir.path(),
        &[
            "solve",
            path.to_str().unwrap(),
            "--feasibility",
            "skip",
            "--out",
            "run",
        ],
    );
    assert_eq!(code(&solve), 3);
    let out = run_in(dir.path(), &["layout", "run/result.json", "--out", "svg"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unconverged"));
}

#[test]
fn fixture_generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let out = run_in(
            dir.path(),
            &[
                "fixture",
                "--segments",
                "5",
                "--rings",
                "1",
                "--seed",
                "7",
                "--star-scale",
                "0.5",
                "--out",
                name,
            ],
        );
        assert_eq!(code(&out), 0);
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
    let a_star = std::fs::read(dir.path().join("a_star.json")).unwrap();
    let b_star = std::fs::read(dir.path().join("b_star.json")).unwrap();
    assert_eq!(a_star, b_star);
}

#[test]
fn large_instance_uses_flow_feasibility() {
    // 96 interior vertices: auto feasibility switches to the max-flow
    // certificate, and the solve still converges quickly
    let dir = tempfile::tempdir().unwrap();
    let gen = run_in(
        dir.path(),
        &[
            "fixture",
            "--segments",
            "12",
            "--rings",
            "8",
            "--seed",
            "11",
            "--out",
            "big.json",
        ],
    );
    assert_eq!(code(&gen), 0);
    let validate = run_in(dir.path(), &["validate", "big.json"]);
    assert_eq!(code(&validate), 0);
    assert!(String::from_utf8_lossy(&validate.stdout).contains("(96 interior, 24 boundary)"));
    let solve = run_in(dir.path(), &["solve", "big.json", "--out", "run"]);
    assert_eq!(
        code(&solve),
        0,
        "{}",
        String::from_utf8_lossy(&solve.stderr)
    );
}

#[test]
fn fixture_disk_kind_builds_wheel() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "fixture",
            "--kind",
            "disk",
            "--segments",
            "5",
            "--rings",
            "1",
            "--seed",
            "3",
            "--out",
            "disk.json",
        ],
    );
    assert_eq!(code(&out), 0);
    let validate = run_in(dir.path(), &["validate", "disk.json"]);
    assert_eq!(code(&validate), 0);
    let stdout = String::from_utf8_lossy(&validate.stdout);
    assert!(stdout.contains("(1 interior, 5 boundary)"));
}
