use std::path::Path;
use std::process::{Command, Output};

use auxbound::localization::read_rle;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auxbound")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn bound_csv_point_initial_set() {
    let o = run(&["bound", "--builtin", "nonautonomous2d", "--x0", "point", "--degree", "2,4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "problem,degree,iteration,status,lambda,primal_objective,dual_objective,relative_gap,max_identity_residual,iterations,seconds"
    );
    assert_eq!(lines.len(), 3);
    let row: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(row[1], "4");
    assert_eq!(row[3], "Optimal");
    let lambda: f64 = row[4].parse().unwrap();
    assert!((lambda - 0.41381042).abs() < 2e-4);
    let digits = row[4].trim_start_matches("0.").len();
    assert_eq!(digits, 9, "{}", row[4]);
}

#[test]
fn bound_json_feeds_check_and_localize() {
    let dir = tempfile::tempdir().unwrap();
    let bound_path = dir.path().join("bound.json");
    let o = run(&[
        "bound",
        "--builtin",
        "unstableFocus2d",
        "--time-independent",
        "--degree",
        "4",
        "--format",
        "json",
        "--out",
        bound_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let rows: Value = serde_json::from_str(&std::fs::read_to_string(&bound_path).unwrap()).unwrap();
    let lambda = rows[0]["lambda"].as_f64().unwrap();
    assert!((lambda - 2.194343).abs() < 1e-3 * 2.194343);
    assert!(rows[0]["v"].is_string());

    let o = run(&[
        "check",
        "--builtin",
        "unstableFocus2d",
        "--v-file",
        bound_path.to_str().unwrap(),
        "--box",
        "-1:1,-1:1",
    ]);
    assert_eq!(code(&o), 0);
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["pass"], Value::Bool(true));
    assert_eq!(report["grid_size"].as_u64(), Some(441));

    let prefix = dir.path().join("loc");
    let o = run(&[
        "localize",
        "--builtin",
        "unstableFocus2d",
        "--v-file",
        bound_path.to_str().unwrap(),
        "--delta",
        "0.3",
        "--eps",
        "0.05",
        "--box",
        "-1:1,-1:1",
        "--res",
        "31",
        "--out",
        prefix.to_str().unwrap(),
        "--format",
        "both",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["nodes"].as_u64(), Some(961));
    for suffix in ["s", "r", "sr"] {
        let lsg = dir.path().join(format!("loc_{suffix}.lsg"));
        let set = read_rle(std::fs::File::open(&lsg).unwrap()).unwrap();
        assert_eq!(set.count() as u64, summary[suffix]["members"].as_u64().unwrap());
        let csv = std::fs::read_to_string(dir.path().join(format!("loc_{suffix}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 962);
        let ones = csv.lines().skip(1).filter(|l| l.ends_with(",1")).count();
        assert_eq!(ones, set.count());
    }
    assert!(summary["sr"]["members"].as_u64() <= summary["s"]["members"].as_u64());
}

#[test]
fn check_rejects_invalid_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let v = dir.path().join("v.txt");
    std::fs::write(&v, "x1").unwrap();
    let o = run(&["check", "--builtin", "unstableFocus2d", "--v-file", v.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["pass"], Value::Bool(false));
}

#[test]
fn usage_and_input_errors_exit_1() {
    assert_eq!(code(&run(&["bound", "--builtin", "nope", "--degree", "2"])), 1);
    assert_eq!(code(&run(&["bound", "--degree", "2"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);

    let dir = tempfile::tempdir().unwrap();
    let v = dir.path().join("v.txt");
    std::fs::write(&v, "x1^2 + x2^2").unwrap();
    let o = run(&[
        "localize",
        "--builtin",
        "unstableFocus2d",
        "--v-file",
        v.to_str().unwrap(),
        "--delta",
        "0.1",
        "--box",
        "-1:1,-1:1",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--lambda"));
    assert!(!dir.path().join("x_s.csv").exists());

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"variables":["x"],"dynamics":["x^-1"],"observable":"x","horizon":{"type":"infinite"}}"#,
    )
    .unwrap();
    let o = run(&["bound", "--problem", bad.to_str().unwrap(), "--degree", "2"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("byte 2"));
}

#[test]
fn solver_trouble_exits_3() {
    let o = run(&["bound", "--builtin", "vanDerPol", "--time-independent", "--degree", "8", "--gap-tol", "1e-10"]);
    assert_eq!(code(&o), 3);
    assert!(!stdout(&o).contains("Optimal"));
}

#[test]
fn problem_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["problem", "--builtin", "nonautonomous2d", "--x0", "circle"]);
    assert_eq!(code(&o), 0);
    let path = dir.path().join("p.json");
    std::fs::write(&path, stdout(&o)).unwrap();
    let again = run(&["problem", "--problem", path.to_str().unwrap()]);
    assert_eq!(stdout(&again), stdout(&o));

    let from_file = run(&["bound", "--problem", path.to_str().unwrap(), "--degree", "4"]);
    let from_builtin = run(&["bound", "--builtin", "nonautonomous2d", "--x0", "circle", "--degree", "4"]);
    let lambda = |o: &Output| stdout(o).lines().nth(1).unwrap().split(',').nth(4).unwrap().to_string();
    assert_eq!(lambda(&from_file), lambda(&from_builtin));
}

#[test]
fn lower_bound_and_trajectory_export() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv");
    let o = run(&[
        "lower",
        "--builtin",
        "quadratic1d",
        "--x0",
        "-0.5",
        "--horizon",
        "1",
        "--trajectory-out",
        traj.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let value: f64 = row[1].parse().unwrap();
    assert!((value + 1.0 / 3.0).abs() < 1e-8);
    let csv = std::fs::read_to_string(Path::new(&traj)).unwrap();
    assert_eq!(csv.lines().next(), Some("t,x,phi"));
}

#[test]
fn sdp_dump_matches_assembled_problem() {
    use auxbound::bounds::{build_sdp, BoundOptions};
    use auxbound::sdp::read_sparse;
    use auxbound::system::{builtin_problem, BuiltinParams, InitialKind};

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.sdp");
    let o = run(&[
        "bound",
        "--builtin",
        "nonautonomous2d",
        "--x0",
        "point",
        "--degree",
        "4",
        "--sdp-dump",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let dumped = read_sparse(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    let spec = builtin_problem(
        "nonautonomous2d",
        &BuiltinParams {
            initial: Some(InitialKind::Point),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(dumped, build_sdp(&spec, &BoundOptions::new(4)).unwrap().sdp);
}
