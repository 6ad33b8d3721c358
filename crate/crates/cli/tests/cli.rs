use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use varem::io;
use varem::{Trajectory, Vec3};

fn varem(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varem"))
        .current_dir(dir)
        .args(args)
        .env_remove("VAREM_THREADS")
        .env_remove("VAREM_OUT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn put(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stationary(x: f64, start: f64, end: f64) -> String {
    io::trajectory_to_json(&Trajectory::stationary(Vec3::new(x, 0.0, 0.0), start, end).unwrap())
}

/// Particles at rest at x = 0 and x = 2, cut at t_O1 = 0 and t_L2 = 4. The
/// interaction integrand is 1/4 everywhere; the retarded windows add up to
/// length 6 and the advanced ones to length 2.
fn static_problem(dir: &Path) {
    put(dir, "a.json", &stationary(0.0, -10.0, 40.0));
    put(dir, "b.json", &stationary(2.0, -10.0, 40.0));
    let cfg = json!({
        "masses": [1.0, 1.0],
        "boundary": { "traj1": "a.json", "traj2": "b.json", "t_o1": 0.0, "t_l2": 4.0 }
    });
    put(dir, "static.json", &cfg.to_string());
}

#[test]
fn orbit_solve_verify_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = varem(dir, &["orbit", "10", "1", "1", "--delays", "2", "--out", "orbit"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = stdout_json(&out);
    let radii = summary["radii"].as_array().unwrap();
    assert_eq!(radii[0], radii[1]);

    let out = varem(dir, &["solve", "orbit/problem.json", "--out", "solved"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = stdout_json(&out);
    assert_eq!(report["converged"], true);
    for key in ["max_el_residual", "max_dp", "max_de", "max_lightcone_residual"] {
        let v = report["report"][key].as_f64().unwrap();
        assert!(v < 1e-6, "{key} = {v:e}");
    }
    for name in ["traj1.json", "traj2.json", "traj1.csv", "traj2.csv", "series.csv", "report.json"] {
        assert!(dir.join("solved").join(name).is_file(), "missing {name}");
    }

    let out = varem(
        dir,
        &["verify", "solved/traj1.json", "solved/traj2.json", "--config", "orbit/problem.json"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn orbit_summary_for_hydrogen_like_masses_is_keplerian() {
    let tmp = tempfile::tempdir().unwrap();
    let out = varem(tmp.path(), &["orbit", "1000", "1", "1836"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = stdout_json(&out);
    // Kepler: ω² ℓ³ = (m1 + m2)/(m1 m2) for unit charges
    let kepler = ((1.0 + 1836.0) / 1836.0 / 1e9_f64).sqrt();
    let omega = s["omega"].as_f64().unwrap();
    assert!((omega / kepler - 1.0).abs() < 0.01, "{omega} vs {kepler}");
    assert!(tmp.path().join("traj1.json").is_file() && tmp.path().join("problem.json").is_file());
}

#[test]
fn orbit_below_rmin_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = varem(tmp.path(), &["orbit", "0.5", "1", "1", "--rmin", "1"]);
    assert_eq!(code(&out), 64);
    assert!(stderr(&out).contains("r_min"));
}

#[test]
fn malformed_problem_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    put(tmp.path(), "bad.json", "{ \"masses\": [1.0, 1.0], ");
    let out = varem(tmp.path(), &["solve", "bad.json"]);
    assert_eq!(code(&out), 64);
    assert!(stderr(&out).contains("bad.json"), "{}", stderr(&out));
}

#[test]
fn superluminal_boundary_segment_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let fast = json!({ "nodes": [
        { "t": -10.0, "x": [2.0, 0.0, 0.0], "v_left": [1.2, 0.0, 0.0], "v_right": [1.2, 0.0, 0.0] },
        { "t": 4.0, "x": [18.8, 0.0, 0.0], "v_left": [1.2, 0.0, 0.0], "v_right": [1.2, 0.0, 0.0] }
    ]});
    let slow = json!({ "nodes": [
        { "t": 0.0, "x": [0.0, 0.0, 0.0], "v_left": [0.0, 0.0, 0.0], "v_right": [0.0, 0.0, 0.0] },
        { "t": 30.0, "x": [0.0, 0.0, 0.0], "v_left": [0.0, 0.0, 0.0], "v_right": [0.0, 0.0, 0.0] }
    ]});
    let cfg = json!({
        "masses": [1.0, 1.0],
        "boundary": {
            "t_o1": 0.0, "o1": [0.0, 0.0, 0.0], "t_l2": 4.0, "l2": [18.8, 0.0, 0.0],
            "past_segment": fast, "future_segment": slow
        }
    });
    put(dir, "fast.json", &cfg.to_string());
    let out = varem(dir, &["solve", "fast.json"]);
    assert_eq!(code(&out), 70, "{}", stderr(&out));
    assert!(stderr(&out).contains("past_segment"), "{}", stderr(&out));
}

#[test]
fn static_pair_is_not_critical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    static_problem(dir);
    let out = varem(dir, &["verify", "a.json", "b.json", "--config", "static.json"]);
    assert_eq!(code(&out), 3);
    let el = stdout_json(&out)["max_el_residual"].as_f64().unwrap();
    assert!((el - 0.25).abs() < 1e-9, "{el}");
}

#[test]
fn paths_too_short_for_the_boundary_fail_at_runtime() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    static_problem(dir);
    put(dir, "short.json", &stationary(0.0, -1.0, 3.0));
    let out = varem(dir, &["verify", "short.json", "b.json", "--config", "static.json"]);
    assert_eq!(code(&out), 70, "{}", stderr(&out));
    assert!(stderr(&out).contains("spans"), "{}", stderr(&out));
}

#[test]
fn static_action_breakdown() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    static_problem(dir);
    let out = varem(dir, &["eval", "a.json", "b.json", "--config", "static.json", "--quad-tol", "1e-12"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = stdout_json(&out);
    for form in ["a_fokker", "l2"] {
        let b = &r[form];
        assert!((b["total"].as_f64().unwrap() - 2.0).abs() < 1e-12);
        assert!((b["interaction_retarded"].as_f64().unwrap() - 1.5).abs() < 1e-12);
        assert!((b["interaction_advanced"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        for key in ["kinetic1", "kinetic2"] {
            assert_eq!(b[key].as_f64().unwrap(), 0.0);
        }
    }
    assert!(r["difference"].as_f64().unwrap().abs() < 2e-12);

    let out = varem(dir, &["eval", "a.json", "b.json", "--config", "static.json", "--form", "L2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["form"], "L2");
}

#[test]
fn eval_without_overlap_fails_at_runtime() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    static_problem(dir);
    put(dir, "late.json", &stationary(2.0, 100.0, 140.0));
    let out = varem(dir, &["eval", "a.json", "late.json", "--config", "static.json"]);
    assert_eq!(code(&out), 70, "{}", stderr(&out));
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = varem(dir, &["orbit", "12", "1", "2", "--delays", "2", "--nodes", "6", "--out", "o"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut reports = Vec::new();
    for threads in ["1", "3"] {
        let dest = format!("run{threads}");
        let out = varem(dir, &["solve", "o/problem.json", "--threads", threads, "--seed", "7", "--out", &dest]);
        assert!(code(&out) == 0 || code(&out) == 2, "{}", stderr(&out));
        let traj = std::fs::read_to_string(dir.join(&dest).join("traj1.json")).unwrap();
        reports.push((out.stdout, traj));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn trajectory_files_round_trip_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = varem(dir, &["orbit", "7.3", "1", "3", "--delays", "1.5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for name in ["traj1.json", "traj2.json"] {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        let traj = io::trajectory_from_json(&text).unwrap();
        assert_eq!(io::trajectory_to_json(&traj), text);
        let again = io::trajectory_from_json(&io::trajectory_to_json(&traj)).unwrap();
        for (a, b) in traj.nodes().iter().zip(again.nodes()) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            for (p, q) in [(a.x, b.x), (a.v_left, b.v_left), (a.v_right, b.v_right)] {
                assert_eq!([p.x, p.y, p.z].map(f64::to_bits), [q.x, q.y, q.z].map(f64::to_bits));
            }
        }
    }
}
