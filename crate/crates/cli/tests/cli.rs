//! Behavior tests of the command-line surface: precedence, validation,
//! exit codes, output schemas and byte-level reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jcmflow"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn no_arguments_is_a_usage_error_listing_commands() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    for cmd in ["trajectory", "field", "oracle-check", "intersections", "residuals", "density", "energy"] {
        assert!(err.contains(cmd), "missing {cmd} in usage:\n{err}");
    }
}

#[test]
fn help_exits_zero() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["trajectory", "--bogus", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--bogus"));
}

#[test]
fn flag_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.conf"),
        "beta = 2.0\nt-max = 1.0  # short window\ndt = 0.5\n",
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &["trajectory", "--config", "run.conf", "--beta", "1.0"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("trajectory.csv.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["beta"], 1.0);
    assert_eq!(manifest["config"]["t_max"], 1.0);
    assert_eq!(manifest["config"]["dt"], 0.5);
}

#[test]
fn config_file_value_applies_when_no_flag() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.conf"), "beta = 2.5\nt-max = 1.0\ndt = 0.5\n").unwrap();
    let out = run_in(dir.path(), &["trajectory", "--config", "run.conf"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("trajectory.csv.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["beta"], 2.5);
}

#[test]
fn unknown_config_key_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.conf"), "betaa = 2.0\n").unwrap();
    let out = run_in(dir.path(), &["trajectory", "--config", "run.conf"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("betaa"), "{}", stderr(&out));
}

#[test]
fn malformed_config_line_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.conf"), "beta 2.0\n").unwrap();
    let out = run_in(dir.path(), &["trajectory", "--config", "run.conf"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("key = value"));
}

#[test]
fn unphysical_initial_state_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["trajectory", "--s0", "1,1,0", "--t-max", "1", "--dt", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("norm"));
}

#[test]
fn nonpositive_dt_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["trajectory", "--dt", "-0.1", "--t-max", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn singular_density_window_is_a_numerical_failure() {
    // [0, 1.2] at beta = 1 straddles the first zero of L3
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["density", "--beta", "1.0", "--t-max", "1.2", "--dt", "0.2"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("singular"), "{}", stderr(&out));
}

#[test]
fn csv_headers_match_the_documented_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["trajectory", "--t-max", "1", "--dt", "0.5"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,Sx,Sy,Sz,vx,vy,vz,err_bound");

    let out = run_in(dir.path(), &["field", "--t", "0.5", "--grid", "5"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,x,z,vx,vz,div,rho,p,Kx,Kz,singular");
}

#[test]
fn identical_configs_reproduce_byte_identical_artifacts() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let args = ["trajectory", "--beta", "1.3", "--t-max", "3", "--dt", "0.01"];
    assert!(run_in(dir_a.path(), &args).status.success());
    assert!(run_in(dir_b.path(), &args).status.success());
    let a = std::fs::read(dir_a.path().join("trajectory.csv")).unwrap();
    let b = std::fs::read(dir_b.path().join("trajectory.csv")).unwrap();
    assert_eq!(a, b, "trajectory data must be byte-identical");

    // manifests agree on everything except wall clock
    let mut ma: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir_a.path().join("trajectory.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    let mut mb: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir_b.path().join("trajectory.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    ma["wall_clock_seconds"] = 0.into();
    mb["wall_clock_seconds"] = 0.into();
    assert_eq!(ma, mb);
}

#[test]
fn parallelism_cap_does_not_change_artifacts() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let args = ["energy", "--t", "0.2", "--mc-samples", "100000", "--seed", "9"];
    let out_a = bin()
        .current_dir(dir_a.path())
        .env("JCMFLOW_THREADS", "1")
        .args(args)
        .output()
        .unwrap();
    assert!(out_a.status.success(), "{}", stderr(&out_a));
    let out_b = bin()
        .current_dir(dir_b.path())
        .env("JCMFLOW_THREADS", "4")
        .args(args)
        .output()
        .unwrap();
    assert!(out_b.status.success(), "{}", stderr(&out_b));
    assert_eq!(
        std::fs::read(dir_a.path().join("energy.json")).unwrap(),
        std::fs::read(dir_b.path().join("energy.json")).unwrap(),
        "Monte Carlo output must not depend on the thread count"
    );
}

#[test]
fn invalid_thread_cap_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .env("JCMFLOW_THREADS", "0")
        .args(["trajectory", "--t-max", "1", "--dt", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn json_format_emits_valid_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["trajectory", "--t-max", "1", "--dt", "0.5", "--format", "json", "--output", "traj.json"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("traj.json")).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn manifest_checksums_match_the_artifacts() {
    use sha2::{Digest, Sha256};
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["density", "--t-max", "0.4", "--dt", "0.1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("density.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    for artifact in manifest["artifacts"].as_array().unwrap() {
        let path = dir.path().join(artifact["path"].as_str().unwrap());
        let data = std::fs::read(&path).unwrap();
        let digest = hex::encode(Sha256::digest(&data));
        assert_eq!(digest, artifact["sha256"].as_str().unwrap(), "{}", path.display());
        assert_eq!(data.len() as u64, artifact["bytes"].as_u64().unwrap());
    }
}

#[test]
fn oracle_check_example_stays_within_budgeted_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["oracle-check", "--beta", "5.0", "--fock-cutoff", "10", "--t-max", "10"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("oracle_check.json")).unwrap())
            .unwrap();
    assert!(report["max_deviation"].as_f64().unwrap() <= 1e-9);
    assert_eq!(report["fock_cutoff"].as_u64().unwrap(), 10);
}

#[test]
fn intersections_example_reports_a_single_event() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["intersections", "--beta", "1.0", "--t-max", "5"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("intersections.json")).unwrap(),
    )
    .unwrap();
    let events = report["events"].as_array().unwrap();
    assert_eq!(events.len(), 1);
    assert!(events[0]["phase_gap"].as_f64().unwrap() > 0.3);
}

#[test]
fn plot_scripts_are_emitted_for_figure_commands() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &["trajectory", "--t-max", "1", "--dt", "0.5"]).status.success());
    assert!(run_in(dir.path(), &["field", "--t", "0.5", "--grid", "5"]).status.success());
    for script in ["trajectory_plot.py", "field_plot.py"] {
        let text = std::fs::read_to_string(dir.path().join(script)).unwrap();
        assert!(text.contains("matplotlib"), "{script} should be a plotting script");
    }
}
