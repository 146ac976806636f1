use std::fs;

use qnnsim::scenario::{
    parse_scenario, preset, run_scenario, run_sweep, serialize_scenario, simulate, SweepParam, SweepSpec,
    PRESET_NAMES,
};
use qnnsim::Error;

const SINGLE: &str = "
# one input, one reservoir
[scenario]
name = single

[topology]
couplings = 0.05

[state]
input.0 = bloch pi/2 0
output = bloch pi/2 0

[reservoir.0]
node = 0
state = bloch 0 0
j_su = 0.05

[schedule]
mode = markov
tau = 0.1*pi/0.05
n_collisions = 60

[observe]
metrics = sigma_z_out, fidelity:up, entropy_unit
window = 10

[target.up]
kind = mixture
states = bloch 0 0
weights = 1
";

#[test]
fn parse_serialize_is_identity_on_presets() {
    for name in PRESET_NAMES {
        let c = preset(name).unwrap();
        let text = serialize_scenario(&c);
        let back = parse_scenario(&text).unwrap();
        assert_eq!(back, c, "{name}");
        assert_eq!(serialize_scenario(&back), text);
    }
}

#[test]
fn duplicate_reservoir_node_is_rejected() {
    let text = SINGLE.replace(
        "[schedule]",
        "[reservoir.1]\nnode = 0\nstate = bloch pi 0\nj_su = 0.05\n\n[schedule]",
    );
    match parse_scenario(&text) {
        Err(Error::Semantic { path, msg }) => {
            assert_eq!(path, "reservoir");
            assert!(msg.contains("more than one reservoir"), "{msg}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn closed_and_collision_fields_do_not_mix() {
    let text = SINGLE.replace("mode = markov", "mode = closed\nt_max = 10\ndt = 1");
    assert!(matches!(parse_scenario(&text), Err(Error::Semantic { .. })));
    let nm = SINGLE.replace("mode = markov", "mode = non_markov");
    match parse_scenario(&nm) {
        Err(Error::Semantic { path, .. }) => assert_eq!(path, "schedule.j_uu"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn run_writes_csv_svg_and_summary() {
    let config = parse_scenario(SINGLE).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&config, dir.path(), true).unwrap();
    let names: Vec<String> = report
        .files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(
        names,
        [
            "single.csv",
            "single.sigma_z_out.svg",
            "single.fidelity-up.svg",
            "single.entropy_unit.svg",
            "single.summary.json"
        ]
    );
    for f in &report.files {
        assert!(f.exists(), "{}", f.display());
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("single.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scenario"], "single");
    assert!(summary["final_fidelities"]["up"].as_f64().unwrap() > 0.5);
    let csv = fs::read_to_string(dir.path().join("single.csv")).unwrap();
    assert_eq!(csv.lines().count(), 62);
    assert_eq!(csv.lines().next().unwrap(), "step,time,sigma_z_out,fidelity:up,entropy_unit");
}

#[test]
fn fig2b_reaches_unit_fidelity() {
    let config = preset("fig2b").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&config, dir.path(), false).unwrap();
    assert!(report.steady.converged);
    assert!(report.steady.steady_values["fidelity:up"] >= 0.999);
    assert!(report.final_fidelities["up"] >= 0.999);
}

#[test]
fn fig1c_polarisation_stays_zero() {
    let out = simulate(&preset("fig1c").unwrap()).unwrap();
    let sz = out.trace.series("sigma_z_out").unwrap();
    assert!(sz.iter().all(|v| v.abs() < 1e-8));
}

#[test]
fn unwritable_output_leaves_no_partial_files() {
    let config = parse_scenario(SINGLE).unwrap();
    let dir = tempfile::tempdir().unwrap();

    // The summary path is taken by a directory, so the last write fails.
    fs::create_dir(dir.path().join("single.summary.json")).unwrap();
    let err = run_scenario(&config, dir.path(), true).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    let left: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(left, ["single.summary.json"]);

    // An output directory below a regular file cannot be created at all.
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let err = run_scenario(&config, &blocker.join("out"), false).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(!blocker.join("out").exists());
}

#[test]
fn created_output_directory_is_removed_on_failure() {
    let mut config = parse_scenario(SINGLE).unwrap();
    config.name = "x".repeat(300);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fresh");
    assert!(run_scenario(&config, &out, false).is_err());
    assert!(!out.exists());
}

#[test]
fn sweep_rows_follow_value_order() {
    let config = parse_scenario(SINGLE).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let param = SweepParam::parse("reservoir.0.j_su_ratio").unwrap();
    let forward = SweepSpec::new(param, vec![0.2, 0.6, 1.0], vec![]).unwrap();
    let backward = SweepSpec::new(param, vec![1.0, 0.2, 0.6], vec![]).unwrap();
    let a = run_sweep(&config, &forward, dir.path()).unwrap();
    let b = run_sweep(&config, &backward, dir.path()).unwrap();
    for row in &a.rows {
        let twin = b.rows.iter().find(|r| r.value == row.value).unwrap();
        assert_eq!(twin.steady_values, row.steady_values);
    }
    let order: Vec<f64> = b.rows.iter().map(|r| r.value).collect();
    assert_eq!(order, [1.0, 0.2, 0.6]);
    assert_eq!(a.chord_deviation, b.chord_deviation);
    let csv = fs::read_to_string(dir.path().join("single.sweep.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "value,status,sigma_z_out,fidelity:up,entropy_unit");
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn sweep_records_failed_values_and_fails_only_when_all_do() {
    let config = parse_scenario(SINGLE).unwrap();
    let dir = tempfile::tempdir().unwrap();
    // |J| may not exceed omega = 1.
    let param = SweepParam::parse("topology.coupling.0").unwrap();
    let mixed = SweepSpec::new(param, vec![0.05, 5.0], vec![]).unwrap();
    let report = run_sweep(&config, &mixed, dir.path()).unwrap();
    assert!(report.rows[0].error.is_none());
    assert!(report.rows[1].error.is_some());
    assert!(report.rows[1].steady_values.is_empty());
    let bad = SweepSpec::new(param, vec![5.0, 7.0], vec![]).unwrap();
    assert!(run_sweep(&config, &bad, dir.path()).is_err());
}

#[test]
fn sweep_rejects_unknown_reduce_names() {
    let config = parse_scenario(SINGLE).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let spec = SweepSpec::new(SweepParam::Omega, vec![1.0], vec!["p_up_out".into()]).unwrap();
    assert!(run_sweep(&config, &spec, dir.path()).is_err());
}
