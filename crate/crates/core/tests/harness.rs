use kslab::harness::{cmd_construct, cmd_solve, read_record, ExperimentConfig};
use kslab::Error;

fn config(dir: &std::path::Path) -> ExperimentConfig {
    let text = r#"{
        "label": "run",
        "model": {"N": 3, "m": 1.0, "sigma": 0.0},
        "grid": {"n_cells": 80},
        "evolution": {"t_end": 0.02, "dt_init": 1e-3, "dt_min": 1e-12, "cfl_safety": 0.5, "snapshot_every": 0.005},
        "initial": {"kind": "u_hat", "eta": 0.3, "base": {"kind": "cosine", "value": 1.0, "amplitude": 1.0},
                    "exponents": {"gamma": 2.75, "delta_init": 0.875, "q": 1.0, "p": 1.0}}
    }"#;
    let mut cfg = ExperimentConfig::from_json(text).unwrap();
    cfg.output_dir = dir.to_path_buf();
    cfg
}

#[test]
fn record_round_trips_and_lists_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let outcome = cmd_solve(&cfg).unwrap();
    let record = read_record(&cfg.run_dir().join("record.json")).unwrap();
    assert_eq!(record, outcome.record);
    assert_eq!(record.config, cfg);
    for name in &record.outputs {
        assert!(cfg.run_dir().join(name).exists(), "{name}");
    }
    let text = std::fs::read_to_string(cfg.run_dir().join("record.json")).unwrap();
    assert!(!text.contains("seconds"));
}

#[test]
fn rerun_replaces_previous_output_without_leftovers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    cmd_solve(&cfg).unwrap();
    std::fs::write(cfg.run_dir().join("stale.txt"), "x").unwrap();
    cmd_solve(&cfg).unwrap();
    assert!(!cfg.run_dir().join("stale.txt").exists());
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("run")]);
}

#[test]
fn construct_needs_a_spike_datum() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.initial = Some(kslab::harness::InitialData::Constant { value: 1.0 });
    assert!(matches!(cmd_construct(&cfg), Err(Error::Config(_))));
    assert!(std::fs::read_dir(dir.path()).map_or(true, |mut d| d.next().is_none()));
}

#[test]
fn csv_datum_is_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let mut spike = cfg.clone();
    spike.label = "spike".into();
    cmd_construct(&spike).unwrap();
    let csv = spike.run_dir().join("u_hat.csv");
    let mut again = cfg.clone();
    again.label = "from-csv".into();
    again.initial = Some(kslab::harness::InitialData::Csv { path: csv });
    let a = cmd_solve(&cfg).unwrap();
    let b = cmd_solve(&again).unwrap();
    assert_eq!(a.verdict, b.verdict);
}
