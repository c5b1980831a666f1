//! Runs a solve from a JSON config through the harness and lists the files
//! it writes.
//!
//! `cargo run --release --example experiment_harness [output_dir]`

use kslab::harness::{cmd_solve, read_record, ExperimentConfig};

const CONFIG: &str = r#"{
    "label": "bounded-demo",
    "model": {"N": 3, "m": 1.0, "sigma": 0.0},
    "grid": {"n_cells": 200},
    "evolution": {"t_end": 0.2, "dt_init": 1e-3, "dt_min": 1e-12, "cfl_safety": 0.5,
                  "dt_max": 1e-3, "snapshot_every": 0.05},
    "initial": {"kind": "u_hat", "eta": 0.3, "base": {"kind": "cosine", "value": 1.0, "amplitude": 1.0},
                "exponents": {"gamma": 2.75, "delta_init": 0.875, "q": 1.0, "p": 1.0}}
}"#;

fn main() -> kslab::Result<()> {
    let mut cfg = ExperimentConfig::from_json(CONFIG)?;
    cfg.output_dir = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("kslab-runs"));
    let outcome = cmd_solve(&cfg)?;
    println!("verdict {:?}, record pass {}", outcome.verdict.kind, outcome.record.pass);
    for c in &outcome.record.checks {
        println!("  {:<28} {:<5} {:.3e} (limit {:.1e})", c.name, c.pass, c.value, c.limit);
    }
    let record = read_record(&cfg.run_dir().join("record.json"))?;
    println!("wrote {} files to {}", record.outputs.len(), cfg.run_dir().display());
    Ok(())
}
