//! Eta sweep with log-log fits of the cross term, the potential term and the
//! energy, on the zero base datum.
//!
//! `cargo run --release --example scaling_sweep`

use std::sync::Arc;

use kslab::initdata::{default_etas, sweep_scalings, EtaExponents};
use kslab::model::ModelParams;
use kslab::{Model, RadialField, RadialGrid};

fn main() -> kslab::Result<()> {
    let model = Model::power_law(ModelParams::new(3, 0.0, 0.0))?;
    let exp = EtaExponents { gamma: 2.75, delta_init: 0.875, q: 1.0, p: 1.0 };
    let grid = Arc::new(RadialGrid::refined(3, 1.0, 1000, 3e-4)?);
    let report = sweep_scalings(&exp, &model, &RadialField::zeros(grid), &default_etas())?;

    println!("{:>8} {:>12} {:>12} {:>12} {:>10}", "eta", "int u v", "int G", "energy", "L1 dist");
    for r in &report.rows {
        println!(
            "{:>8.5} {:>12.5} {:>12.5} {:>12.5} {:>10.5}",
            r.eta, r.cross_term, r.potential_term, r.energy, r.distance
        );
    }
    let show = |name: &str, fit: Option<kslab::initdata::SlopeFit>, target: f64| match fit {
        Some(f) => println!("{name}: slope {:.4} +- {:.4} (target {target})", f.slope, f.std_error),
        None => println!("{name}: no fit (target {target})"),
    };
    show("cross term", report.fits.cross_term, report.targets.cross_term_exponent);
    show("potential term", report.fits.potential_term, report.targets.potential_exponent);
    show("energy", report.fits.energy, report.targets.cross_term_exponent);
    println!("flags: {}", serde_json::to_string(&report.flags).expect("serializable"));
    Ok(())
}
