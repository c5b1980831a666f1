//! Evolves spike data in the blow-up regime until the sup norm crosses the
//! threshold. The verdict is numerical evidence, not a proof.
//!
//! `cargo run --release --example blowup_run`

use std::sync::Arc;

use kslab::evolution::{run, EvolutionConfig};
use kslab::initdata::{build_u_hat, select_exponents};
use kslab::model::ModelParams;
use kslab::{Model, RadialField, RadialGrid};

fn main() -> kslab::Result<()> {
    let model = Model::power_law(ModelParams::new(3, 0.0, 0.5))?;
    let exp = select_exponents(model.params(), 1.0)?;
    for eta in [0.1, 0.05] {
        let grid = Arc::new(RadialGrid::refined(3, 1.0, 400, eta / 8.0)?);
        let u0 = build_u_hat(&exp, eta, &RadialField::zeros(grid))?.u_hat;
        let mut cfg = EvolutionConfig::new(5.0, 1e-6, 1e-3);
        cfg.dt_min = 1e-14;
        let (traj, verdict) = run(&u0, &model, &cfg)?;
        println!(
            "eta {eta}: {:?} at t = {:.5}, sup {:.3e} -> {:.3e}, growing tail {}, {} steps ({} rejected)",
            verdict.kind,
            verdict.t_stop,
            traj.sup_norms[0],
            verdict.sup_u_final,
            verdict.sup_u_history_monotone_tail,
            traj.accepted_steps,
            traj.rejected_steps
        );
    }
    Ok(())
}
