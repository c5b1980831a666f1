//! Evolves spike data in the bounded regime and checks the energy identity
//! and the `L^2` differential inequality along the trajectory.
//!
//! `cargo run --release --example bounded_run`

use std::sync::Arc;

use kslab::energy::{check_differential_inequality, check_energy_identity};
use kslab::evolution::{run, steady_state_residual, EvolutionConfig};
use kslab::initdata::{build_u_hat, EtaExponents};
use kslab::model::ModelParams;
use kslab::{Model, RadialField, RadialGrid};

fn main() -> kslab::Result<()> {
    let model = Model::power_law(ModelParams::new(3, 1.0, 0.0))?;
    let exp = EtaExponents { gamma: 2.75, delta_init: 0.875, q: 1.0, p: 1.0 };
    let grid = Arc::new(RadialGrid::uniform(3, 1.0, 400)?);
    let u0 = build_u_hat(&exp, 0.3, &RadialField::zeros(grid))?.u_hat;

    let dt = 2.5e-4;
    let mut cfg = EvolutionConfig::new(0.5, dt, dt);
    cfg.dt_max = Some(dt);
    let (traj, verdict) = run(&u0, &model, &cfg)?;
    println!("{:?} at t = {}, sup u {:.4} -> {:.4}", verdict.kind, verdict.t_stop, traj.sup_norms[0], verdict.sup_u_final);

    let id = check_energy_identity(&traj)?;
    println!(
        "energy identity defect {:.4}, violations {}, energy {:.4} -> {:.4}",
        id.max_defect,
        id.monotonicity_violations,
        traj.energies[0],
        traj.energies[traj.len() - 1]
    );
    let di = check_differential_inequality(&traj, 2.0, &model)?;
    println!("L^2 inequality: max violation {:.4} against max |RHS| {:.4}", di.max_violation, di.max_rhs);
    let last = &traj.snapshots[traj.snapshots.len() - 1];
    println!("steady residual at t_end {:.3e}", steady_state_residual(&last.u, &last.v, &model)?);
    println!("mass drift {:.2e}", traj.max_mass_drift());
    Ok(())
}
