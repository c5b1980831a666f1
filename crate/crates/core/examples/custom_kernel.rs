//! User-supplied diffusion and sensitivity. `G` is then built by quadrature
//! and the structural conditions are checked by sampling only.
//!
//! `cargo run --release --example custom_kernel`

use std::sync::Arc;

use kslab::evolution::{run, EvolutionConfig};
use kslab::harness::config::default_growth_samples;
use kslab::model::{check_growth_condition, CustomKernel, ModelParams};
use kslab::{Model, RadialField, RadialGrid};

fn main() -> kslab::Result<()> {
    // Linear diffusion with a saturating sensitivity u / (1 + u).
    let kernel = CustomKernel::new(|_| 1.0, |u| u / (1.0 + u));
    let model = Model::custom(ModelParams::new(3, 1.0, 0.0), kernel)?;
    for u in [0.1, 1.0, 10.0] {
        println!("G({u}) = {:.6}", model.potential(u)?);
    }
    let growth = check_growth_condition(&model, &default_growth_samples())?;
    println!("growth condition holds {}, smallest C_G {:.4}", growth.holds, growth.worst_ratio);

    let grid = Arc::new(RadialGrid::uniform(3, 1.0, 200)?);
    let u0 = RadialField::from_fn(grid, |r| 1.0 + (std::f64::consts::PI * r).cos())?;
    let (traj, verdict) = run(&u0, &model, &EvolutionConfig::new(0.2, 1e-3, 0.05))?;
    println!("{:?} at t = {}, sup {:.4}, mass drift {:.1e}", verdict.kind, verdict.t_stop, verdict.sup_u_final, traj.max_mass_drift());
    Ok(())
}
