//! Solves `-Δv + v = u` on refining meshes and checks the solution against
//! the integral representation and the mass identity.
//!
//! `cargo run --example elliptic_oracle`

use std::sync::Arc;

use kslab::elliptic::{check_neumann, representation_residual, solve_screened_poisson};
use kslab::{RadialField, RadialGrid};

fn main() -> kslab::Result<()> {
    let mut previous: Option<f64> = None;
    println!("{:>5} {:>12} {:>10} {:>10} {:>6}", "n", "residual", "order", "mass gap", "neumann");
    for n in [250, 500, 1000, 2000] {
        let grid = Arc::new(RadialGrid::uniform(3, 1.0, n)?);
        let u = RadialField::from_fn(grid, |r| 1.0 + (std::f64::consts::PI * r).cos())?;
        let sol = solve_screened_poisson(&u)?;
        let res = representation_residual(&u, &sol.v)?;
        let order = previous.map_or(String::from("-"), |p| format!("{:.4}", (p / res).log2()));
        println!(
            "{n:>5} {res:>12.4e} {order:>10} {:>10.2e} {:>6}",
            sol.mass_gap,
            check_neumann(&sol.v)
        );
        previous = Some(res);
    }
    Ok(())
}
