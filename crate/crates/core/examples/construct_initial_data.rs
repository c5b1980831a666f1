//! Selects spike exponents for a blow-up model and builds `u_hat = u0 + u_eta + eta^q`.
//!
//! `cargo run --example construct_initial_data`

use std::sync::Arc;

use kslab::initdata::{build_u_hat, select_exponents};
use kslab::model::ModelParams;
use kslab::{RadialField, RadialGrid};

fn main() -> kslab::Result<()> {
    let params = ModelParams::new(3, 0.0, 0.0);
    let exp = select_exponents(&params, 1.0)?;
    println!("exponents: {}", serde_json::to_string(&exp).expect("serializable"));

    let eta = 0.05;
    let grid = Arc::new(RadialGrid::refined(3, 1.0, 400, eta / 8.0)?);
    let base = RadialField::constant(grid, 1.0)?;
    let c = build_u_hat(&exp, eta, &base)?;
    println!("support radius r_eta = {:.5}", exp.support_radius(eta));
    println!("u_eta(0) ~ {:.4}, int u_eta = {:.6}", c.u_eta.max(), c.u_eta.integral());
    println!("min u_hat = {:.6} (floor eta^q = {:.6})", c.u_hat.min(), eta.powf(exp.q));
    println!("int u_hat = {:.10}, int v_hat = {:.10}", c.u_hat.integral(), c.v_hat.integral());

    match select_exponents(&ModelParams::new(3, 1.0, 0.5), 1.0) {
        Err(e) => println!("alpha = -0.5: {e}"),
        Ok(e) => println!("unexpected: {e:?}"),
    }
    Ok(())
}
