//! Growth condition on `G`, the superlinear-growth condition, and the
//! power-law sufficient condition, for a bounded and a blow-up model.
//!
//! `cargo run --example structural_conditions`

use kslab::harness::config::default_growth_samples;
use kslab::model::{
    check_condition_13, check_growth_condition, power_law_sufficient_condition, Condition13Params, ModelParams,
};
use kslab::Model;

fn main() -> kslab::Result<()> {
    let samples = default_growth_samples();
    for params in [ModelParams::new(3, 1.0, 0.0), ModelParams::new(3, 0.0, 0.5)] {
        let model = Model::power_law(params)?;
        let growth = check_growth_condition(&model, &samples)?;
        let c13 = check_condition_13(&model, &Condition13Params::default())?;
        println!("N={} m={} sigma={} alpha={}", params.dim, params.m, params.sigma, params.alpha());
        println!(
            "  G <= C_G (1 + z^(2+alpha)): holds {} with C_G = {}; smallest passing C_G {:.4} at z = {:.3e}",
            growth.holds, growth.c_g, growth.worst_ratio, growth.worst_at
        );
        println!(
            "  superlinear growth: holds {}, max violation {:.4e} at s = {:.3e}",
            c13.holds, c13.max_violation, c13.worst_at
        );
        if let Some(w) = c13.warning {
            println!("  warning: {w}");
        }
        println!("  power-law sufficient condition: {}", power_law_sufficient_condition(&params));
    }
    Ok(())
}
