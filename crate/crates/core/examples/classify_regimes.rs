//! Regime verdicts for a handful of power-law exponents.
//!
//! `cargo run --example classify_regimes`

use kslab::model::{classify_regime, ModelParams};

fn main() {
    println!("{:>2} {:>5} {:>6} {:>7} {:>7} {:>7} {:>9}", "N", "m", "sigma", "bounded", "global", "blowup", "t=inf");
    for (dim, m, sigma) in [
        (3, 1.0, 0.0),
        (3, 0.0, 0.0),
        (3, 0.0, 0.5),
        (3, 1.0, 0.5),
        (4, 1.0, 0.6),
        (2, 0.0, 1.5),
        (5, 2.0, 0.0),
    ] {
        let p = ModelParams::new(dim, m, sigma);
        let v = classify_regime(&p);
        println!(
            "{dim:>2} {m:>5} {sigma:>6} {:>7} {:>7} {:>7} {:>9}",
            v.bounded_regime, v.global_regime, v.blowup_regime, v.infinite_time_blowup
        );
    }
}
