//! The cross-term law is asymptotic. Over the default sweep the fitted slope
//! sits near -0.9; far smaller eta shows the local slope drifting to -0.5.

use std::sync::Arc;

use kslab::elliptic::solve_screened_poisson;
use kslab::initdata::{build_u_eta, EtaExponents};
use kslab::RadialGrid;

const EXP: EtaExponents = EtaExponents { gamma: 2.75, delta_init: 0.875, q: 1.0, p: 1.0 };

fn cross_term(eta: f64, n: usize) -> f64 {
    let grid = Arc::new(RadialGrid::refined(3, 1.0, n, eta / 16.0).unwrap());
    let u = build_u_eta(&EXP, eta, grid).unwrap();
    let v = solve_screened_poisson(&u).unwrap().v;
    u.inner(&v).unwrap()
}

#[test]
fn local_slope_approaches_the_asymptotic_exponent() {
    let etas: Vec<f64> = (2..=14).map(|k| 10f64.powi(-k)).collect();
    let x: Vec<f64> = etas.iter().map(|&e| cross_term(e, 1500)).collect();
    let slopes: Vec<f64> = (1..etas.len())
        .map(|i| (x[i] / x[i - 1]).ln() / (etas[i] / etas[i - 1]).ln())
        .collect();
    assert!(slopes.windows(2).all(|w| w[1] > w[0]), "{slopes:?}");
    assert!(slopes.iter().all(|&s| s < -0.5), "{slopes:?}");
    assert!((slopes[slopes.len() - 1] + 0.5).abs() < 0.1, "{slopes:?}");
    assert!((slopes[0] + 0.5).abs() > 0.3, "{slopes:?}");
}

#[test]
fn deep_values_are_mesh_converged() {
    for eta in [1e-6, 1e-12] {
        let coarse = cross_term(eta, 1500);
        let fine = cross_term(eta, 3000);
        assert!((coarse - fine).abs() / fine < 1e-3, "eta {eta}: {coarse} vs {fine}");
    }
}
