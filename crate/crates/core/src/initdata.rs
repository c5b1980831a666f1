//! Concentrating initial data and the `eta -> 0` scaling sweep.
//!
//! The spike `u_eta(r) = (r^2 + eta^2)^(-gamma/2) - (r_eta^2 + eta^2)^(-gamma/2)`
//! for `r < r_eta = eta^delta` (zero beyond) is added to a base datum together
//! with a floor `eta^q`. For supercritical exponents the energy of the sum is
//! driven to minus infinity while its `L^p` distance to the base shrinks.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::solve_screened_poisson;
use crate::energy::{energy_reduced, potential_integral};
use crate::error::{Error, Result};
use crate::grid::{sphere_measure, RadialField, RadialGrid};
use crate::model::{Model, ModelParams};

/// The inequalities an exponent choice must satisfy, named by content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// `-alpha > 2/N`
    SupercriticalAlpha,
    /// `p >= 1`
    NormAtLeastOne,
    /// `p` below `2N/(N+2)` or `-alpha N/2`, whichever applies
    NormRange,
    /// `(N+2)/2 < gamma < N`, `gamma` not 2 or 4
    SpikeWindow,
    /// `2 < -gamma alpha`
    SpikeVersusAlpha,
    /// `N/gamma > p`
    SpikeVersusNorm,
    /// `0 < delta < 1`
    SupportRateRange,
    /// `2 + (1 - delta) N < -gamma alpha`
    SupportRateVersusAlpha,
    /// `2 - 2 gamma + N < N delta - gamma (alpha + 2)`
    CrossTermDominance,
    /// `q > 0` and `2 - 2 gamma + N < (alpha + 2) q`
    FloorExponent,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Constraint::SupercriticalAlpha => "-alpha > 2/N",
            Constraint::NormAtLeastOne => "p >= 1",
            Constraint::NormRange => "p < 2N/(N+2) (alpha <= -4/(N+2)) or p < -alpha N/2 (otherwise)",
            Constraint::SpikeWindow => "(N+2)/2 < gamma < N with gamma not in {2, 4}",
            Constraint::SpikeVersusAlpha => "2 < -gamma alpha",
            Constraint::SpikeVersusNorm => "N/gamma > p",
            Constraint::SupportRateRange => "0 < delta < 1",
            Constraint::SupportRateVersusAlpha => "2 + (1 - delta) N < -gamma alpha",
            Constraint::CrossTermDominance => "2 - 2 gamma + N < N delta - gamma (alpha + 2)",
            Constraint::FloorExponent => "2 - 2 gamma + N < (alpha + 2) q with q > 0",
        };
        f.write_str(s)
    }
}

/// Shape of the spike family: height `eta^-gamma`, support radius
/// `eta^delta_init`, floor `eta^q`, and the norm `p` it approximates in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaExponents {
    pub gamma: f64,
    pub delta_init: f64,
    pub q: f64,
    pub p: f64,
}

impl EtaExponents {
    /// First violated inequality, if any.
    pub fn violated(&self, params: &ModelParams) -> Option<Constraint> {
        let n = params.dim as f64;
        let a = params.alpha();
        let (g, d, q, p) = (self.gamma, self.delta_init, self.q, self.p);
        let cross = 2.0 - 2.0 * g + n;
        if !(p >= 1.0) {
            return Some(Constraint::NormAtLeastOne);
        }
        if !((n + 2.0) / 2.0 < g && g < n && g != 2.0 && g != 4.0) {
            return Some(Constraint::SpikeWindow);
        }
        if !(2.0 < -g * a) {
            return Some(Constraint::SpikeVersusAlpha);
        }
        if !(n / g > p) {
            return Some(Constraint::SpikeVersusNorm);
        }
        if !(0.0 < d && d < 1.0) {
            return Some(Constraint::SupportRateRange);
        }
        if !(2.0 + (1.0 - d) * n < -g * a) {
            return Some(Constraint::SupportRateVersusAlpha);
        }
        if !(cross < n * d - g * (a + 2.0)) {
            return Some(Constraint::CrossTermDominance);
        }
        if !(q > 0.0 && cross < (a + 2.0) * q) {
            return Some(Constraint::FloorExponent);
        }
        None
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        match self.violated(params) {
            None => Ok(()),
            Some(c) => Err(Error::Infeasible(c)),
        }
    }

    pub fn support_radius(&self, eta: f64) -> f64 {
        eta.powf(self.delta_init)
    }

    /// Predicted exponent of `int u_eta v_eta ~ eta^e`: `2 - 2 gamma + N`.
    pub fn cross_term_exponent(&self, dim: usize) -> f64 {
        2.0 - 2.0 * self.gamma + dim as f64
    }

    /// Growth bound exponent of `int G(u_hat)`: `N delta - gamma (2 + alpha)`.
    pub fn potential_exponent(&self, params: &ModelParams) -> f64 {
        params.dim as f64 * self.delta_init - self.gamma * (2.0 + params.alpha())
    }
}

/// Largest admissible `p` for the given exponents (exclusive).
pub fn norm_bound(params: &ModelParams) -> f64 {
    let n = params.dim as f64;
    let a = params.alpha();
    if a <= -4.0 / (n + 2.0) {
        2.0 * n / (n + 2.0)
    } else {
        -a * n / 2.0
    }
}

/// Deterministic midpoint choice of `(gamma, delta, q)` for a supercritical model.
pub fn select_exponents(params: &ModelParams, p: f64) -> Result<EtaExponents> {
    params.validate()?;
    let n = params.dim as f64;
    let a = params.alpha();
    if !(-a > 2.0 / n) {
        return Err(Error::Infeasible(Constraint::SupercriticalAlpha));
    }
    if !(p >= 1.0) {
        return Err(Error::Infeasible(Constraint::NormAtLeastOne));
    }
    if !(p < norm_bound(params)) {
        return Err(Error::Infeasible(Constraint::NormRange));
    }
    let lo = ((n + 2.0) / 2.0).max(2.0 / -a);
    let hi = n.min(n / p);
    if !(lo < hi) {
        let which = if (n + 2.0) / 2.0 >= n {
            Constraint::SpikeWindow
        } else if 2.0 / -a >= hi {
            Constraint::SpikeVersusAlpha
        } else {
            Constraint::SpikeVersusNorm
        };
        return Err(Error::Infeasible(which));
    }
    // Split at the excluded points and take the longest piece.
    let mut cuts = vec![lo];
    cuts.extend([2.0, 4.0].into_iter().filter(|&x| lo < x && x < hi));
    cuts.push(hi);
    let (a0, b0) = cuts
        .windows(2)
        .map(|w| (w[0], w[1]))
        .fold((lo, lo), |best, w| if w.1 - w.0 > best.1 - best.0 { w } else { best });
    let gamma = 0.5 * (a0 + b0);
    let delta_lo = (1.0 - (-gamma * a - 2.0) / n).max(0.0);
    let delta_init = 0.5 * (delta_lo + 1.0);
    let q = if a + 2.0 >= 0.0 {
        1.0
    } else {
        0.5 * (2.0 - 2.0 * gamma + n) / (a + 2.0)
    };
    let exp = EtaExponents { gamma, delta_init, q, p };
    exp.validate(params)?;
    Ok(exp)
}

/// The asymptotic exponent ordering that makes the cross term dominate:
/// `2 - 2g + N < min{N - g + (2-g) d, N - g, N + 4 - 2g, N + 2 - g - g d}`.
pub fn exponent_ordering_holds(exp: &EtaExponents, dim: usize) -> bool {
    let n = dim as f64;
    let (g, d) = (exp.gamma, exp.delta_init);
    let lead = 2.0 - 2.0 * g + n;
    let rest = [n - g + (2.0 - g) * d, n - g, n + 4.0 - 2.0 * g, n + 2.0 - g - g * d];
    rest.iter().all(|&e| lead < e)
}

pub fn u_eta_profile(exp: &EtaExponents, eta: f64, r: f64) -> f64 {
    let r_eta = exp.support_radius(eta);
    if r >= r_eta {
        return 0.0;
    }
    let e2 = eta * eta;
    (r * r + e2).powf(-0.5 * exp.gamma) - (r_eta * r_eta + e2).powf(-0.5 * exp.gamma)
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("eta must lie in (0, 1), got {eta}")))
    }
}

/// Samples the spike at the cell centres.
pub fn build_u_eta(exp: &EtaExponents, eta: f64, grid: std::sync::Arc<RadialGrid>) -> Result<RadialField> {
    check_eta(eta)?;
    RadialField::from_fn(grid, |r| u_eta_profile(exp, eta, r))
}

/// `int u_eta <= omega_N / (N - gamma) * eta^(delta (N - gamma))`.
pub fn spike_mass_bound(exp: &EtaExponents, eta: f64, dim: usize) -> f64 {
    let n = dim as f64;
    sphere_measure(dim) / (n - exp.gamma) * eta.powf(exp.delta_init * (n - exp.gamma))
}

/// `||u_hat - u0||_p^p <= 2^p omega_N / (N - gamma p) eta^(delta (N - gamma p)) + 2^p |Omega| eta^(p q)`.
pub fn distance_bound_pow(exp: &EtaExponents, eta: f64, grid: &RadialGrid) -> f64 {
    let n = grid.dim() as f64;
    let p = exp.p;
    let two_p = 2f64.powf(p);
    two_p * sphere_measure(grid.dim()) / (n - exp.gamma * p) * eta.powf(exp.delta_init * (n - exp.gamma * p))
        + two_p * grid.volume() * eta.powf(p * exp.q)
}

#[derive(Debug, Clone)]
pub struct EtaConstruction {
    pub exponents: EtaExponents,
    pub eta: f64,
    pub base_u0: RadialField,
    pub u_eta: RadialField,
    /// `u0 + u_eta + eta^q`
    pub u_hat: RadialField,
    pub v_hat: RadialField,
}

pub fn build_u_hat(exp: &EtaExponents, eta: f64, u0: &RadialField) -> Result<EtaConstruction> {
    check_eta(eta)?;
    if u0.min() < 0.0 {
        return Err(Error::Domain("base datum must be nonnegative".into()));
    }
    let u_eta = build_u_eta(exp, eta, u0.grid().clone())?;
    let floor = eta.powf(exp.q);
    let u_hat = u0.zip_with(&u_eta, |a, b| a + b + floor)?;
    let v_hat = solve_screened_poisson(&u_hat)?.v;
    Ok(EtaConstruction {
        exponents: *exp,
        eta,
        base_u0: u0.clone(),
        u_eta,
        u_hat,
        v_hat,
    })
}

/// Finest-to-eta resolution demanded by the sweep: cells covering
/// `[0, eta]` must be no wider than `eta / RESOLUTION_FACTOR`.
pub const RESOLUTION_FACTOR: f64 = 8.0;
pub const MIN_SWEEP_POINTS: usize = 5;
/// Minimal `log10(eta_max / eta_min)`.
pub const MIN_SWEEP_DECADES: f64 = 1.5;

/// Default sweep: 8 geometric points from 0.2 to 0.003.
pub fn default_etas() -> Vec<f64> {
    geometric_etas(0.2, 0.003, 8)
}

pub fn geometric_etas(from: f64, to: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![from];
    }
    (0..count)
        .map(|k| from * (to / from).powf(k as f64 / (count - 1) as f64))
        .collect()
}

pub fn check_resolution(grid: &RadialGrid, eta_min: f64) -> Result<()> {
    let faces = grid.faces();
    let widest = (0..grid.len())
        .take_while(|&i| faces[i] < eta_min)
        .map(|i| grid.width(i))
        .fold(0.0, f64::max);
    if widest > eta_min / RESOLUTION_FACTOR {
        return Err(Error::Resolution(format!(
            "cells near the origin are {widest:e} wide, need at most eta/{RESOLUTION_FACTOR} = {:e}",
            eta_min / RESOLUTION_FACTOR
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub std_error: f64,
    pub points: usize,
}

/// Least squares line through `(ln x, ln y)`; `None` if any `y <= 0`.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Option<SlopeFit> {
    if x.len() != y.len() || x.len() < 2 || y.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let std_error = if lx.len() > 2 {
        (ssr / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(SlopeFit { slope, intercept, std_error, points: lx.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub eta: f64,
    /// `int u_eta v_eta` with `v_eta` the signal of the bare spike.
    pub cross_term: f64,
    /// `int G(u_hat)`
    pub potential_term: f64,
    /// Reduced energy of `(u_hat, v_hat)`.
    pub energy: f64,
    /// `||u_hat - u0||_p`
    pub distance: f64,
    pub distance_bound: f64,
    pub spike_mass: f64,
    pub spike_mass_bound: f64,
    /// `u_eta(r) <= r^-gamma` at every cell centre.
    pub pointwise_bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTargets {
    pub cross_term_exponent: f64,
    pub potential_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFits {
    pub cross_term: Option<SlopeFit>,
    pub potential_term: Option<SlopeFit>,
    /// Fit of `-energy`; absent unless every fit point has negative energy.
    pub energy: Option<SlopeFit>,
    /// Smallest and largest `eta` used in the fits.
    pub fit_range: (f64, f64),
}

/// Tolerances of the pass/fail flags.
pub const CROSS_SLOPE_TOL: f64 = 0.1;
pub const POTENTIAL_SLOPE_TOL: f64 = 0.15;
pub const ENERGY_SLOPE_TOL: f64 = 0.15;
pub const DISTANCE_REDUCTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFlags {
    /// Cross-term slope within `CROSS_SLOPE_TOL` of its exponent.
    pub cross_slope: bool,
    /// Potential slope at least its bound minus `POTENTIAL_SLOPE_TOL` and
    /// above the energy slope.
    pub potential_slope: bool,
    /// Energy negative at the smallest `eta` and decreasing over the fit points.
    pub energy_divergence: bool,
    pub energy_slope: bool,
    /// `||u_hat - u0||_p` decreasing across the sweep.
    pub distance_monotone: bool,
    /// Final distance below `DISTANCE_REDUCTION` times the first.
    pub distance_reduction: bool,
    pub exponent_ordering: bool,
    pub pointwise_bound: bool,
    pub spike_mass_bound: bool,
    pub distance_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub params: ModelParams,
    pub exponents: EtaExponents,
    pub n_cells: usize,
    pub finest_width: f64,
    pub rows: Vec<ScalingRow>,
    pub fits: ScalingFits,
    pub targets: ScalingTargets,
    pub flags: ScalingFlags,
}

fn sweep_row(exp: &EtaExponents, model: &Model, u0: &RadialField, eta: f64) -> Result<ScalingRow> {
    let c = build_u_hat(exp, eta, u0)?;
    let grid = u0.grid();
    let v_eta = solve_screened_poisson(&c.u_eta)?.v;
    let cross_term = c.u_eta.inner(&v_eta)?;
    let potential_term = potential_integral(&c.u_hat, model)?;
    let energy = energy_reduced(&c.u_hat, &c.v_hat, model)?;
    let diff = c.u_hat.zip_with(u0, |a, b| a - b)?;
    let distance = grid.lp_norm(&diff, exp.p)?;
    let pointwise_bound_holds = grid
        .centers()
        .iter()
        .zip(c.u_eta.values())
        .all(|(&r, &x)| x <= r.powf(-exp.gamma) * (1.0 + 1e-12));
    Ok(ScalingRow {
        eta,
        cross_term,
        potential_term,
        energy,
        distance,
        distance_bound: distance_bound_pow(exp, eta, grid).powf(1.0 / exp.p),
        spike_mass: c.u_eta.integral(),
        spike_mass_bound: spike_mass_bound(exp, eta, grid.dim()),
        pointwise_bound_holds,
    })
}

/// Evaluates the construction for every `eta` (in parallel on the current
/// rayon pool) and fits log-log slopes over the smaller half of the range.
pub fn sweep_scalings(exp: &EtaExponents, model: &Model, u0: &RadialField, etas: &[f64]) -> Result<ScalingReport> {
    let params = *model.params();
    if u0.grid().dim() != params.dim || (u0.grid().radius() - params.radius).abs() > 1e-12 * params.radius {
        return Err(Error::Config("base datum grid does not match the model's N and R".into()));
    }
    if etas.len() < MIN_SWEEP_POINTS {
        return Err(Error::Config(format!("need at least {MIN_SWEEP_POINTS} eta values, got {}", etas.len())));
    }
    let mut etas = etas.to_vec();
    for &eta in &etas {
        check_eta(eta)?;
    }
    etas.sort_by(|a, b| b.total_cmp(a));
    if etas.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("eta values must be distinct".into()));
    }
    let (eta_max, eta_min) = (etas[0], etas[etas.len() - 1]);
    if (eta_max / eta_min).log10() < MIN_SWEEP_DECADES {
        return Err(Error::Config(format!("eta values must span at least {MIN_SWEEP_DECADES} decades")));
    }
    check_resolution(u0.grid(), eta_min)?;

    let rows = etas
        .par_iter()
        .map(|&eta| sweep_row(exp, model, u0, eta))
        .collect::<Result<Vec<_>>>()?;

    let k = rows.len().div_ceil(2).max(3);
    let tail = &rows[rows.len() - k..];
    let x: Vec<f64> = tail.iter().map(|r| r.eta).collect();
    let col = |f: fn(&ScalingRow) -> f64| tail.iter().map(f).collect::<Vec<f64>>();
    let cross_fit = fit_loglog(&x, &col(|r| r.cross_term));
    let potential_fit = fit_loglog(&x, &col(|r| r.potential_term));
    let energy_fit = fit_loglog(&x, &col(|r| -r.energy));

    let targets = ScalingTargets {
        cross_term_exponent: exp.cross_term_exponent(params.dim),
        potential_exponent: exp.potential_exponent(&params),
    };
    let last = rows.last().expect("at least five rows");
    let first = &rows[0];
    let flags = ScalingFlags {
        cross_slope: cross_fit.is_some_and(|f| (f.slope - targets.cross_term_exponent).abs() <= CROSS_SLOPE_TOL),
        potential_slope: match (potential_fit, energy_fit) {
            (Some(g), Some(e)) => g.slope >= targets.potential_exponent - POTENTIAL_SLOPE_TOL && g.slope > e.slope,
            _ => false,
        },
        energy_divergence: last.energy < 0.0 && tail.windows(2).all(|w| w[1].energy < w[0].energy),
        energy_slope: energy_fit.is_some_and(|f| (f.slope - targets.cross_term_exponent).abs() <= ENERGY_SLOPE_TOL),
        distance_monotone: rows.windows(2).all(|w| w[1].distance < w[0].distance),
        distance_reduction: last.distance < DISTANCE_REDUCTION * first.distance,
        exponent_ordering: exponent_ordering_holds(exp, params.dim),
        pointwise_bound: rows.iter().all(|r| r.pointwise_bound_holds),
        spike_mass_bound: rows.iter().all(|r| r.spike_mass <= r.spike_mass_bound),
        distance_bound: rows.iter().all(|r| r.distance <= r.distance_bound),
    };
    Ok(ScalingReport {
        params,
        exponents: *exp,
        n_cells: u0.grid().len(),
        finest_width: u0.grid().finest_width(),
        fits: ScalingFits {
            cross_term: cross_fit,
            potential_term: potential_fit,
            energy: energy_fit,
            fit_range: (x[x.len() - 1], x[0]),
        },
        rows,
        targets,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn params(dim: usize, alpha: f64) -> ModelParams {
        ModelParams::new(dim, 1.0, -alpha)
    }

    #[test]
    fn reference_selection_in_three_dimensions() {
        let exp = select_exponents(&params(3, -1.0), 1.0).unwrap();
        assert!((exp.gamma - 2.75).abs() < 1e-15);
        assert!((exp.delta_init - 0.875).abs() < 1e-15);
        assert_eq!(exp.q, 1.0);
        assert!(exponent_ordering_holds(&exp, 3));
    }

    #[test]
    fn four_dimensional_selection_avoids_four() {
        let exp = select_exponents(&params(4, -1.0), 1.0).unwrap();
        assert!((exp.gamma - 3.5).abs() < 1e-15);
        exp.validate(&params(4, -1.0)).unwrap();
    }

    #[test]
    fn excised_point_splits_the_window() {
        // N = 5, p = 1: window (3.5, 5) minus {4}; longest piece (4, 5).
        let exp = select_exponents(&params(5, -1.0), 1.0).unwrap();
        assert!((exp.gamma - 4.5).abs() < 1e-15);
    }

    #[test]
    fn strongly_negative_alpha_uses_the_floor() {
        let p = params(3, -2.5);
        let exp = select_exponents(&p, 1.0).unwrap();
        let expected_q = 0.5 * (2.0 - 2.0 * exp.gamma + 3.0) / (p.alpha() + 2.0);
        assert!((exp.q - expected_q).abs() < 1e-15);
        assert!(exp.q > 0.0);
    }

    #[test]
    fn infeasible_choices_are_named() {
        let err = select_exponents(&params(3, -0.5), 1.0).unwrap_err();
        assert!(matches!(err, Error::Infeasible(Constraint::SupercriticalAlpha)));
        assert!(err.to_string().contains("-alpha > 2/N"));
        let err = select_exponents(&params(3, -1.0), 1.3).unwrap_err();
        assert!(matches!(err, Error::Infeasible(Constraint::NormRange)));
        let err = select_exponents(&params(3, -1.0), 0.5).unwrap_err();
        assert!(matches!(err, Error::Infeasible(Constraint::NormAtLeastOne)));
        assert!(select_exponents(&ModelParams::new(3, 1.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn validate_catches_each_inequality() {
        let p = params(3, -1.0);
        let good = EtaExponents { gamma: 2.75, delta_init: 0.875, q: 1.0, p: 1.0 };
        assert_eq!(good.violated(&p), None);
        let check = |e: EtaExponents, c: Constraint| assert_eq!(e.violated(&p), Some(c));
        check(EtaExponents { gamma: 2.4, ..good }, Constraint::SpikeWindow);
        check(EtaExponents { p: 1.2, ..good }, Constraint::SpikeVersusNorm);
        check(EtaExponents { delta_init: 1.0, ..good }, Constraint::SupportRateRange);
        check(EtaExponents { delta_init: 0.7, ..good }, Constraint::SupportRateVersusAlpha);
        check(EtaExponents { q: 0.0, ..good }, Constraint::FloorExponent);
    }

    #[test]
    fn spike_versus_alpha_on_weak_model() {
        let weak = params(3, -0.8);
        let e = EtaExponents { gamma: 2.75, delta_init: 0.9, q: 1.0, p: 1.0 };
        assert_eq!(e.violated(&weak), Some(Constraint::SupportRateVersusAlpha));
        let weaker = ModelParams::new(3, 1.0, 0.72);
        let e = EtaExponents { gamma: 2.6, ..e };
        assert_eq!(e.violated(&weaker), Some(Constraint::SpikeVersusAlpha));
    }

    proptest! {
        #[test]
        fn selection_always_satisfies_every_inequality(
            dim in 3usize..8,
            alpha in -6.0f64..-0.1,
            frac in 0.0f64..1.0,
        ) {
            let p = params(dim, alpha);
            let norm = 1.0 + frac * (norm_bound(&p) - 1.0).max(0.0) * 0.999;
            match select_exponents(&p, norm) {
                Ok(e) => {
                    prop_assert_eq!(e.violated(&p), None);
                    prop_assert!(exponent_ordering_holds(&e, dim));
                }
                Err(Error::Infeasible(_)) => prop_assert!(-alpha <= 2.0 / dim as f64 || norm >= norm_bound(&p)),
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }

    #[test]
    fn spike_profile_values() {
        let e = EtaExponents { gamma: 2.75, delta_init: 0.875, q: 1.0, p: 1.0 };
        let eta: f64 = 0.1;
        let top = eta.powf(-2.75) - (eta.powf(1.75) + eta * eta).powf(-1.375);
        assert!((u_eta_profile(&e, eta, 0.0) - top).abs() < 1e-10);
        assert!((top - 424.4).abs() < 0.1);
        let r_eta = e.support_radius(eta);
        assert_eq!(u_eta_profile(&e, eta, r_eta), 0.0);
        assert_eq!(u_eta_profile(&e, eta, 0.5), 0.0);
        assert!(u_eta_profile(&e, eta, r_eta * (1.0 - 1e-9)) < 1e-6);
    }

    #[test]
    fn u_hat_floor_and_mass() {
        let e = EtaExponents { gamma: 2.75, delta_init: 0.875, q: 1.0, p: 1.0 };
        let g = Arc::new(RadialGrid::refined(3, 1.0, 300, 1e-3).unwrap());
        let c = build_u_hat(&e, 0.05, &RadialField::zeros(g)).unwrap();
        assert!((c.u_hat.min() - 0.05).abs() < 1e-15);
        let gap = (c.v_hat.integral() - c.u_hat.integral()).abs();
        assert!(gap <= 1e-9 * c.u_hat.integral());
        assert!(c.u_eta.integral() <= spike_mass_bound(&e, 0.05, 3));
        assert!(build_u_hat(&e, 1.5, &c.base_u0).is_err());
    }

    #[test]
    fn loglog_fit_recovers_power_laws() {
        let x = [0.1, 0.05, 0.02, 0.01];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        let f = fit_loglog(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.std_error < 1e-12);
        assert!(fit_loglog(&x, &[1.0, -1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn sweep_rejects_bad_inputs() {
        let model = Model::power_law(ModelParams::new(3, 0.0, 0.0)).unwrap();
        let e = select_exponents(model.params(), 1.0).unwrap();
        let coarse = Arc::new(RadialGrid::uniform(3, 1.0, 100).unwrap());
        let u0 = RadialField::zeros(coarse);
        assert!(matches!(
            sweep_scalings(&e, &model, &u0, &default_etas()),
            Err(Error::Resolution(_))
        ));
        assert!(sweep_scalings(&e, &model, &u0, &[0.1, 0.05]).is_err());
        assert!(sweep_scalings(&e, &model, &u0, &geometric_etas(0.2, 0.1, 6)).is_err());
        assert!(sweep_scalings(&e, &model, &u0, &[]).is_err());
    }
}
