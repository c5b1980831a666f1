//! Sampled checks of the structural hypotheses on `D`, `S` and `G`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::integrate;

use super::potential::g_direct;
use super::{Kernel, Model, ModelParams};

const GROWTH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthReport {
    pub holds: bool,
    pub c_g: f64,
    /// `max G(z) / (1 + z^(2+alpha))` over the samples: the smallest `C_G`
    /// that passes.
    pub worst_ratio: f64,
    pub worst_at: f64,
}

/// Checks `G(z) <= C_G (1 + z^(2+alpha))` at every sample.
pub fn check_growth_condition(model: &Model, zeta_samples: &[f64]) -> Result<GrowthReport> {
    let params = model.params();
    let exponent = 2.0 + params.alpha();
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut worst_at = f64::NAN;
    for &z in zeta_samples {
        if !(z > 0.0) {
            return Err(Error::Domain(format!("growth samples must be positive, got {z}")));
        }
        let g = g_direct(model, z, GROWTH_TOL * z.max(1.0))?;
        let ratio = g / (1.0 + z.powf(exponent));
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_at = z;
        }
    }
    Ok(GrowthReport {
        holds: worst_ratio <= params.c_g,
        c_g: params.c_g,
        worst_ratio,
        worst_at,
    })
}

/// Sampling parameters for the superlinear-growth condition
/// `int_s0^s tau D/S <= (N-2-delta)/N int_s0^s int_s0^r D/S + K s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition13Params {
    pub s0: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub delta13: f64,
    pub s_max: f64,
    pub n_samples: usize,
}

impl Default for Condition13Params {
    fn default() -> Self {
        Condition13Params {
            s0: 1.0,
            k: 10.0,
            delta13: 0.1,
            s_max: 1e3,
            n_samples: 64,
        }
    }
}

impl Condition13Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.s0 >= 1.0) {
            return Err(Error::InvalidParams(format!("s0 must be >= 1, got {}", self.s0)));
        }
        if !(self.k >= 0.0) {
            return Err(Error::InvalidParams(format!("K must be >= 0, got {}", self.k)));
        }
        if !(self.delta13 > 0.0) {
            return Err(Error::InvalidParams(format!("delta must be > 0, got {}", self.delta13)));
        }
        if !(self.s_max >= self.s0) || !self.s_max.is_finite() {
            return Err(Error::InvalidParams(format!(
                "s_max must be finite and >= s0, got {}",
                self.s_max
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidParams("n_samples must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Condition13Report {
    pub holds: bool,
    /// `max (LHS - RHS)` over the samples; non-positive when the condition holds.
    pub max_violation: f64,
    pub worst_at: f64,
    pub samples: usize,
    pub warning: Option<String>,
}

fn log_ratio(model: &Model, t: f64) -> f64 {
    let xi = t.exp();
    match model.kernel() {
        Kernel::PowerLaw => {
            let p = model.params();
            (xi + 1.0).powf(p.m - p.sigma)
        }
        Kernel::Custom(_) => xi * model.ratio(xi),
    }
}

pub fn check_condition_13(model: &Model, c13: &Condition13Params) -> Result<Condition13Report> {
    c13.validate()?;
    let n = model.params().dim as f64;
    let prefactor = (n - 2.0 - c13.delta13) / n;
    let warning = (prefactor <= 0.0).then(|| {
        format!(
            "right-hand side prefactor (N-2-delta)/N = {prefactor:.4} is not positive; \
             the condition is vacuous for N = {} and delta = {}",
            model.params().dim,
            c13.delta13
        )
    });

    let samples: Vec<f64> = if c13.s_max == c13.s0 || c13.n_samples == 1 {
        vec![c13.s0]
    } else {
        let ratio = (c13.s_max / c13.s0).ln();
        (0..c13.n_samples)
            .map(|k| c13.s0 * (ratio * k as f64 / (c13.n_samples - 1) as f64).exp())
            .collect()
    };

    let lo = c13.s0.ln();
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_at = c13.s0;
    let mut holds = true;
    for &s in &samples {
        let hi = s.ln();
        // xi D/S and (s - xi) D/S in t = ln xi, each carrying the Jacobian xi.
        let lhs = integrate(|t| t.exp() * log_ratio(model, t), lo, hi, 1e-12, 1e-12)?.value;
        let double = integrate(|t| (s - t.exp()) * log_ratio(model, t), lo, hi, 1e-12, 1e-12)?.value;
        let rhs = prefactor * double + c13.k * s;
        let violation = lhs - rhs;
        if violation > 1e-9 * (1.0 + rhs.abs()) {
            holds = false;
        }
        if violation > max_violation {
            max_violation = violation;
            worst_at = s;
        }
    }
    Ok(Condition13Report {
        holds,
        max_violation,
        worst_at,
        samples: samples.len(),
        warning,
    })
}

/// Sufficient condition for the power-law family: `u^beta D/S -> c0 > 0`
/// with `beta = -alpha > 2/N`.
pub fn power_law_sufficient_condition(params: &ModelParams) -> bool {
    -params.alpha() > 2.0 / params.dim as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(dim: usize, m: f64, sigma: f64) -> Model {
        Model::power_law(ModelParams::new(dim, m, sigma)).unwrap()
    }

    fn log_samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn growth_holds_for_generous_constant() {
        let m = Model::power_law(ModelParams::new(3, 1.0, 1.0).with_growth_constant(10.0)).unwrap();
        let r = check_growth_condition(&m, &log_samples(-3.0, 3.0, 61)).unwrap();
        assert!(r.holds);
        // G(0+) = 1 dominates near the origin; ln(z) bounds the ratio above.
        assert!(r.worst_ratio < 6.91);
    }

    #[test]
    fn growth_at_one_is_trivial() {
        let m = Model::power_law(ModelParams::new(3, 2.0, -3.0).with_growth_constant(1e-12)).unwrap();
        let r = check_growth_condition(&m, &[1.0]).unwrap();
        assert!(r.holds);
        assert_eq!(r.worst_ratio, 0.0);
    }

    #[test]
    fn growth_fails_for_tiny_constant() {
        let m = Model::power_law(ModelParams::new(3, 1.0, 1.0).with_growth_constant(1e-6)).unwrap();
        let r = check_growth_condition(&m, &log_samples(-3.0, 3.0, 61)).unwrap();
        assert!(!r.holds);
        assert!(r.worst_ratio > 1e-6);
    }

    #[test]
    fn growth_rejects_nonpositive_samples() {
        assert!(check_growth_condition(&model(3, 1.0, 1.0), &[1.0, 0.0]).is_err());
    }

    #[test]
    fn condition_13_holds_for_classical_exponents() {
        let c13 = Condition13Params {
            s0: 1.0,
            k: 10.0,
            delta13: 0.1,
            s_max: 1e3,
            n_samples: 200,
        };
        let r = check_condition_13(&model(3, 1.0, 1.0), &c13).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.warning.is_none());
    }

    #[test]
    fn condition_13_fails_when_ratio_grows() {
        let c13 = Condition13Params {
            s0: 1.0,
            k: 10.0,
            delta13: 0.1,
            s_max: 1e3,
            n_samples: 200,
        };
        let r = check_condition_13(&model(3, 2.0, 0.0), &c13).unwrap();
        assert!(!r.holds);
        assert!(r.max_violation > 0.0);
    }

    #[test]
    fn condition_13_empty_range() {
        let c13 = Condition13Params {
            s0: 1.0,
            k: 10.0,
            delta13: 0.1,
            s_max: 1.0,
            n_samples: 16,
        };
        let r = check_condition_13(&model(3, 2.0, 0.0), &c13).unwrap();
        assert!(r.holds);
        assert_eq!(r.samples, 1);
    }

    #[test]
    fn condition_13_warns_in_low_dimension() {
        let r = check_condition_13(&model(2, 1.0, 1.0), &Condition13Params::default()).unwrap();
        assert!(r.warning.is_some());
    }

    #[test]
    fn condition_13_agrees_with_closed_form() {
        // D/S = 1/tau: LHS = s - 1, double integral = s ln s - s + 1.
        let c13 = Condition13Params {
            s0: 1.0,
            k: 0.0,
            delta13: 0.9,
            s_max: 50.0,
            n_samples: 2,
        };
        let r = check_condition_13(&model(3, 1.0, 1.0), &c13).unwrap();
        let s = 50.0f64;
        let expected = (s - 1.0) - (0.1 / 3.0) * (s * s.ln() - s + 1.0);
        assert!(!r.holds);
        assert!((r.worst_at - 50.0).abs() < 1e-12);
        assert!((r.max_violation - expected).abs() < 1e-10 * s, "{} vs {expected}", r.max_violation);
    }

    #[test]
    fn sufficient_condition_matches_supercritical_alpha() {
        assert!(power_law_sufficient_condition(&ModelParams::new(3, 1.0, 1.0)));
        assert!(!power_law_sufficient_condition(&ModelParams::new(3, 2.0, 0.0)));
    }
}
