//! The model family: diffusion `D`, sensitivity `S`, the potential `G` built
//! from `D / S`, and the parameter-space regime boundaries.

mod conditions;
mod potential;

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use conditions::{
    check_condition_13, check_growth_condition, power_law_sufficient_condition, Condition13Params,
    Condition13Report, GrowthReport,
};
pub use potential::{eval_g, PotentialTable};

/// Exponents, dimension, domain radius and structural constants.
///
/// The built-in family is `D(u) = (u+1)^(m-1)`, `S(u) = u (u+1)^(sigma-1)`;
/// `c_d`, `c_s` are the constants of the lower bound on `D` and the upper
/// bound on `S`, `c_g` the growth constant tested against `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub m: f64,
    pub sigma: f64,
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "one")]
    pub c_d: f64,
    #[serde(default = "one")]
    pub c_s: f64,
    #[serde(default = "one")]
    pub c_g: f64,
}

fn default_radius() -> f64 {
    1.0
}

fn one() -> f64 {
    1.0
}

impl ModelParams {
    /// Built-in family on the unit ball with unit structural constants.
    pub fn new(dim: usize, m: f64, sigma: f64) -> Self {
        ModelParams {
            m,
            sigma,
            dim,
            radius: 1.0,
            c_d: 1.0,
            c_s: 1.0,
            c_g: 1.0,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_growth_constant(mut self, c_g: f64) -> Self {
        self.c_g = c_g;
        self
    }

    /// `alpha = m - sigma - 1`, so that `D / S` behaves like `u^alpha`.
    pub fn alpha(&self) -> f64 {
        self.m - self.sigma - 1.0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.dim == 0 {
            return bad("dimension N must be a positive integer".into());
        }
        if !self.m.is_finite() || !self.sigma.is_finite() {
            return bad(format!("exponents must be finite (m = {}, sigma = {})", self.m, self.sigma));
        }
        for (name, v) in [
            ("radius R", self.radius),
            ("c_D", self.c_d),
            ("C_S", self.c_s),
            ("C_G", self.c_g),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied diffusion and sensitivity.
#[derive(Clone)]
pub struct CustomKernel {
    diffusion: ScalarFn,
    sensitivity: ScalarFn,
}

impl CustomKernel {
    pub fn new(
        diffusion: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sensitivity: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CustomKernel {
            diffusion: Arc::new(diffusion),
            sensitivity: Arc::new(sensitivity),
        }
    }
}

#[derive(Clone)]
pub enum Kernel {
    PowerLaw,
    Custom(CustomKernel),
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::PowerLaw => f.write_str("PowerLaw"),
            Kernel::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Parameters plus the `(D, S)` pair, with lazily built caches for `G`.
///
/// Immutable after construction; cheap to share behind an `Arc`.
#[derive(Debug)]
pub struct Model {
    params: ModelParams,
    kernel: Kernel,
    table: OnceLock<std::result::Result<PotentialTable, String>>,
    g_zero: OnceLock<std::result::Result<f64, String>>,
}

impl Clone for Model {
    fn clone(&self) -> Self {
        Model {
            params: self.params,
            kernel: self.kernel.clone(),
            table: self.table.clone(),
            g_zero: self.g_zero.clone(),
        }
    }
}

impl Model {
    pub fn power_law(params: ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(Model {
            params,
            kernel: Kernel::PowerLaw,
            table: OnceLock::new(),
            g_zero: OnceLock::new(),
        })
    }

    /// A model with user-supplied `D` and `S`. `m`, `sigma` in `params` are
    /// then only the reference exponents the structural checks compare with.
    pub fn custom(params: ModelParams, kernel: CustomKernel) -> Result<Self> {
        params.validate()?;
        Ok(Model {
            params,
            kernel: Kernel::Custom(kernel),
            table: OnceLock::new(),
            g_zero: OnceLock::new(),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn diffusion(&self, u: f64) -> f64 {
        match &self.kernel {
            Kernel::PowerLaw => (u + 1.0).powf(self.params.m - 1.0),
            Kernel::Custom(k) => (k.diffusion)(u),
        }
    }

    pub fn sensitivity(&self, u: f64) -> f64 {
        match &self.kernel {
            Kernel::PowerLaw => u * (u + 1.0).powf(self.params.sigma - 1.0),
            Kernel::Custom(k) => (k.sensitivity)(u),
        }
    }

    /// `D(xi) / S(xi)` for `xi > 0`.
    pub fn ratio(&self, xi: f64) -> f64 {
        match &self.kernel {
            Kernel::PowerLaw => (xi + 1.0).powf(self.params.m - self.params.sigma) / xi,
            Kernel::Custom(_) => self.diffusion(xi) / self.sensitivity(xi),
        }
    }

    /// `G(u)` from the cached table (direct quadrature outside its range).
    /// `u = 0` returns the continuous extension `G(0+)`.
    pub fn potential(&self, u: f64) -> Result<f64> {
        if u < 0.0 || u.is_nan() {
            return Err(Error::Domain(format!("G evaluated at u = {u}")));
        }
        if u == 0.0 {
            return self.potential_at_zero();
        }
        self.table()?.eval(self, u)
    }

    /// `G'(u) = int_1^u D/S`, from the table.
    pub fn potential_slope(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(Error::Domain(format!("G' evaluated at u = {u}")));
        }
        self.table()?.eval_slope(self, u)
    }

    /// `G(0+)`, finite whenever `xi D(xi) / S(xi)` is integrable at 0.
    pub fn potential_at_zero(&self) -> Result<f64> {
        self.g_zero
            .get_or_init(|| potential::g_at_zero(self).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Domain)
    }

    pub fn table(&self) -> Result<&PotentialTable> {
        self.table
            .get_or_init(|| PotentialTable::build(self).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Domain(e.clone()))
    }
}

fn check_nonnegative(u: f64) -> Result<()> {
    if u >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("expected u >= 0, got {u}")))
    }
}

/// Diffusion of the built-in family, `(u+1)^(m-1)`.
pub fn eval_d(params: &ModelParams, u: f64) -> Result<f64> {
    check_nonnegative(u)?;
    Ok((u + 1.0).powf(params.m - 1.0))
}

/// Sensitivity of the built-in family, `u (u+1)^(sigma-1)`.
pub fn eval_s(params: &ModelParams, u: f64) -> Result<f64> {
    check_nonnegative(u)?;
    Ok(u * (u + 1.0).powf(params.sigma - 1.0))
}

/// Which qualitative behaviour the exponents admit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    /// `sigma < m - (N-2)/N`: every solution is global and bounded.
    pub bounded_regime: bool,
    /// `sigma <= 0`: every solution is global.
    pub global_regime: bool,
    /// `-alpha > 2/N` with `N >= 3`: unbounded radial solutions exist near any radial datum.
    pub blowup_regime: bool,
    /// Global and unbounded: blow-up at time infinity.
    pub infinite_time_blowup: bool,
}

pub fn classify_regime(params: &ModelParams) -> RegimeVerdict {
    let n = params.dim as f64;
    // Both strict inequalities compare sigma against the same threshold, so
    // the bounded and blow-up regimes cannot overlap in floating point.
    let threshold = params.m - (n - 2.0) / n;
    let bounded_regime = params.sigma < threshold;
    let global_regime = params.sigma <= 0.0;
    let blowup_regime = params.dim >= 3 && params.sigma > threshold;
    RegimeVerdict {
        bounded_regime,
        global_regime,
        blowup_regime,
        infinite_time_blowup: global_regime && blowup_regime,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diffusion_values() {
        assert_eq!(eval_d(&ModelParams::new(3, 1.0, 0.0), 5.0).unwrap(), 1.0);
        assert_eq!(eval_d(&ModelParams::new(3, 2.0, 0.0), 3.0).unwrap(), 4.0);
        assert!((eval_d(&ModelParams::new(3, 0.5, 0.0), 3.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(eval_d(&ModelParams::new(3, 1.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn sensitivity_values() {
        assert_eq!(eval_s(&ModelParams::new(3, 1.0, 3.7), 0.0).unwrap(), 0.0);
        assert_eq!(eval_s(&ModelParams::new(3, 1.0, 1.0), 7.0).unwrap(), 7.0);
        assert!((eval_s(&ModelParams::new(3, 1.0, -1.0), 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(eval_s(&ModelParams::new(3, 1.0, 1.0), -0.1).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(Model::power_law(ModelParams::new(0, 1.0, 1.0)).is_err());
        assert!(Model::power_law(ModelParams::new(3, 1.0, 1.0).with_radius(-1.0)).is_err());
        assert!(Model::power_law(ModelParams::new(3, f64::NAN, 1.0)).is_err());
    }

    #[test]
    fn regime_examples() {
        let v = classify_regime(&ModelParams::new(3, 1.0, 0.0));
        assert!(v.bounded_regime && v.global_regime && !v.blowup_regime);

        let v = classify_regime(&ModelParams::new(3, 0.0, 0.0));
        assert!(!v.bounded_regime && v.global_regime && v.blowup_regime && v.infinite_time_blowup);

        let v = classify_regime(&ModelParams::new(3, 1.0, 1.0));
        assert!(!v.bounded_regime && !v.global_regime && v.blowup_regime);
        assert!(!v.infinite_time_blowup);
    }

    #[test]
    fn boundary_case_is_neither_bounded_nor_blowup() {
        // sigma exactly on the threshold m - (N-2)/N
        let v = classify_regime(&ModelParams::new(4, 1.0, 0.5));
        assert!(!v.bounded_regime && !v.blowup_regime);
    }

    proptest! {
        #[test]
        fn bounded_and_blowup_exclusive(m in -3.0f64..3.0, sigma in -3.0f64..3.0, dim in 1usize..8) {
            let v = classify_regime(&ModelParams::new(dim, m, sigma));
            prop_assert!(!(v.bounded_regime && v.blowup_regime));
            prop_assert_eq!(v.infinite_time_blowup, v.global_regime && v.blowup_regime);
        }

        #[test]
        fn builtin_family_meets_structural_bounds(m in -2.0f64..3.0, sigma in -2.0f64..2.0, u in 0.0f64..1e4) {
            let p = ModelParams::new(3, m, sigma);
            let d = eval_d(&p, u).unwrap();
            let s = eval_s(&p, u).unwrap();
            prop_assert!(d >= p.c_d * (u + 1.0).powf(m - 1.0));
            prop_assert!(s <= p.c_s * u * (u + 1.0).powf(sigma - 1.0));
            prop_assert!(d > 0.0);
        }
    }
}
