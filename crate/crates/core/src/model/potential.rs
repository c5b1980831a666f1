//! The potential `G(u) = int_1^u int_1^s D/S dxi ds` and its slope `G'`.
//!
//! Integrals in `xi` are taken in the variable `t = ln xi`; the `1/xi`
//! endpoint singularity of `D/S` at the origin then disappears and the
//! integrands are smooth on the whole line. The outer integral is removed by
//! parts:
//!
//! ```text
//! G(u) = u G'(u) - J(u),    J(u) = int_1^u xi D(xi)/S(xi) dxi
//! ```
//!
//! and `J` has a closed form for the built-in power-law family.

use crate::error::{Error, Result};
use crate::quad::integrate;

use super::{Kernel, Model, ModelParams};

/// Lower end of the tabulated range of `u`.
pub const TABLE_U_MIN: f64 = 1e-6;
/// Upper end of the tabulated range of `u`.
pub const TABLE_U_MAX: f64 = 1e8;
pub const TABLE_KNOTS: usize = 8192;

const TABLE_FALLBACK_TOL: f64 = 1e-10;

/// `d/dt G'(e^t) = e^t (D/S)(e^t)`.
fn slope_integrand(model: &Model, t: f64) -> f64 {
    match model.kernel() {
        Kernel::PowerLaw => {
            let p = model.params();
            (t.exp() + 1.0).powf(p.m - p.sigma)
        }
        Kernel::Custom(_) => {
            let xi = t.exp();
            xi * model.ratio(xi)
        }
    }
}

/// `d/dt J(e^t) = e^(2t) (D/S)(e^t)`.
fn moment_integrand(model: &Model, t: f64) -> f64 {
    let xi = t.exp();
    match model.kernel() {
        Kernel::PowerLaw => {
            let p = model.params();
            xi * (xi + 1.0).powf(p.m - p.sigma)
        }
        Kernel::Custom(_) => xi * xi * model.ratio(xi),
    }
}

fn power_law_moment(params: &ModelParams, u: f64) -> f64 {
    let a = params.m - params.sigma + 1.0;
    let log_ratio = ((u + 1.0) / 2.0).ln();
    if a == 0.0 {
        log_ratio
    } else {
        2f64.powf(a) * (a * log_ratio).exp_m1() / a
    }
}

pub(crate) fn g_prime_direct(model: &Model, u: f64, abs_tol: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!("G' requires u > 0, got {u}")));
    }
    Ok(integrate(|t| slope_integrand(model, t), 0.0, u.ln(), abs_tol, 1e-15)?.value)
}

pub(crate) fn moment_direct(model: &Model, u: f64, abs_tol: f64) -> Result<f64> {
    match model.kernel() {
        Kernel::PowerLaw => Ok(power_law_moment(model.params(), u)),
        Kernel::Custom(_) => {
            Ok(integrate(|t| moment_integrand(model, t), 0.0, u.ln(), abs_tol, 1e-15)?.value)
        }
    }
}

pub(crate) fn g_direct(model: &Model, u: f64, tol: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::Domain(format!("G requires finite u > 0, got {u}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let slope = g_prime_direct(model, u, 0.5 * tol / u.max(1.0))?;
    let moment = moment_direct(model, u, 0.5 * tol)?;
    Ok(u * slope - moment)
}

pub(crate) fn g_at_zero(model: &Model) -> Result<f64> {
    match model.kernel() {
        Kernel::PowerLaw => Ok(-power_law_moment(model.params(), 0.0)),
        Kernel::Custom(_) => {
            let q = integrate(|xi| xi * model.ratio(xi), 0.0, 1.0, 1e-13, 1e-13)?;
            Ok(q.value)
        }
    }
}

/// `G(u)` for the built-in family, to absolute accuracy `tol`.
pub fn eval_g(params: &ModelParams, u: f64, tol: f64) -> Result<f64> {
    let model = Model::power_law(*params)?;
    g_direct(&model, u, tol)
}

#[derive(Debug, Clone)]
struct HermiteTable {
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl HermiteTable {
    /// Tabulates `F(t) = int_0^t f` at the knots, with exact slopes `f`.
    fn build(f: impl Fn(f64) -> f64, t0: f64, dt: f64, knots: usize) -> Result<Self> {
        let knot = |j: usize| t0 + dt * j as f64;
        let origin = ((-t0 / dt).round() as usize).min(knots - 1);
        let mut values = vec![0.0; knots];
        values[origin] = integrate(&f, 0.0, knot(origin), 1e-15, 1e-15)?.value;
        for j in origin + 1..knots {
            values[j] = values[j - 1] + integrate(&f, knot(j - 1), knot(j), 1e-16, 1e-15)?.value;
        }
        for j in (0..origin).rev() {
            values[j] = values[j + 1] - integrate(&f, knot(j), knot(j + 1), 1e-16, 1e-15)?.value;
        }
        let mut slopes: Vec<f64> = (0..knots).map(|j| f(knot(j))).collect();
        limit_monotone(&values, &mut slopes, dt);
        Ok(HermiteTable { values, slopes })
    }

    fn eval(&self, j: usize, s: f64, dt: f64) -> f64 {
        let (y0, y1) = (self.values[j], self.values[j + 1]);
        let (m0, m1) = (self.slopes[j] * dt, self.slopes[j + 1] * dt);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1
    }
}

/// Fritsch-Carlson limiter: keeps the cubic Hermite interpolant monotone on
/// every interval where the data are monotone.
fn limit_monotone(values: &[f64], slopes: &mut [f64], dt: f64) {
    for j in 0..values.len() - 1 {
        let secant = (values[j + 1] - values[j]) / dt;
        if secant == 0.0 {
            slopes[j] = 0.0;
            slopes[j + 1] = 0.0;
            continue;
        }
        let a = slopes[j] / secant;
        let b = slopes[j + 1] / secant;
        if a < 0.0 {
            slopes[j] = 0.0;
        }
        if b < 0.0 {
            slopes[j + 1] = 0.0;
        }
        let r2 = a * a + b * b;
        if r2 > 9.0 {
            let tau = 3.0 / r2.sqrt();
            slopes[j] = tau * a * secant;
            slopes[j + 1] = tau * b * secant;
        }
    }
}

/// Log-spaced cache of `G'` (and `J` for user kernels) with monotone cubic
/// Hermite interpolation in `ln u`.
#[derive(Debug, Clone)]
pub struct PotentialTable {
    t0: f64,
    dt: f64,
    slope: HermiteTable,
    moment: Option<HermiteTable>,
}

impl PotentialTable {
    pub fn build(model: &Model) -> Result<Self> {
        let t0 = TABLE_U_MIN.ln();
        let dt = (TABLE_U_MAX.ln() - t0) / (TABLE_KNOTS - 1) as f64;
        let slope = HermiteTable::build(|t| slope_integrand(model, t), t0, dt, TABLE_KNOTS)?;
        let moment = match model.kernel() {
            Kernel::PowerLaw => None,
            Kernel::Custom(_) => Some(HermiteTable::build(
                |t| moment_integrand(model, t),
                t0,
                dt,
                TABLE_KNOTS,
            )?),
        };
        Ok(PotentialTable {
            t0,
            dt,
            slope,
            moment,
        })
    }

    fn locate(&self, u: f64) -> Option<(usize, f64)> {
        let x = (u.ln() - self.t0) / self.dt;
        if !(x >= 0.0) || x > (TABLE_KNOTS - 1) as f64 {
            return None;
        }
        let j = (x.floor() as usize).min(TABLE_KNOTS - 2);
        Some((j, x - j as f64))
    }

    pub(crate) fn eval_slope(&self, model: &Model, u: f64) -> Result<f64> {
        match self.locate(u) {
            Some((j, s)) => Ok(self.slope.eval(j, s, self.dt)),
            None => g_prime_direct(model, u, TABLE_FALLBACK_TOL),
        }
    }

    pub(crate) fn eval(&self, model: &Model, u: f64) -> Result<f64> {
        let Some((j, s)) = self.locate(u) else {
            return g_direct(model, u, TABLE_FALLBACK_TOL * u.max(1.0));
        };
        let slope = self.slope.eval(j, s, self.dt);
        let moment = match &self.moment {
            Some(table) => table.eval(j, s, self.dt),
            None => power_law_moment(model.params(), u),
        };
        Ok(u * slope - moment)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CustomKernel;

    /// Brute-force oracle: cumulative composite Simpson in `tau = ln s` for
    /// both integrals, with no integration by parts.
    fn nested_simpson(m: f64, sigma: f64, u: f64) -> f64 {
        let h = |xi: f64| (xi + 1.0).powf(m - sigma) / xi;
        let end = u.ln();
        let panels = 40_000usize;
        let step = end / panels as f64;
        // inner(tau) = int_0^tau e^t h(e^t) dt, cumulative over half-steps
        let f_in = |t: f64| t.exp() * h(t.exp());
        let mut inner = vec![0.0; panels + 1];
        for k in 0..panels {
            let a = step * k as f64;
            let b = a + step;
            inner[k + 1] = inner[k] + step / 6.0 * (f_in(a) + 4.0 * f_in(0.5 * (a + b)) + f_in(b));
        }
        // outer: int_0^end G'(e^tau) e^tau dtau by trapezoid + Richardson
        let trap = |stride: usize| {
            let mut acc = 0.0;
            let mut k = 0;
            while k < panels {
                let a = step * k as f64;
                let b = step * (k + stride) as f64;
                acc += 0.5 * (b - a) * (inner[k] * a.exp() + inner[k + stride] * b.exp());
                k += stride;
            }
            acc
        };
        let fine = trap(1);
        let coarse = trap(2);
        fine + (fine - coarse) / 3.0
    }

    #[test]
    fn closed_form_unit_exponents() {
        let p = ModelParams::new(3, 1.0, 1.0);
        assert_eq!(eval_g(&p, 1.0, 1e-10).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((eval_g(&p, e, 1e-10).unwrap() - 1.0).abs() < 1e-10);
        let half = 0.5f64;
        let exact = half * half.ln() - half + 1.0;
        assert!((eval_g(&p, 0.5, 1e-10).unwrap() - exact).abs() < 1e-10);
        assert!((exact - 0.15343).abs() < 1e-5);
    }

    #[test]
    fn closed_form_holds_on_log_range() {
        let p = ModelParams::new(3, 1.0, 1.0);
        for k in 0..=70 {
            let u = 10f64.powf(-3.0 + 7.0 * k as f64 / 70.0);
            let exact = u * u.ln() - u + 1.0;
            let got = eval_g(&p, u, 1e-9).unwrap();
            assert!((got - exact).abs() <= 1e-9, "u = {u}: {got} vs {exact}");
        }
    }

    #[test]
    fn matches_nested_simpson_oracle() {
        for &(m, sigma) in &[(0.5, -0.3), (2.0, 0.5), (0.0, 0.5), (1.0, -1.5)] {
            let p = ModelParams::new(3, m, sigma);
            for &u in &[0.01, 0.3, 2.0, 40.0] {
                let oracle = nested_simpson(m, sigma, u);
                let got = eval_g(&p, u, 1e-11).unwrap();
                assert!(
                    (got - oracle).abs() <= 1e-8 * (1.0 + oracle.abs()),
                    "(m={m}, sigma={sigma}, u={u}): {got} vs oracle {oracle}"
                );
            }
        }
    }

    #[test]
    fn vanishes_with_slope_at_one() {
        let model = Model::power_law(ModelParams::new(3, 0.3, -0.7)).unwrap();
        assert_eq!(g_direct(&model, 1.0, 1e-12).unwrap(), 0.0);
        assert_eq!(g_prime_direct(&model, 1.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn rejects_nonpositive_arguments() {
        let p = ModelParams::new(3, 1.0, 1.0);
        assert!(eval_g(&p, 0.0, 1e-8).is_err());
        assert!(eval_g(&p, -2.0, 1e-8).is_err());
        assert!(eval_g(&p, 1.0, 0.0).is_err());
    }

    #[test]
    fn convex_chords() {
        let model = Model::power_law(ModelParams::new(3, 0.0, 0.5)).unwrap();
        let us: Vec<f64> = (0..40).map(|k| 10f64.powf(-4.0 + 0.2 * k as f64)).collect();
        for w in us.windows(3) {
            let g: Vec<f64> = w.iter().map(|&u| g_direct(&model, u, 1e-12).unwrap()).collect();
            let lam = (w[2] - w[1]) / (w[2] - w[0]);
            let chord = lam * g[0] + (1.0 - lam) * g[2];
            assert!(g[1] <= chord + 1e-10 * (1.0 + chord.abs()));
        }
    }

    #[test]
    fn zero_limit() {
        let unit = Model::power_law(ModelParams::new(3, 1.0, 1.0)).unwrap();
        assert!((g_at_zero(&unit).unwrap() - 1.0).abs() < 1e-15);
        let model = Model::power_law(ModelParams::new(3, 0.0, 0.5)).unwrap();
        let tiny = g_direct(&model, 1e-12, 1e-13).unwrap();
        assert!((g_at_zero(&model).unwrap() - tiny).abs() < 1e-9);
    }

    #[test]
    fn table_agrees_with_direct_quadrature() {
        for &(m, sigma) in &[(1.0, 1.0), (0.0, 0.0), (0.0, 0.5), (2.0, -1.0)] {
            let model = Model::power_law(ModelParams::new(3, m, sigma)).unwrap();
            for k in 0..200 {
                let u = 10f64.powf(-7.0 + 16.0 * (k as f64 + 0.37) / 200.0);
                let direct = g_direct(&model, u, 1e-12 * u.max(1.0)).unwrap();
                let cached = model.potential(u).unwrap();
                assert!(
                    (direct - cached).abs() <= 1e-9 * (1.0 + direct.abs()),
                    "m={m} sigma={sigma} u={u}: {cached} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn custom_kernel_reproduces_builtin() {
        let params = ModelParams::new(3, 0.4, -0.6);
        let builtin = Model::power_law(params).unwrap();
        let (m, sigma) = (params.m, params.sigma);
        let custom = Model::custom(
            params,
            CustomKernel::new(
                move |u| (u + 1.0).powf(m - 1.0),
                move |u| u * (u + 1.0).powf(sigma - 1.0),
            ),
        )
        .unwrap();
        for &u in &[1e-8, 1e-3, 0.5, 3.0, 1e3, 1e9] {
            let a = builtin.potential(u).unwrap();
            let b = custom.potential(u).unwrap();
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "u = {u}: {a} vs {b}");
        }
        let z0 = builtin.potential_at_zero().unwrap();
        let z1 = custom.potential_at_zero().unwrap();
        assert!((z0 - z1).abs() < 1e-10);
    }
}
