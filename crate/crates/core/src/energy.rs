//! Lyapunov functional, its dissipation rate, and trajectory-level checks.
//!
//! With `a_f = A_f / d_f` the elliptic rows give
//! `sum V v^2 + sum a_f (dv)^2 = sum V u v`, and `integrate_faces` of the
//! squared centred difference is exactly `sum a_f (dv)^2`. The full and
//! reduced energies therefore agree to rounding on solved pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::TrajectoryRecord;
use crate::grid::{FaceField, RadialField};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub energy_full: f64,
    pub energy_reduced: f64,
    pub dissipation: f64,
    pub gap_full_vs_reduced: f64,
}

/// `int G(u)`, with `G(0+)` at empty cells.
pub fn potential_integral(u: &RadialField, model: &Model) -> Result<f64> {
    let vol = u.grid().volumes();
    let mut sum = 0.0;
    for (i, &x) in u.values().iter().enumerate() {
        sum += vol[i] * model.potential(x)?;
    }
    Ok(sum)
}

/// `1/2 int |v_r|^2 + 1/2 int v^2 - int u v + int G(u)`.
pub fn energy_full(u: &RadialField, v: &RadialField, model: &Model) -> Result<f64> {
    let grid = u.grid();
    let dv = grid.radial_derivative(v)?;
    let grad = grid.integrate_faces(&FaceField {
        values: dv.values.iter().map(|g| g * g).collect(),
    });
    let vv = v.inner(v)?;
    let uv = u.inner(v)?;
    Ok(0.5 * grad + 0.5 * vv - uv + potential_integral(u, model)?)
}

/// `int G(u) - 1/2 int u v`; equal to [`energy_full`] when `v` solves the elliptic problem.
pub fn energy_reduced(u: &RadialField, v: &RadialField, model: &Model) -> Result<f64> {
    Ok(potential_integral(u, model)? - 0.5 * u.inner(v)?)
}

struct FaceTerms {
    weight: f64,
    d: f64,
    s: f64,
    du: f64,
    dv: f64,
}

fn face_terms<'a>(u: &'a RadialField, v: &'a RadialField, model: &'a Model) -> impl Iterator<Item = FaceTerms> + 'a {
    let grid = u.grid();
    let (uv, vv) = (u.values(), v.values());
    (1..grid.len()).map(move |f| {
        let h = grid.spacing(f);
        let uf = 0.5 * (uv[f - 1] + uv[f]);
        FaceTerms {
            weight: grid.face_areas()[f] * h,
            d: model.diffusion(uf),
            s: model.sensitivity(uf),
            du: (uv[f] - uv[f - 1]) / h,
            dv: (vv[f] - vv[f - 1]) / h,
        }
    })
}

/// `int S(u) |(D(u)/S(u)) u_r - v_r|^2`, face-evaluated. Faces with
/// `S(u_face) = 0` contribute nothing.
pub fn dissipation(u: &RadialField, v: &RadialField, model: &Model) -> Result<f64> {
    if !u.same_grid(v) {
        return Err(Error::GridMismatch);
    }
    Ok(face_terms(u, v, model)
        .filter(|t| t.s > 0.0)
        .map(|t| {
            let flux = t.d * t.du - t.s * t.dv;
            t.weight * flux * flux / t.s
        })
        .sum())
}

/// `int (D^2/S) u_r^2 - 2 int D u_r v_r + int S v_r^2`, the expanded square.
pub fn dissipation_expanded(u: &RadialField, v: &RadialField, model: &Model) -> Result<f64> {
    if !u.same_grid(v) {
        return Err(Error::GridMismatch);
    }
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for t in face_terms(u, v, model).filter(|t| t.s > 0.0) {
        a += t.weight * t.d * t.d / t.s * t.du * t.du;
        b += t.weight * t.d * t.du * t.dv;
        c += t.weight * t.s * t.dv * t.dv;
    }
    Ok(a - 2.0 * b + c)
}

pub fn energy_report(u: &RadialField, v: &RadialField, model: &Model) -> Result<EnergyReport> {
    let energy_full = energy_full(u, v, model)?;
    let energy_reduced = energy_reduced(u, v, model)?;
    Ok(EnergyReport {
        energy_full,
        energy_reduced,
        dissipation: dissipation(u, v, model)?,
        gap_full_vs_reduced: (energy_full - energy_reduced).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyIdentityReport {
    /// `max_k |dF/dt + avg D| / (1 + |avg D|)` over consecutive snapshots.
    pub max_defect: f64,
    /// Snapshot pairs where `F` rose by more than the slack.
    pub monotonicity_violations: usize,
    /// Largest rise `F(t_{k+1}) - F(t_k)` observed (negative if strictly decreasing).
    pub max_increase: f64,
    /// `int D dt - (F(0) - F(end))`, trapezoid in time.
    pub dissipation_budget_excess: f64,
}

/// Per-pair slack on `F(t_{k+1}) <= F(t_k)`: `10 dt h^2 (1 + |F|)`.
pub fn monotonicity_slack(dt: f64, h: f64, energy: f64) -> f64 {
    10.0 * dt * h * h * (1.0 + energy.abs())
}

pub fn check_energy_identity(traj: &TrajectoryRecord) -> Result<EnergyIdentityReport> {
    const NEEDED: usize = 3;
    if traj.len() < NEEDED {
        return Err(Error::TooFewSnapshots { found: traj.len(), needed: NEEDED });
    }
    let (t, f, d) = (&traj.times, &traj.energies, &traj.dissipations);
    let h = traj.max_cell_width;
    let mut report = EnergyIdentityReport {
        max_defect: 0.0,
        monotonicity_violations: 0,
        max_increase: f64::NEG_INFINITY,
        dissipation_budget_excess: 0.0,
    };
    let mut budget = 0.0;
    for k in 0..traj.len() - 1 {
        let dt = t[k + 1] - t[k];
        let lhs = (f[k + 1] - f[k]) / dt;
        let rhs = -0.5 * (d[k] + d[k + 1]);
        report.max_defect = report.max_defect.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
        let rise = f[k + 1] - f[k];
        report.max_increase = report.max_increase.max(rise);
        if rise > monotonicity_slack(dt, h, f[k]) {
            report.monotonicity_violations += 1;
        }
        budget += -rhs * dt;
    }
    report.dissipation_budget_excess = budget - (f[0] - f[traj.len() - 1]);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentialInequalityReport {
    /// `max_k (LHS - RHS)`; positive values are violations.
    pub max_violation: f64,
    /// `max_k |RHS|`, the natural scale for `max_violation`.
    pub max_rhs: f64,
    pub pairs: usize,
}

/// Right-hand side of the `L^p` growth estimate for one state.
fn growth_bound(u: &RadialField, p: f64, model: &Model) -> Result<f64> {
    let params = model.params();
    let (m, sigma) = (params.m, params.sigma);
    let grid = u.grid();
    let k = 0.5 * (m + p - 1.0);
    let w = u.map(|x| (x + 1.0).powf(k))?;
    let dw = grid.radial_derivative(&w)?;
    let grad = grid.integrate_faces(&FaceField {
        values: dw.values.iter().map(|g| g * g).collect(),
    });
    let source = grid.integrate(&u.map(|x| (x + 1.0).powf(p + sigma))?)?;
    let damping = 4.0 * params.c_d * (p - 1.0) / ((m + p - 1.0) * (m + p - 1.0));
    let production = params.c_s * (p - 1.0) / (p + sigma - 1.0);
    Ok(-damping * grad + production * source)
}

/// Checks `d/dt (1/p) int (u+1)^p <= RHS(u)` along the snapshots, with `RHS`
/// averaged over each pair.
pub fn check_differential_inequality(traj: &TrajectoryRecord, p: f64, model: &Model) -> Result<DifferentialInequalityReport> {
    let params = model.params();
    if !(p > 1.0) {
        return Err(Error::Hypothesis(format!("need p > 1, got p = {p}")));
    }
    if !(p > 1.0 - params.sigma) {
        return Err(Error::Hypothesis(format!("need p > 1 - sigma = {}, got p = {p}", 1.0 - params.sigma)));
    }
    if params.m + p - 1.0 == 0.0 {
        return Err(Error::Hypothesis("need m + p - 1 != 0".into()));
    }
    if traj.snapshots.len() < 2 {
        return Err(Error::TooFewSnapshots { found: traj.snapshots.len(), needed: 2 });
    }
    let mut level = Vec::with_capacity(traj.snapshots.len());
    let mut bound = Vec::with_capacity(traj.snapshots.len());
    for snap in &traj.snapshots {
        level.push(snap.u.grid().integrate(&snap.u.map(|x| (x + 1.0).powf(p))?)? / p);
        bound.push(growth_bound(&snap.u, p, model)?);
    }
    let mut report = DifferentialInequalityReport {
        max_violation: f64::NEG_INFINITY,
        max_rhs: 0.0,
        pairs: traj.snapshots.len() - 1,
    };
    for k in 0..report.pairs {
        let dt = traj.snapshots[k + 1].t - traj.snapshots[k].t;
        let lhs = (level[k + 1] - level[k]) / dt;
        let rhs = 0.5 * (bound[k] + bound[k + 1]);
        report.max_violation = report.max_violation.max(lhs - rhs);
        report.max_rhs = report.max_rhs.max(bound[k].abs()).max(bound[k + 1].abs());
    }
    Ok(report)
}
