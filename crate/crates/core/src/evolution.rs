//! Time stepping for the density equation, coupled to the elliptic solve.
//!
//! Each step freezes `v = solve(u^n)`, treats diffusion implicitly with `D`
//! evaluated at level `n`, and moves mass up the signal gradient with an
//! explicit first-order upwind flux. The step size is limited so that no
//! cell can export more mass than it holds, which together with the
//! M-matrix structure of the implicit part keeps `u` nonnegative.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::elliptic::{face_couplings, solve_screened_poisson};
use crate::energy;
use crate::error::{Error, Result};
use crate::grid::{format_float, RadialField};
use crate::linalg::solve_tridiagonal;
use crate::model::Model;

/// Number of consecutive accepted steps before the step size grows.
const GROWTH_AFTER: usize = 10;
const GROWTH_FACTOR: f64 = 1.2;
/// Negative values down to `-NEG_TOL * sup u` are rounding noise and get clipped.
const NEG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub t_end: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    /// Upper cap for step growth; defaults to `snapshot_every`.
    #[serde(default)]
    pub dt_max: Option<f64>,
    pub cfl_safety: f64,
    #[serde(default = "default_threshold")]
    pub u_max_threshold: f64,
    /// Relative tolerance on `|int u(t) - int u0|`.
    #[serde(default = "default_mass_tol")]
    pub mass_drift_tol: f64,
    pub snapshot_every: f64,
}

fn default_threshold() -> f64 {
    1e6
}

fn default_mass_tol() -> f64 {
    1e-6
}

impl EvolutionConfig {
    pub fn new(t_end: f64, dt_init: f64, snapshot_every: f64) -> Self {
        EvolutionConfig {
            t_end,
            dt_init,
            dt_min: dt_init * 1e-9,
            dt_max: None,
            cfl_safety: 0.5,
            u_max_threshold: default_threshold(),
            mass_drift_tol: default_mass_tol(),
            snapshot_every,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.t_end) {
            return bad("t_end must be positive");
        }
        if !positive(self.dt_init) || !positive(self.dt_min) || self.dt_min >= self.dt_init {
            return bad("need 0 < dt_min < dt_init");
        }
        if let Some(cap) = self.dt_max {
            if !(cap >= self.dt_init) {
                return bad("dt_max must be at least dt_init");
            }
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad("cfl_safety must lie in (0, 1]");
        }
        if !positive(self.u_max_threshold) || !positive(self.mass_drift_tol) {
            return bad("thresholds must be positive");
        }
        if !positive(self.snapshot_every) {
            return bad("snapshot_every must be positive");
        }
        Ok(())
    }

    fn step_cap(&self) -> f64 {
        self.dt_max.unwrap_or(self.snapshot_every).max(self.dt_init)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopKind {
    CompletedHorizon,
    ThresholdExceeded,
    StepCollapse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupVerdict {
    pub kind: StopKind,
    pub t_stop: f64,
    pub sup_u_final: f64,
    /// The last quarter of the recorded sup norms is non-decreasing.
    pub sup_u_history_monotone_tail: bool,
}

impl BlowupVerdict {
    /// Threshold hit with a growing tail; numerical evidence only.
    pub fn is_blowup_evidence(&self) -> bool {
        self.kind != StopKind::CompletedHorizon && self.sup_u_history_monotone_tail
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: RadialField,
    pub v: RadialField,
}

/// Diagnostics at every snapshot time. All lists have the same length.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub min_values: Vec<f64>,
    pub masses: Vec<f64>,
    pub energies: Vec<f64>,
    pub dissipations: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest cell width of the mesh, the `h` in energy slack terms.
    pub max_cell_width: f64,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, model: &Model, t: f64, u: RadialField, v: RadialField) -> Result<()> {
        let report = energy::energy_report(&u, &v, model)?;
        self.times.push(t);
        self.sup_norms.push(u.max());
        self.min_values.push(u.min());
        self.masses.push(u.integral());
        self.energies.push(report.energy_full);
        self.dissipations.push(report.dissipation);
        self.snapshots.push(Snapshot { t, u, v });
        Ok(())
    }

    /// Worst relative mass drift against the first record.
    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.masses.first().copied().unwrap_or(0.0);
        self.masses
            .iter()
            .map(|m| (m - m0).abs() / m0.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// Most negative `min u / sup u` over the records (0 if never negative).
    pub fn worst_negativity(&self) -> f64 {
        self.min_values
            .iter()
            .zip(&self.sup_norms)
            .map(|(lo, hi)| if *hi > 0.0 { (lo / hi).min(0.0) } else { lo.min(0.0) })
            .fold(0.0, f64::min)
    }

    fn tail_start(&self) -> usize {
        let n = self.sup_norms.len();
        n - (n / 4).max(2).min(n)
    }

    pub fn sup_tail_non_decreasing(&self) -> bool {
        self.sup_norms[self.tail_start()..].windows(2).all(|w| w[1] >= w[0])
    }

    pub fn sup_tail_non_increasing(&self) -> bool {
        self.sup_norms[self.tail_start()..].windows(2).all(|w| w[1] <= w[0])
    }

    /// `t,sup_u,mass,energy,dissipation`, one row per snapshot.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "sup_u", "mass", "energy", "dissipation"])?;
        for k in 0..self.len() {
            w.write_record([
                format_float(self.times[k]),
                format_float(self.sup_norms[k]),
                format_float(self.masses[k]),
                format_float(self.energies[k]),
                format_float(self.dissipations[k]),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<trajectory csv>", e))?;
        Ok(())
    }

    /// One `r,u,v` file per snapshot, `snapshot_0000.csv` onwards.
    /// Returns the file names, relative to `dir`.
    pub fn write_snapshots(&self, dir: &Path) -> Result<Vec<String>> {
        let mut names = Vec::with_capacity(self.snapshots.len());
        for (k, snap) in self.snapshots.iter().enumerate() {
            let name = format!("snapshot_{k:04}.csv");
            let path = dir.join(&name);
            let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
            w.write_record(["r", "u", "v"])?;
            let centers = snap.u.grid().centers();
            for i in 0..centers.len() {
                w.write_record([
                    format_float(centers[i]),
                    format_float(snap.u.values()[i]),
                    format_float(snap.v.values()[i]),
                ])?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            names.push(name);
        }
        Ok(names)
    }
}

#[derive(Debug, Clone)]
pub enum Step {
    Accepted { u_next: RadialField, v: RadialField },
    /// `dt` exceeds the positivity limit for this state.
    Rejected { dt_max: f64 },
}

/// Frozen level-`n` data for one step: the signal and the advective fluxes.
struct Frozen {
    v: RadialField,
    /// Signed advective flux through each face, positive towards larger `r`.
    adv_flux: Vec<f64>,
    /// Largest step that keeps every cell's explicit update nonnegative.
    dt_limit: f64,
}

fn freeze(u: &RadialField, model: &Model) -> Result<Frozen> {
    let v = solve_screened_poisson(u)?.v;
    let grid = u.grid();
    let n = grid.len();
    let (uv, vv) = (u.values(), v.values());
    let mut adv_flux = vec![0.0; n + 1];
    let mut outflow = vec![0.0; n];
    for f in 1..n {
        let dv = vv[f] - vv[f - 1];
        let up = if dv > 0.0 { f - 1 } else { f };
        let flux = grid.face_areas()[f] * model.sensitivity(uv[up]) * dv / grid.spacing(f);
        adv_flux[f] = flux;
        outflow[up] += flux.abs();
    }
    let mut dt_limit = f64::INFINITY;
    for i in 0..n {
        if uv[i] > 0.0 && outflow[i] > 0.0 {
            dt_limit = dt_limit.min(grid.volumes()[i] * uv[i] / outflow[i]);
        }
    }
    Ok(Frozen { v, adv_flux, dt_limit })
}

fn advance(u: &RadialField, frozen: &Frozen, dt: f64, model: &Model) -> Result<RadialField> {
    let grid = u.grid();
    let n = grid.len();
    let uv = u.values();
    let a = face_couplings(grid);
    let vol = grid.volumes();
    let mut coupling = vec![0.0; n + 1];
    for f in 1..n {
        coupling[f] = a[f] * model.diffusion(0.5 * (uv[f - 1] + uv[f]));
    }
    let diag: Vec<f64> = (0..n).map(|i| vol[i] / dt + coupling[i] + coupling[i + 1]).collect();
    let off: Vec<f64> = (1..n).map(|f| -coupling[f]).collect();
    let rhs: Vec<f64> = (0..n)
        .map(|i| vol[i] / dt * uv[i] + frozen.adv_flux[i] - frozen.adv_flux[i + 1])
        .collect();
    let mut next = solve_tridiagonal(&off, &diag, &off, &rhs)?;
    let sup = next.iter().fold(0.0f64, |m, x| m.max(*x));
    for x in next.iter_mut() {
        if *x < 0.0 {
            if *x < -NEG_TOL * sup {
                return Err(Error::SchemeViolation {
                    t: f64::NAN,
                    reason: format!("negative density {x:e} against sup {sup:e}"),
                });
            }
            *x = 0.0;
        }
    }
    RadialField::new(grid.clone(), next)
}

fn check_input(u: &RadialField, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    if u.min() < 0.0 {
        return Err(Error::Domain("density must be nonnegative".into()));
    }
    Ok(())
}

/// One IMEX step of size `dt`, or the admissible step size if `dt` is too large.
pub fn step(u: &RadialField, dt: f64, model: &Model) -> Result<Step> {
    check_input(u, dt)?;
    let frozen = freeze(u, model)?;
    if dt > frozen.dt_limit {
        return Ok(Step::Rejected { dt_max: frozen.dt_limit });
    }
    let u_next = advance(u, &frozen, dt, model)?;
    Ok(Step::Accepted { u_next, v: frozen.v })
}

/// Integrates from `u0` until `t_end`, the sup-norm threshold, or step collapse.
pub fn run(u0: &RadialField, model: &Model, cfg: &EvolutionConfig) -> Result<(TrajectoryRecord, BlowupVerdict)> {
    cfg.validate()?;
    check_input(u0, cfg.dt_init)?;
    let grid = u0.grid().clone();
    let mut record = TrajectoryRecord {
        max_cell_width: grid.coarsest_width(),
        ..Default::default()
    };
    let mass0 = u0.integral();
    let mut u = u0.clone();
    let mut t = 0.0;
    let mut dt = cfg.dt_init;
    let mut streak = 0;
    let mut snap_index = 1usize;
    let cap = cfg.step_cap();

    let mut frozen = freeze(&u, model)?;
    record.push(model, t, u.clone(), frozen.v.clone())?;

    let kind = loop {
        if u.max() >= cfg.u_max_threshold {
            break StopKind::ThresholdExceeded;
        }
        if t >= cfg.t_end {
            break StopKind::CompletedHorizon;
        }
        let next_snap = (snap_index as f64 * cfg.snapshot_every).min(cfg.t_end);
        while dt > cfg.cfl_safety * frozen.dt_limit {
            dt *= 0.5;
            streak = 0;
            record.rejected_steps += 1;
            if dt < cfg.dt_min {
                break;
            }
        }
        if dt < cfg.dt_min {
            break StopKind::StepCollapse;
        }
        let remaining = next_snap - t;
        // Land exactly on snapshot times; a sliver left over is merged.
        let (h, lands) = if dt >= remaining * (1.0 - 1e-12) {
            (remaining, true)
        } else {
            (dt, false)
        };
        u = advance(&u, &frozen, h, model).map_err(|e| match e {
            Error::SchemeViolation { reason, .. } => Error::SchemeViolation { t, reason },
            other => other,
        })?;
        t = if lands { next_snap } else { t + h };
        record.accepted_steps += 1;
        streak += 1;
        if streak >= GROWTH_AFTER {
            dt = (dt * GROWTH_FACTOR).min(cap);
            streak = 0;
        }

        let drift = (u.integral() - mass0).abs();
        if drift > cfg.mass_drift_tol * mass0.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::SchemeViolation {
                t,
                reason: format!("mass drift {drift:e} exceeds tolerance"),
            });
        }
        frozen = freeze(&u, model)?;
        if lands {
            snap_index += 1;
            record.push(model, t, u.clone(), frozen.v.clone())?;
        } else if u.max() >= cfg.u_max_threshold {
            record.push(model, t, u.clone(), frozen.v.clone())?;
        }
    };
    if record.times.last() != Some(&t) {
        record.push(model, t, u.clone(), frozen.v.clone())?;
    }
    let verdict = BlowupVerdict {
        kind,
        t_stop: t,
        sup_u_final: u.max(),
        sup_u_history_monotone_tail: record.sup_tail_non_decreasing(),
    };
    Ok((record, verdict))
}

/// `L^2` norm over the faces of the stationary flux `D(u) u_r - S(u) v_r`.
pub fn steady_state_residual(u: &RadialField, v: &RadialField, model: &Model) -> Result<f64> {
    if !u.same_grid(v) {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid();
    let (uv, vv) = (u.values(), v.values());
    let mut sum = 0.0;
    for f in 1..grid.len() {
        let d = grid.spacing(f);
        let uf = 0.5 * (uv[f - 1] + uv[f]);
        let flux = model.diffusion(uf) * (uv[f] - uv[f - 1]) / d - model.sensitivity(uf) * (vv[f] - vv[f - 1]) / d;
        sum += grid.face_areas()[f] * d * flux * flux;
    }
    Ok(sum.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::model::{CustomKernel, ModelParams};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn grid(n: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::uniform(3, 1.0, n).unwrap())
    }

    fn model(m: f64, sigma: f64) -> Model {
        Model::power_law(ModelParams::new(3, m, sigma)).unwrap()
    }

    fn accepted(s: Step) -> (RadialField, RadialField) {
        match s {
            Step::Accepted { u_next, v } => (u_next, v),
            Step::Rejected { dt_max } => panic!("rejected, limit {dt_max}"),
        }
    }

    #[test]
    fn constants_and_zero_are_steady() {
        let md = model(1.0, 1.0);
        let c = RadialField::constant(grid(50), 2.5).unwrap();
        let (next, v) = accepted(step(&c, 10.0, &md).unwrap());
        assert!(next.values().iter().all(|x| (x - 2.5).abs() < 1e-9));
        assert!(v.values().iter().all(|x| (x - 2.5).abs() < 1e-12));
        let z = RadialField::zeros(grid(50));
        let (next, _) = accepted(step(&z, 1.0, &md).unwrap());
        assert!(next.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn too_large_step_is_rejected_with_limit() {
        let md = model(0.0, 1.0);
        let u = RadialField::from_fn(grid(100), |r| 50.0 * (-30.0 * r * r).exp()).unwrap();
        match step(&u, 1.0, &md).unwrap() {
            Step::Rejected { dt_max } => {
                assert!(dt_max > 0.0 && dt_max < 1.0);
                assert!(matches!(step(&u, dt_max, &md).unwrap(), Step::Accepted { .. }));
            }
            Step::Accepted { .. } => panic!("expected rejection"),
        }
    }

    #[test]
    fn invalid_inputs() {
        let md = model(1.0, 0.0);
        let u = RadialField::constant(grid(10), 1.0).unwrap();
        assert!(step(&u, 0.0, &md).is_err());
        let neg = RadialField::constant(grid(10), -1.0).unwrap();
        assert!(step(&neg, 0.1, &md).is_err());
        let mut cfg = EvolutionConfig::new(1.0, 0.1, 0.1);
        cfg.dt_min = 0.2;
        assert!(cfg.validate().is_err());
        let mut cfg = EvolutionConfig::new(1.0, 0.1, 0.1);
        cfg.cfl_safety = 1.5;
        assert!(cfg.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn accepted_steps_conserve_mass_and_sign(
            values in proptest::collection::vec(0.0f64..20.0, 40),
            dt in 1e-4f64..1e-1,
            sigma in -0.5f64..1.5,
        ) {
            let md = model(0.5, sigma);
            let u = RadialField::new(grid(40), values).unwrap();
            let dt = match step(&u, dt, &md).unwrap() {
                Step::Accepted { .. } => dt,
                Step::Rejected { dt_max } => dt_max,
            };
            let (next, _) = accepted(step(&u, dt, &md).unwrap());
            let m0 = u.integral();
            prop_assert!((next.integral() - m0).abs() <= 1e-12 * m0.max(1e-300));
            prop_assert!(next.min() >= 0.0);
        }
    }

    #[test]
    fn constant_run_completes_flat() {
        let md = model(0.0, 0.5);
        let u0 = RadialField::constant(grid(30), 3.0).unwrap();
        let (rec, verdict) = run(&u0, &md, &EvolutionConfig::new(1.0, 0.05, 0.25)).unwrap();
        assert_eq!(verdict.kind, StopKind::CompletedHorizon);
        assert!((verdict.sup_u_final - 3.0).abs() < 1e-12);
        assert_eq!(rec.times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(rec.energies.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
        assert!(rec.dissipations.iter().all(|&d| d.abs() < 1e-20));
    }

    #[test]
    fn threshold_stops_the_run() {
        let md = model(1.0, 0.0);
        let u0 = RadialField::constant(grid(10), 5.0).unwrap();
        let mut cfg = EvolutionConfig::new(1.0, 0.1, 0.5);
        cfg.u_max_threshold = 4.0;
        let (rec, verdict) = run(&u0, &md, &cfg).unwrap();
        assert_eq!(verdict.kind, StopKind::ThresholdExceeded);
        assert!(verdict.sup_u_final >= cfg.u_max_threshold);
        assert_eq!(rec.len(), 1);
    }

    #[test]
    fn diffusion_smooths_without_signal_response() {
        // Pure diffusion: with S = 0 the sup norm decays and the minimum rises.
        let kernel = CustomKernel::new(|_| 1.0, |_| 0.0);
        let md = Model::custom(ModelParams::new(3, 1.0, 0.0), kernel).unwrap();
        let mut u = RadialField::from_fn(grid(60), |r| 1.0 + (-20.0 * r * r).exp()).unwrap();
        let m0 = u.integral();
        for _ in 0..20 {
            let (next, _) = accepted(step(&u, 0.01, &md).unwrap());
            assert!(next.max() < u.max() && next.min() > u.min());
            u = next;
        }
        assert!((u.integral() - m0).abs() < 1e-12 * m0);
    }

    #[test]
    fn steady_residual_cases() {
        let md = model(1.0, 1.0);
        let c = RadialField::constant(grid(20), 1.5).unwrap();
        assert_eq!(steady_state_residual(&c, &c, &md).unwrap(), 0.0);
        let same = CustomKernel::new(|u| u + 1.0, |u| u + 1.0);
        let md = Model::custom(ModelParams::new(3, 1.0, 1.0), same).unwrap();
        let u = RadialField::from_fn(grid(20), |r| 2.0 - r * r).unwrap();
        assert!(steady_state_residual(&u, &u, &md).unwrap() < 1e-14);
        let flat = RadialField::constant(grid(20), 2.0).unwrap();
        assert!(steady_state_residual(&u, &flat, &md).unwrap() > 0.1);
    }
}
