//! Reproducible experiments: configuration, commands and run records.
//!
//! Every command that writes files stages them in a private directory next to
//! `output_dir/<label>/` and renames it into place when complete. Records
//! contain no wall-clock data, so identical configs give byte-identical
//! outputs; timings go to a separate `timings.json`.

pub mod config;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::elliptic::solve_screened_poisson;
use crate::energy::{check_energy_identity, energy_report, EnergyIdentityReport};
use crate::error::{Error, Result};
use crate::evolution::{run, steady_state_residual, BlowupVerdict, StopKind};
use crate::grid::RadialField;
use crate::initdata::{build_u_hat, sweep_scalings, EtaConstruction, ScalingReport};
use crate::model::{
    check_condition_13, check_growth_condition, classify_regime, power_law_sufficient_condition, Condition13Params,
    Condition13Report, GrowthReport, Model, ModelParams, RegimeVerdict,
};

pub use config::{BaseDatum, ConditionsConfig, ExperimentConfig, GridConfig, InitialData, SweepConfig};

pub const ARTIFACT: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Name of the environment variable that sets the sweep thread count.
pub const JOBS_VAR: &str = "KS_JOBS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.to_string(),
            pass: value <= limit,
            value,
            limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub artifact: String,
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub regime: RegimeVerdict,
    /// Files written, relative to the run directory.
    pub outputs: Vec<String>,
    pub summary: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl RunRecord {
    fn new(command: &str, config: &ExperimentConfig, summary: Value, checks: Vec<Check>) -> Self {
        RunRecord {
            artifact: ARTIFACT.to_string(),
            version: VERSION.to_string(),
            command: command.to_string(),
            config: config.clone(),
            regime: classify_regime(&config.model),
            outputs: Vec::new(),
            pass: checks.iter().all(|c| c.pass),
            summary,
            checks,
        }
    }
}

/// Thread count from `KS_JOBS`; `None` means the rayon default.
pub fn jobs_from_env() -> Result<Option<usize>> {
    match std::env::var(JOBS_VAR) {
        Err(_) => Ok(None),
        Ok(s) if s.trim().is_empty() => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(Error::Config(format!("{JOBS_VAR} must be a non-negative integer, got {s:?}"))),
        },
    }
}

/// Files for one run, written under a private directory until [`Staging::commit`].
struct Staging {
    tmp: PathBuf,
    target: PathBuf,
    outputs: Vec<String>,
}

impl Staging {
    fn open(cfg: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
        let tmp = cfg
            .output_dir
            .join(format!(".{}.partial-{}", cfg.label, std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        }
        fs::create_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        Ok(Staging {
            tmp,
            target: cfg.run_dir(),
            outputs: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.tmp.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n").map_err(|e| Error::io(name, e))
        })
    }

    fn write_field(&mut self, name: &str, field: &RadialField) -> Result<()> {
        self.write(name, |w| field.write_csv(w))
    }

    /// Writes `record.json` and `timings.json`, then moves the directory into place.
    fn commit(mut self, mut record: RunRecord, timings: Value) -> Result<RunRecord> {
        record.outputs = self.outputs.clone();
        record.outputs.push("record.json".into());
        record.outputs.push("timings.json".into());
        self.write_json("record.json", &record)?;
        self.write_json("timings.json", &timings)?;
        if self.target.exists() {
            fs::remove_dir_all(&self.target).map_err(|e| Error::io(&self.target, e))?;
        }
        fs::rename(&self.tmp, &self.target).map_err(|e| Error::io(&self.target, e))?;
        Ok(record)
    }
}

pub fn cmd_classify(params: &ModelParams) -> Result<RegimeVerdict> {
    params.validate()?;
    Ok(classify_regime(params))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub params: ModelParams,
    pub growth: GrowthReport,
    /// Smallest growth constant that passes on the samples.
    pub minimal_c_g: f64,
    pub condition_13: Condition13Report,
    pub condition_13_params: Condition13Params,
    /// `-alpha > 2/N`, which implies the superlinear-growth condition.
    pub sufficient_condition: bool,
    pub warnings: Vec<String>,
}

pub fn cmd_check(params: &ModelParams, conditions: Option<&ConditionsConfig>) -> Result<CheckReport> {
    let model = Model::power_law(*params)?;
    let samples = conditions
        .and_then(|c| c.growth_samples.clone())
        .unwrap_or_else(config::default_growth_samples);
    let c13 = conditions.and_then(|c| c.condition13).unwrap_or_default();
    let growth = check_growth_condition(&model, &samples)?;
    let condition_13 = check_condition_13(&model, &c13)?;
    let warnings = condition_13.warning.iter().cloned().collect();
    Ok(CheckReport {
        params: *params,
        minimal_c_g: growth.worst_ratio,
        growth,
        condition_13,
        condition_13_params: c13,
        sufficient_condition: power_law_sufficient_condition(params),
        warnings,
    })
}

/// The datum described by `initial`, plus the construction when it is a spike.
pub fn initial_datum(cfg: &ExperimentConfig, model: &ModelParams) -> Result<(RadialField, Option<EtaConstruction>)> {
    let grid = cfg.grid()?;
    let initial = cfg
        .initial
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs an `initial` section".into()))?;
    match initial {
        InitialData::Constant { value } => Ok((BaseDatum::Constant { value: *value }.build(grid)?, None)),
        InitialData::Csv { path } => Ok((BaseDatum::Csv { path: path.clone() }.build(grid)?, None)),
        InitialData::UHat { eta, base, p, exponents } => {
            let exp = config::resolve_exponents(*exponents, model, *p)?;
            let u0 = base.build(grid)?;
            let c = build_u_hat(&exp, *eta, &u0)?;
            Ok((c.u_hat.clone(), Some(c)))
        }
    }
}

fn elapsed(start: Instant) -> Value {
    json!({ "wall_seconds": start.elapsed().as_secs_f64() })
}

pub fn cmd_construct(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let start = Instant::now();
    cfg.validate()?;
    if !matches!(cfg.initial, Some(InitialData::UHat { .. })) {
        return Err(Error::Config("construct needs `initial` of kind `u_hat`".into()));
    }
    let model = Model::power_law(cfg.model)?;
    let (_, c) = initial_datum(cfg, &cfg.model)?;
    let c = c.expect("u_hat datum");
    let solved = solve_screened_poisson(&c.u_hat)?;
    let energies = energy_report(&c.u_hat, &c.v_hat, &model)?;
    let distance = c.u_hat.grid().lp_norm(&c.u_hat.zip_with(&c.base_u0, |a, b| a - b)?, c.exponents.p)?;
    let violation = c.exponents.violated(&cfg.model).map(|v| v.to_string());
    let summary = json!({
        "exponents": c.exponents,
        "exponents_outside_feasible_set": violation,
        "eta": c.eta,
        "support_radius": c.exponents.support_radius(c.eta),
        "floor": c.eta.powf(c.exponents.q),
        "spike_mass": c.u_eta.integral(),
        "u_hat_mass": c.u_hat.integral(),
        "v_hat_mass": c.v_hat.integral(),
        "u_hat_max": c.u_hat.max(),
        "distance_to_base": distance,
        "energy": energies,
    });
    let checks = vec![Check::at_most(
        "mass identity |int v - int u| / int u",
        solved.mass_gap / c.u_hat.integral(),
        1e-9,
    )];
    let mut stage = Staging::open(cfg)?;
    stage.write_field("u_eta.csv", &c.u_eta)?;
    stage.write_field("u_hat.csv", &c.u_hat)?;
    stage.write_field("v_hat.csv", &c.v_hat)?;
    let record = RunRecord::new("construct", cfg, summary, checks);
    stage.commit(record, elapsed(start))
}

/// Sweep report plus its run record.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<(ScalingReport, RunRecord)> {
    let start = Instant::now();
    cfg.validate()?;
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep needs a `sweep` section".into()))?;
    let etas = sweep.etas()?;
    let model = Model::power_law(cfg.model)?;
    let exp = config::resolve_exponents(sweep.exponents, &cfg.model, sweep.p)?;
    let u0 = sweep.base.build(cfg.grid()?)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs_from_env()? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let report = pool.install(|| sweep_scalings(&exp, &model, &u0, &etas))?;
    let f = &report.flags;
    let checks = [
        ("cross-term slope", f.cross_slope),
        ("potential-term slope", f.potential_slope),
        ("energy divergence", f.energy_divergence),
        ("energy slope", f.energy_slope),
        ("distance decreasing", f.distance_monotone),
        ("distance reduction", f.distance_reduction),
        ("exponent ordering", f.exponent_ordering),
        ("pointwise spike bound", f.pointwise_bound),
        ("spike mass bound", f.spike_mass_bound),
        ("distance bound", f.distance_bound),
    ]
    .into_iter()
    .map(|(name, pass)| Check {
        name: name.to_string(),
        pass,
        value: f64::from(u8::from(pass)),
        limit: 1.0,
    })
    .collect();
    let summary = json!({
        "fits": report.fits,
        "targets": report.targets,
        "eta_count": report.rows.len(),
    });
    let mut stage = Staging::open(cfg)?;
    stage.write_json("scaling_report.json", &report)?;
    stage.write("scaling_rows.csv", |w| write_rows(w, &report))?;
    let record = RunRecord::new("sweep", cfg, summary, checks);
    let record = stage.commit(record, elapsed(start))?;
    Ok((report, record))
}

fn write_rows(w: &mut dyn Write, report: &ScalingReport) -> Result<()> {
    use crate::grid::format_float;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["eta", "cross_term", "potential_term", "energy", "distance"])?;
    for r in &report.rows {
        out.write_record([r.eta, r.cross_term, r.potential_term, r.energy, r.distance].map(format_float))?;
    }
    out.flush().map_err(|e| Error::io("scaling_rows.csv", e))?;
    Ok(())
}

/// Outcome of `solve` beyond what the record stores.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub record: RunRecord,
    pub verdict: BlowupVerdict,
    pub identity: Option<EnergyIdentityReport>,
}

pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<SolveOutcome> {
    let start = Instant::now();
    cfg.validate()?;
    let evo = cfg
        .evolution
        .ok_or_else(|| Error::Config("solve needs an `evolution` section".into()))?;
    let model = Model::power_law(cfg.model)?;
    let (u0, _) = initial_datum(cfg, &cfg.model)?;
    let (traj, verdict) = run(&u0, &model, &evo)?;
    let identity = check_energy_identity(&traj).ok();
    let first = &traj.snapshots[0];
    let last = traj.snapshots.last().expect("at least one snapshot");
    let residual_first = steady_state_residual(&first.u, &first.v, &model)?;
    let residual_last = steady_state_residual(&last.u, &last.v, &model)?;
    let evidence = match verdict.kind {
        StopKind::CompletedHorizon => "completed the horizon; boundedness is numerical evidence only",
        _ if verdict.is_blowup_evidence() => "blow-up evidence: threshold or step collapse with a growing sup-norm tail",
        _ => "stopped early without a monotone sup-norm tail",
    };
    let summary = json!({
        "verdict": verdict,
        "interpretation": evidence,
        "snapshots": traj.len(),
        "accepted_steps": traj.accepted_steps,
        "rejected_steps": traj.rejected_steps,
        "energy_identity": identity,
        "steady_state_residual": { "first": residual_first, "last": residual_last },
        "max_mass_drift": traj.max_mass_drift(),
        "worst_negativity": traj.worst_negativity(),
    });
    let mut checks = vec![
        Check::at_most("relative mass drift", traj.max_mass_drift(), evo.mass_drift_tol),
        Check::at_most("negativity min u / sup u", traj.worst_negativity().abs(), 1e-12),
    ];
    if let Some(id) = &identity {
        checks.push(Check::at_most(
            "energy increases beyond slack",
            id.monotonicity_violations as f64,
            0.0,
        ));
    }
    let mut stage = Staging::open(cfg)?;
    stage.write("trajectory.csv", |w| traj.write_csv(w))?;
    let snap_dir = stage.tmp.join("snapshots");
    fs::create_dir_all(&snap_dir).map_err(|e| Error::io(&snap_dir, e))?;
    for name in traj.write_snapshots(&snap_dir)? {
        stage.outputs.push(format!("snapshots/{name}"));
    }
    let record = RunRecord::new("solve", cfg, summary, checks);
    let record = stage.commit(record, elapsed(start))?;
    Ok(SolveOutcome { record, verdict, identity })
}

/// Reads a record written by any command.
pub fn read_record(path: &Path) -> Result<RunRecord> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
