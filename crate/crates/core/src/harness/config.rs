//! Experiment configuration: one JSON document, unknown keys rejected.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EvolutionConfig;
use crate::grid::{RadialField, RadialGrid};
use crate::initdata::{default_etas, geometric_etas, select_exponents, EtaExponents};
use crate::model::{Condition13Params, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free-form run label; outputs go to `output_dir/<label>/`.
    pub label: String,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub model: ModelParams,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub evolution: Option<EvolutionConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub conditions: Option<ConditionsConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// Uniform mesh unless `ratio` (geometric width ratio towards the origin) or
/// `finest_width` is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_cells: usize,
    #[serde(default)]
    pub ratio: Option<f64>,
    #[serde(default)]
    pub finest_width: Option<f64>,
}

impl GridConfig {
    pub fn build(&self, model: &ModelParams) -> Result<Arc<RadialGrid>> {
        let (n, r, dim) = (self.n_cells, model.radius, model.dim);
        let grid = match (self.ratio, self.finest_width) {
            (None, None) => RadialGrid::uniform(dim, r, n)?,
            (Some(q), None) => RadialGrid::geometric(dim, r, n, q)?,
            (None, Some(h)) => RadialGrid::refined(dim, r, n, h)?,
            (Some(_), Some(_)) => {
                return Err(Error::Config("grid: give either ratio or finest_width, not both".into()))
            }
        };
        Ok(Arc::new(grid))
    }
}

/// A nonnegative radial datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseDatum {
    Constant { value: f64 },
    /// `value + amplitude cos(pi r / R)`
    Cosine { value: f64, amplitude: f64 },
    /// `r,value` file sampled at the cell centres of the configured grid.
    Csv { path: PathBuf },
}

impl BaseDatum {
    pub fn build(&self, grid: Arc<RadialGrid>) -> Result<RadialField> {
        let field = match self {
            BaseDatum::Constant { value } => RadialField::constant(grid, *value)?,
            BaseDatum::Cosine { value, amplitude } => {
                let radius = grid.radius();
                RadialField::from_fn(grid, |r| value + amplitude * (PI * r / radius).cos())?
            }
            BaseDatum::Csv { path } => {
                let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
                RadialField::read_csv(grid, std::io::BufReader::new(file))?
            }
        };
        if field.min() < 0.0 {
            return Err(Error::Config("initial datum must be nonnegative".into()));
        }
        Ok(field)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Constant {
        value: f64,
    },
    /// `base + u_eta + eta^q`. Exponents are selected from the model unless
    /// given explicitly.
    UHat {
        eta: f64,
        base: BaseDatum,
        #[serde(default = "one")]
        p: f64,
        #[serde(default)]
        exponents: Option<EtaExponents>,
    },
    Csv {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

/// Exponents from the config, or selected from the model when absent.
pub fn resolve_exponents(explicit: Option<EtaExponents>, model: &ModelParams, p: f64) -> Result<EtaExponents> {
    match explicit {
        Some(e) => Ok(e),
        None => select_exponents(model, p),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "one")]
    pub p: f64,
    /// Explicit list; otherwise `count` geometric points from `from` to `to`,
    /// otherwise the default 8 points from 0.2 to 0.003.
    #[serde(default)]
    pub etas: Option<Vec<f64>>,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub from: Option<f64>,
    #[serde(default)]
    pub to: Option<f64>,
    #[serde(default = "zero_base")]
    pub base: BaseDatum,
    #[serde(default)]
    pub exponents: Option<EtaExponents>,
}

fn zero_base() -> BaseDatum {
    BaseDatum::Constant { value: 0.0 }
}

impl SweepConfig {
    pub fn etas(&self) -> Result<Vec<f64>> {
        let list = match (&self.etas, self.count, self.from, self.to) {
            (Some(list), None, None, None) => list.clone(),
            (None, Some(count), Some(from), Some(to)) => geometric_etas(from, to, count),
            (None, None, None, None) => default_etas(),
            _ => {
                return Err(Error::Config(
                    "sweep: give either `etas` or all of `count`, `from`, `to`".into(),
                ))
            }
        };
        if list.is_empty() {
            return Err(Error::Config("sweep: the eta list is empty".into()));
        }
        Ok(list)
    }
}

/// Sampling for the structural checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsConfig {
    #[serde(default)]
    pub growth_samples: Option<Vec<f64>>,
    #[serde(default)]
    pub condition13: Option<Condition13Params>,
}

/// 64 log-spaced samples on `[1e-3, 1e6]`.
pub fn default_growth_samples() -> Vec<f64> {
    (0..64).map(|k| 10f64.powf(-3.0 + 9.0 * k as f64 / 63.0)).collect()
}

impl ExperimentConfig {
    /// Minimal config for the given model with everything else defaulted.
    pub fn for_model(label: &str, model: ModelParams) -> Self {
        ExperimentConfig {
            label: label.to_string(),
            output_dir: default_output_dir(),
            model,
            grid: None,
            evolution: None,
            sweep: None,
            initial: None,
            conditions: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.label.is_empty()
            || self.label.starts_with('.')
            || self.label.contains(['/', '\\'])
        {
            return Err(Error::Config(format!("label {:?} is not a plain directory name", self.label)));
        }
        self.model.validate()?;
        if let Some(e) = &self.evolution {
            e.validate()?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<RadialGrid>> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a `grid` section".into()))?
            .build(&self.model)
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(&self.label)
    }
}
