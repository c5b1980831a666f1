use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use kslab::harness::{self, BaseDatum, ExperimentConfig, GridConfig, InitialData, SweepConfig};
use kslab::model::{Condition13Params, ModelParams};
use kslab::Error;

#[derive(Parser)]
#[command(name = "kslab", version, about = "Radial Keller-Segel numerical lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the regime verdict for (N, m, sigma).
    Classify(ModelArgs),
    /// Check the growth condition on G and the superlinear-growth condition.
    Check(CheckArgs),
    /// Build and write the spike initial data.
    Construct(RunArgs),
    /// Run an eta sweep and fit the scaling laws.
    Sweep(RunArgs),
    /// Evolve an initial datum and record energy diagnostics.
    Solve(RunArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Experiment config (JSON); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "N")]
    dim: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long = "c-g")]
    c_g: Option<f64>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    s0: Option<f64>,
    #[arg(long = "K")]
    k: Option<f64>,
    #[arg(long)]
    delta13: Option<f64>,
    #[arg(long = "s-max")]
    s_max: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    label: Option<String>,
    #[arg(long = "output-dir")]
    output_dir: Option<PathBuf>,
    #[arg(long = "n-cells")]
    n_cells: Option<usize>,
    #[arg(long = "finest-width")]
    finest_width: Option<f64>,
    /// Spike parameter for construct and solve.
    #[arg(long)]
    eta: Option<f64>,
    /// Norm exponent for exponent selection.
    #[arg(long)]
    p: Option<f64>,
    /// Comma-separated eta list for sweep.
    #[arg(long, value_delimiter = ',')]
    etas: Option<Vec<f64>>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn base_config(args: &ModelArgs, label: &str) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let (dim, m, sigma) = match (args.dim, args.m, args.sigma) {
                (Some(d), Some(m), Some(s)) => (d, m, s),
                _ => return Err(usage("give --config or all of --N, --m, --sigma")),
            };
            ExperimentConfig::for_model(label, ModelParams::new(dim, m, sigma))
        }
    };
    if let Some(d) = args.dim {
        cfg.model.dim = d;
    }
    if let Some(m) = args.m {
        cfg.model.m = m;
    }
    if let Some(s) = args.sigma {
        cfg.model.sigma = s;
    }
    if let Some(r) = args.radius {
        cfg.model.radius = r;
    }
    if let Some(c) = args.c_g {
        cfg.model.c_g = c;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_config(args: &RunArgs, command: &str) -> Result<ExperimentConfig, Error> {
    let mut cfg = base_config(&args.model, command)?;
    if let Some(label) = &args.label {
        cfg.label = label.clone();
    }
    if let Some(dir) = &args.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(eta) = args.eta {
        match &mut cfg.initial {
            Some(InitialData::UHat { eta: e, .. }) => *e = eta,
            _ => {
                cfg.initial = Some(InitialData::UHat {
                    eta,
                    base: BaseDatum::Constant { value: 0.0 },
                    p: args.p.unwrap_or(1.0),
                    exponents: None,
                })
            }
        }
    }
    if let Some(p) = args.p {
        if let Some(InitialData::UHat { p: q, .. }) = &mut cfg.initial {
            *q = p;
        }
        if let Some(s) = &mut cfg.sweep {
            s.p = p;
        }
    }
    if let Some(etas) = &args.etas {
        let s = cfg.sweep.get_or_insert_with(|| serde_json::from_str::<SweepConfig>("{}").expect("empty sweep"));
        s.etas = Some(etas.clone());
        s.count = None;
        s.from = None;
        s.to = None;
    }
    if command == "sweep" && cfg.sweep.is_none() {
        cfg.sweep = Some(serde_json::from_str("{}").expect("empty sweep"));
    }
    if let Some(t) = args.t_end {
        let e = cfg
            .evolution
            .as_mut()
            .ok_or_else(|| usage("--t-end needs an `evolution` section in the config"))?;
        e.t_end = t;
    }
    let grid = cfg.grid.get_or_insert(GridConfig {
        n_cells: 400,
        ratio: None,
        finest_width: None,
    });
    if let Some(n) = args.n_cells {
        grid.n_cells = n;
    }
    if let Some(h) = args.finest_width {
        grid.finest_width = Some(h);
        grid.ratio = None;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)?;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Classify(args) => print_json(&harness::cmd_classify(&base_config(&args, "classify")?.model)?),
        Command::Check(args) => {
            let cfg = base_config(&args.model, "check")?;
            let mut conditions = cfg.conditions.clone().unwrap_or(harness::ConditionsConfig {
                growth_samples: None,
                condition13: None,
            });
            let mut c13 = conditions.condition13.unwrap_or_else(Condition13Params::default);
            if let Some(v) = args.s0 {
                c13.s0 = v;
            }
            if let Some(v) = args.k {
                c13.k = v;
            }
            if let Some(v) = args.delta13 {
                c13.delta13 = v;
            }
            if let Some(v) = args.s_max {
                c13.s_max = v;
            }
            if let Some(v) = args.samples {
                c13.n_samples = v;
            }
            conditions.condition13 = Some(c13);
            let report = harness::cmd_check(&cfg.model, Some(&conditions))?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            print_json(&report)
        }
        Command::Construct(args) => print_json(&harness::cmd_construct(&run_config(&args, "construct")?)?),
        Command::Sweep(args) => {
            let (_, record) = harness::cmd_sweep(&run_config(&args, "sweep")?)?;
            print_json(&record)
        }
        Command::Solve(args) => print_json(&harness::cmd_solve(&run_config(&args, "solve")?)?.record),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidParams(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
