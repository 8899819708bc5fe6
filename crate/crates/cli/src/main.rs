//! `polling`: stability checks, simulation, fluid trajectories, reference
//! reproductions and parameter sweeps for the adaptive three-queue system.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use polling_core::experiments::config::{config_from_value, read_text};
use polling_core::experiments::{repro, simulate, sweep, Config, ConfigError, ExperimentError, Scenario, SweepMode};
use polling_core::fluid::{integrate, FluidError, Termination};
use polling_core::stability::check;
use polling_core::{derive_quantities, ModelError, StabilityError};
use serde_json::Value;
use thiserror::Error;

#[derive(Parser)]
#[command(name = "polling", version, about = "Adaptive three-queue polling system toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form stability analysis.
    Stability {
        #[command(subcommand)]
        action: StabilityAction,
    },
    /// Run the simulator and write estimates as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Total cycles, warmup included.
        #[arg(long)]
        cycles: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV; defaults to the config's `run.output`, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fluid-model computations.
    Fluid {
        #[command(subcommand)]
        action: FluidAction,
    },
    /// Simulate a bundled reference scenario and compare with its reference values.
    Repro {
        /// example1..example5, table1 or fig1_limit.
        scenario: String,
        /// Measured cycles per case.
        #[arg(long, default_value_t = 10_000_000)]
        cycles: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the comparison as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a config over a list of values of one numeric field.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted path into the config, e.g. `queues.1.interarrival.mean`.
        #[arg(long)]
        axis: String,
        /// Comma-separated list; may be empty.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Simulate)]
        mode: Mode,
    },
}

#[derive(Subcommand)]
enum StabilityAction {
    /// Print the verdict and every condition.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum FluidAction {
    /// Integrate the fluid model from an initial state.
    Integrate {
        #[arg(long)]
        config: PathBuf,
        /// Initial levels `a,b,c`.
        #[arg(long)]
        q0: String,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Simulate,
    Stability,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Fluid(#[from] FluidError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
    #[error("reproduction outside tolerance")]
    ReproFailed,
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Experiment(e.into())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Experiment(e.into())
    }
}

impl From<StabilityError> for CliError {
    fn from(e: StabilityError) -> Self {
        CliError::Experiment(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::ReproFailed => 3,
            CliError::Usage(_) => 2,
            CliError::Output { .. } => 1,
            CliError::Fluid(e) => match e {
                FluidError::InvalidState(_) | FluidError::WrongDiscipline { .. } | FluidError::NotApplicable(_) => 2,
                _ => 1,
            },
            CliError::Experiment(e) => match e {
                ExperimentError::Config(ConfigError::Io { .. })
                | ExperimentError::Sim(_)
                | ExperimentError::Csv(_)
                | ExperimentError::Io(_) => 1,
                _ => 2,
            },
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::ReproFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Stability { action: StabilityAction::Check { config } } => stability_check(&config),
        Command::Simulate { config, cycles, seed, out } => run_simulate(&config, cycles, seed, out),
        Command::Fluid { action: FluidAction::Integrate { config, q0, t_end, out } } => {
            fluid_integrate(&config, &q0, t_end, &out)
        }
        Command::Repro { scenario, cycles, seed, out } => run_repro(&scenario, cycles, seed, out.as_deref()),
        Command::Sweep { config, axis, values, out, mode } => {
            let values = parse_list(&values, "--values")?;
            let base = read_document(&config)?;
            let mode = match mode {
                Mode::Simulate => SweepMode::Simulate,
                Mode::Stability => SweepMode::Stability,
            };
            sweep(&base, &axis, &values, mode, create(&out)?)?;
            Ok(())
        }
    }
}

fn parse_list(text: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| CliError::Usage(format!("{flag}: {t:?} is not a number"))))
        .collect()
}

fn read_document(path: &Path) -> Result<Value, CliError> {
    Ok(serde_json::from_str(&read_text(path)?).map_err(ConfigError::from)?)
}

fn load(path: &Path) -> Result<Config, CliError> {
    let config = config_from_value(read_document(path)?)?;
    warn(&config);
    Ok(config)
}

fn warn(config: &Config) {
    for w in &config.warnings {
        eprintln!("{w}");
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

fn stability_check(path: &Path) -> Result<(), CliError> {
    let config = load(path)?;
    let derived = derive_quantities(&config.params)?;
    let v = check(&derived, &config.params.limits)?;
    println!("verdict: {}", v.verdict);
    println!("rho0 = {:.6}", derived.rho0);
    for (kind, conds) in [("stability", &v.report.stability), ("instability", &v.report.instability)] {
        for c in conds {
            let edge = if c.on_boundary { " (on boundary)" } else { "" };
            println!("{kind:<11} {:<16} lhs = {:<12.6} holds = {}{edge}", c.name, c.lhs, c.holds);
        }
    }
    Ok(())
}

fn run_simulate(path: &Path, cycles: Option<u64>, seed: Option<u64>, out: Option<PathBuf>) -> Result<(), CliError> {
    let mut doc = read_document(path)?;
    if cycles.is_some() || seed.is_some() || out.is_some() {
        let root = doc.as_object_mut().ok_or_else(|| CliError::Usage("config must be a JSON object".into()))?;
        let run = root.entry("run").or_insert_with(|| Value::Object(Default::default()));
        let run = run.as_object_mut().ok_or_else(|| CliError::Usage("`run` must be an object".into()))?;
        if let Some(c) = cycles {
            run.insert("cycles".into(), c.into());
        }
        if let Some(s) = seed {
            run.insert("seed".into(), s.into());
        }
        if let Some(o) = &out {
            run.insert("output".into(), o.to_string_lossy().into_owned().into());
        }
    }
    let config = config_from_value(doc)?;
    warn(&config);
    let summary = simulate(&config.params, &config.run)?;
    let sink: Box<dyn Write> = match &config.run.output {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    summary.write_csv(sink).map_err(ExperimentError::from)?;
    Ok(())
}

fn fluid_integrate(path: &Path, q0: &str, t_end: f64, out: &Path) -> Result<(), CliError> {
    let q0: [f64; 3] =
        parse_list(q0, "--q0")?.try_into().map_err(|_| CliError::Usage("--q0 needs exactly three levels".into()))?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(CliError::Usage(format!("--t-end must be positive and finite, got {t_end}")));
    }
    let config = load(path)?;
    let derived = derive_quantities(&config.params)?;
    let traj = integrate(&derived, &config.params.limits, q0, t_end)?;
    traj.write_csv(create(out)?).map_err(ExperimentError::from)?;
    match traj.termination {
        Termination::ReachedEnd => eprintln!("reached t = {t_end}"),
        Termination::Drained { at } => eprintln!("drained at t = {at:.6}"),
        Termination::IntervalRegion { at } => {
            eprintln!("stopped at t = {at:.6}: queue 2 emptied and the rates are no longer determined")
        }
    }
    Ok(())
}

fn run_repro(name: &str, cycles: u64, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let scenario: Scenario = name.parse()?;
    if cycles == 0 {
        return Err(CliError::Usage("--cycles must be positive".into()));
    }
    let report = repro(scenario, cycles, seed)?;
    print!("{report}");
    if let Some(p) = out {
        report.write_csv(create(p)?).map_err(ExperimentError::from)?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::ReproFailed)
    }
}
