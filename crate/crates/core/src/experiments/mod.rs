//! Configuration files, reference scenarios, reproduction runs and sweeps.

pub mod config;
mod repro;
pub mod scenarios;
mod sweep;

use std::io::Write;

use thiserror::Error;

pub use config::{load_config, parse_config, Config, ConfigError, ConfigFile, RunSpec};
pub use repro::{repro, ReproReport, ReproRow};
pub use scenarios::{Quantity, ReferenceValue, ReproCase, Scenario};
pub use sweep::{set_path, sweep, SweepMode};

use crate::format::sig6;
use crate::model::{ModelError, ModelParams, QUEUES};
use crate::sim::{self, half_width, SimError, TraceWriter};
use crate::stability::StabilityError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error("unknown scenario {name:?}; expected one of {names}", name = .0, names = Scenario::NAMES.join(", "))]
    UnknownScenario(String),
    #[error("bad sweep axis {path:?}: {reason}")]
    BadAxis { path: String, reason: String },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Bundled configuration files by name.
pub fn bundled_config(name: &str) -> Option<&'static str> {
    Some(match name {
        "example1" => include_str!("../../configs/example1.json"),
        "example2" => include_str!("../../configs/example2.json"),
        "example3" => include_str!("../../configs/example3.json"),
        "example4" => include_str!("../../configs/example4.json"),
        "example5" => include_str!("../../configs/example5.json"),
        "weibull" => include_str!("../../configs/weibull.json"),
        "fluid_probe" => include_str!("../../configs/fluid_probe.json"),
        "symmetric" => include_str!("../../configs/symmetric.json"),
        _ => return None,
    })
}

/// Point estimates with 95% half-widths, from one run or pooled replications.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub p: f64,
    pub p_half_width: f64,
    pub u4: f64,
    pub u4_half_width: f64,
    pub empty_visit_rate: [f64; QUEUES],
    pub mean_queue: [f64; QUEUES],
    pub replications: u32,
    /// Measured cycles per replication.
    pub cycles: u64,
}

impl SimulationSummary {
    pub const HEADER: [&'static str; 12] =
        ["p", "p_half_width", "u4", "u4_half_width", "f1", "f2", "f3", "mean_q1", "mean_q2", "mean_q3", "replications", "cycles"];

    pub fn fields(&self) -> Vec<String> {
        let mut v = vec![sig6(self.p), sig6(self.p_half_width), sig6(self.u4), sig6(self.u4_half_width)];
        v.extend(self.empty_visit_rate.iter().map(|&x| sig6(x)));
        v.extend(self.mean_queue.iter().map(|&x| sig6(x)));
        v.push(self.replications.to_string());
        v.push(self.cycles.to_string());
        v
    }

    /// Header plus one row.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::HEADER)?;
        w.write_record(self.fields())?;
        w.flush()?;
        Ok(())
    }
}

/// Simulate `params` under `run`: a single run uses batch-means half-widths,
/// several replications use the spread across replications.
pub fn simulate(params: &ModelParams, run: &RunSpec) -> Result<SimulationSummary, ExperimentError> {
    if run.replications == 1 {
        let (e, _) = if run.emit_trace {
            let path = trace_path(run);
            let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
            let mut trace = TraceWriter::new(file)?;
            let out = sim::run_observed(params, run.cycles, run.warmup_cycles, run.seed, &mut trace)?;
            trace.finish()?.flush()?;
            out
        } else {
            sim::run(params, run.cycles, run.warmup_cycles, run.seed)?
        };
        return Ok(SimulationSummary {
            p: e.p,
            p_half_width: e.half_width.p,
            u4: e.u4,
            u4_half_width: e.half_width.u4,
            empty_visit_rate: e.empty_visit_rate,
            mean_queue: e.mean_queue,
            replications: 1,
            cycles: e.cycles,
        });
    }
    let reps = sim::run_replications(params, run.cycles, run.warmup_cycles, &run.seeds())?;
    let spread = |f: &dyn Fn(&sim::Estimates) -> f64| half_width(&reps.runs.iter().map(|(_, e)| f(e)).collect::<Vec<_>>());
    Ok(SimulationSummary {
        p: reps.p.mean,
        p_half_width: spread(&|e| e.p),
        u4: reps.u4.mean,
        u4_half_width: spread(&|e| e.u4),
        empty_visit_rate: reps.empty_visit_rate.map(|x| x.mean),
        mean_queue: reps.mean_queue.map(|x| x.mean),
        replications: run.replications,
        cycles: run.cycles - run.warmup_cycles,
    })
}

fn trace_path(run: &RunSpec) -> std::path::PathBuf {
    match &run.output {
        Some(out) => out.with_extension("trace.csv"),
        None => "trace.csv".into(),
    }
}
