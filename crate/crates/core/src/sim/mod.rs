//! Discrete-event simulation and long-run estimators.

mod engine;
mod trace;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

pub use engine::{Activity, CumulativeRecord, Event, Observer, SimState, Simulator, SATURATED};
pub use trace::TraceWriter;

use crate::model::{ModelError, ModelParams, QUEUES};

/// Number of batches used for confidence half-widths.
pub const BATCHES: u64 = 30;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    InvalidParams(#[from] ModelError),
    #[error("random stream {stream} produced an invalid variate {value}")]
    NonFiniteSample { stream: usize, value: f64 },
    #[error("need cycles > warmup, got cycles = {cycles}, warmup = {warmup}")]
    InvalidRunLength { cycles: u64, warmup: u64 },
    #[error("replication seeds must be distinct; {0} appears twice")]
    DuplicateSeeds(u64),
    #[error("no replication seeds given")]
    NoSeeds,
    #[error("simulation clock stopped advancing at t = {clock}")]
    Stalled { clock: f64 },
    #[error("trace output failed: {0}")]
    Trace(#[from] csv::Error),
}

/// Long-run fractions and rates estimated from one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    /// Fraction of cycles that were reduced.
    pub p: f64,
    /// Fraction of time spent on the 1→3 walk.
    pub u4: f64,
    /// Empty visits per unit time at each station.
    pub empty_visit_rate: [f64; QUEUES],
    /// Time-average queue length (infinite for saturated queues).
    pub mean_queue: [f64; QUEUES],
    /// 95% batch-means half-widths of the fields above.
    pub half_width: HalfWidths,
    /// Measured cycles, warmup excluded.
    pub cycles: u64,
    pub elapsed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfWidths {
    pub p: f64,
    pub u4: f64,
    pub empty_visit_rate: [f64; QUEUES],
    pub mean_queue: [f64; QUEUES],
}

struct Point {
    p: f64,
    u4: f64,
    f: [f64; QUEUES],
    q: [f64; QUEUES],
}

fn point(r: &CumulativeRecord, saturated: &[bool; QUEUES]) -> Point {
    let per_time = |x: f64| if r.elapsed > 0.0 { x / r.elapsed } else { f64::NAN };
    Point {
        p: if r.cycles_total > 0 { r.cycles_reduced as f64 / r.cycles_total as f64 } else { f64::NAN },
        u4: per_time(r.walking[3]),
        f: r.empty_visits.map(|n| per_time(n as f64)),
        q: [0, 1, 2].map(|k| if saturated[k] { f64::INFINITY } else { per_time(r.queue_area[k]) }),
    }
}

/// 95% half-width of the mean of `xs` under a Student t approximation;
/// infinite with fewer than two values.
pub fn half_width(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let t = StudentsT::new(0.0, 1.0, nf - 1.0).expect("positive degrees of freedom").inverse_cdf(0.975);
    t * (var / nf).sqrt()
}

fn estimates(total: &CumulativeRecord, batches: &[CumulativeRecord], saturated: &[bool; QUEUES]) -> Estimates {
    let overall = point(total, saturated);
    let pts: Vec<Point> = batches.iter().map(|b| point(b, saturated)).collect();
    let hw = |f: &dyn Fn(&Point) -> f64| half_width(&pts.iter().map(f).collect::<Vec<_>>());
    Estimates {
        p: overall.p,
        u4: overall.u4,
        empty_visit_rate: overall.f,
        mean_queue: overall.q,
        half_width: HalfWidths {
            p: hw(&|x| x.p),
            u4: hw(&|x| x.u4),
            empty_visit_rate: [0, 1, 2].map(|k| hw(&|x| x.f[k])),
            mean_queue: [0, 1, 2].map(|k| if saturated[k] { 0.0 } else { hw(&|x| x.q[k]) }),
        },
        cycles: total.cycles_total,
        elapsed: total.elapsed,
    }
}

/// Simulate `cycles` cycles in total, discarding the first `warmup`, and
/// estimate over the rest with batch means over equal cycle counts.
pub fn run(params: &ModelParams, cycles: u64, warmup: u64, seed: u64) -> Result<(Estimates, CumulativeRecord), SimError> {
    run_observed(params, cycles, warmup, seed, &mut ())
}

/// [`run`] with every event passed to `observer`.
pub fn run_observed<O: Observer>(
    params: &ModelParams,
    cycles: u64,
    warmup: u64,
    seed: u64,
    observer: &mut O,
) -> Result<(Estimates, CumulativeRecord), SimError> {
    if cycles <= warmup {
        return Err(SimError::InvalidRunLength { cycles, warmup });
    }
    let mut sim = Simulator::new(params, seed)?;
    sim.run_until_cycle(warmup, observer)?;
    sim.reset_record();
    let measured = cycles - warmup;
    let nb = BATCHES.min(measured);
    let mut batches = Vec::with_capacity(nb as usize);
    let mut previous = sim.record().clone();
    for b in 1..=nb {
        sim.run_until_cycle(warmup + measured * b / nb, observer)?;
        let now = sim.record().clone();
        batches.push(now.since(&previous));
        previous = now;
    }
    let total = sim.record().clone();
    Ok((estimates(&total, &batches, &params.saturated), total))
}

/// Mean and standard error of an estimator across replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pooled {
    pub mean: f64,
    /// Infinite with a single replication.
    pub std_error: f64,
}

impl Pooled {
    fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std_error = if !mean.is_finite() {
            // saturated queues report an infinite mean in every run
            0.0
        } else if xs.len() < 2 {
            f64::INFINITY
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        };
        Self { mean, std_error }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replications {
    /// Per-seed estimates in increasing seed order.
    pub runs: Vec<(u64, Estimates)>,
    pub p: Pooled,
    pub u4: Pooled,
    pub empty_visit_rate: [Pooled; QUEUES],
    pub mean_queue: [Pooled; QUEUES],
}

/// Independent runs, one per seed, executed in parallel and pooled.
pub fn run_replications(params: &ModelParams, cycles: u64, warmup: u64, seeds: &[u64]) -> Result<Replications, SimError> {
    if seeds.is_empty() {
        return Err(SimError::NoSeeds);
    }
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(SimError::DuplicateSeeds(w[0]));
    }
    let runs = sorted.par_iter().map(|&s| run(params, cycles, warmup, s).map(|(e, _)| (s, e))).collect::<Result<Vec<_>, _>>()?;
    let pool = |f: &dyn Fn(&Estimates) -> f64| Pooled::of(&runs.iter().map(|(_, e)| f(e)).collect::<Vec<_>>());
    Ok(Replications {
        p: pool(&|e| e.p),
        u4: pool(&|e| e.u4),
        empty_visit_rate: [0, 1, 2].map(|k| pool(&|e| e.empty_visit_rate[k])),
        mean_queue: [0, 1, 2].map(|k| pool(&|e| e.mean_queue[k])),
        runs,
    })
}
