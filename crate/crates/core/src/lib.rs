//! Simulation and stability analysis of a single-server, three-queue cyclic
//! polling system whose server skips queue 2 for one cycle after finding it
//! empty.
//!
//! - [`distributions`]: probability laws with analytic moments and
//!   inverse-transform sampling.
//! - [`model`]: parameters, derived rates and loads, and the cycle-type rule.
//! - [`sim`]: the discrete-event simulator and its long-run estimators.
//! - [`stability`]: closed-form stability and instability conditions.
//! - [`fluid`]: fluid-model rates, trajectories and Lyapunov drift bounds.
//! - [`experiments`]: configuration files, reference scenarios and sweeps.

pub mod distributions;
pub mod experiments;
pub mod fluid;
pub mod format;
pub mod model;
pub mod sim;
pub mod stability;

pub use distributions::{DistributionError, DistributionSpec, Sampler};
pub use model::{
    derive_quantities, next_cycle_type, validate, CycleType, DerivedQuantities, Discipline, Issue, Leg, Limits, ModelError,
    ModelParams,
};
pub use sim::{run, run_replications, CumulativeRecord, Estimates, SimError, SimState, Simulator};
pub use stability::{ConditionReport, StabilityError, StabilityVerdict, Verdict};
