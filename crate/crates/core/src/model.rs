//! System parameters, derived scalars and the cycle-type rule.
//!
//! Queues are indexed 0..3 for stations 1..3. Switch-over legs are indexed
//! 0..4 for the walks 1→2, 2→3, 3→1 and 1→3. All derived quantities are
//! written in terms of means, so zero service or walking times (infinite
//! rates) are representable.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::DistributionSpec;

pub const QUEUES: usize = 3;
pub const LEGS: usize = 4;

/// Service discipline applied at every queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discipline {
    Limited,
    Gated,
    Exhaustive,
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Discipline::Limited => "limited",
            Discipline::Gated => "gated",
            Discipline::Exhaustive => "exhaustive",
        })
    }
}

/// A switch-over leg of the server route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leg {
    OneToTwo,
    TwoToThree,
    ThreeToOne,
    OneToThree,
}

impl Leg {
    pub const ALL: [Leg; LEGS] = [Leg::OneToTwo, Leg::TwoToThree, Leg::ThreeToOne, Leg::OneToThree];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Zero-based station the leg walks to.
    pub fn destination(self) -> usize {
        match self {
            Leg::OneToTwo => 1,
            Leg::TwoToThree | Leg::OneToThree => 2,
            Leg::ThreeToOne => 0,
        }
    }
}

/// Per-queue visit limits `l_k`; only meaningful under [`Discipline::Limited`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits(pub [u32; QUEUES]);

impl Limits {
    pub fn get(&self, k: usize) -> f64 {
        f64::from(self.0[k])
    }
}

/// Full parameterization of the polling system.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// `None` is allowed only for saturated queues, which have no input stream.
    pub interarrival: [Option<DistributionSpec>; QUEUES],
    pub service: [DistributionSpec; QUEUES],
    /// Indexed by [`Leg::index`].
    pub switchover: [DistributionSpec; LEGS],
    pub discipline: Discipline,
    pub limits: Limits,
    /// Saturated queues are never empty and never drained.
    pub saturated: [bool; QUEUES],
}

#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    InvalidDistribution {
        field: String,
        reason: String,
    },
    MissingInterarrival {
        queue: usize,
    },
    NonPositiveInterarrivalMean {
        queue: usize,
    },
    LimitBelowOne {
        queue: usize,
    },
    SaturationRequiresLimited {
        queue: usize,
    },
    NoSwitchoverTime,
    /// Warning: the reduced cycle is not shorter on average than the standard one.
    AssumptionViolated {
        zeta: f64,
        zeta_star: f64,
    },
}

impl Issue {
    pub fn is_warning(&self) -> bool {
        matches!(self, Issue::AssumptionViolated { .. })
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::InvalidDistribution { field, reason } => write!(f, "{field}: {reason}"),
            Issue::MissingInterarrival { queue } => {
                write!(f, "queue {}: interarrival law required for a non-saturated queue", queue + 1)
            }
            Issue::NonPositiveInterarrivalMean { queue } => {
                write!(f, "queue {}: interarrival mean must be > 0", queue + 1)
            }
            Issue::LimitBelowOne { queue } => write!(f, "queue {}: limit must be >= 1", queue + 1),
            Issue::SaturationRequiresLimited { queue } => {
                write!(f, "queue {}: a saturated queue needs the limited discipline to finish a visit", queue + 1)
            }
            Issue::NoSwitchoverTime => f.write_str("mean switch-over time per standard cycle must be > 0"),
            Issue::AssumptionViolated { zeta, zeta_star } => write!(
                f,
                "warning: zeta = {zeta} does not exceed zeta* = {zeta_star}; skipping queue 2 does not shorten the cycle"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameters: {}", list(.0))]
    InvalidParams(Vec<Issue>),
    #[error("queue-2 observation is only defined for standard cycles")]
    InconsistentInput,
}

fn list(issues: &[Issue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

/// Scalars derived from analytic means.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedQuantities {
    /// Arrival rates; zero for a saturated queue without an input law.
    pub lambda: [f64; QUEUES],
    pub mean_service: [f64; QUEUES],
    /// `lambda_k * E sigma_k`.
    pub beta: [f64; QUEUES],
    pub rho0: f64,
    pub mean_switchover: [f64; LEGS],
    /// Mean switch-over time of a standard cycle.
    pub zeta: f64,
    /// Mean switch-over time of a reduced cycle.
    pub zeta_star: f64,
    pub discipline: Discipline,
    pub saturated: [bool; QUEUES],
    pub warnings: Vec<Issue>,
}

impl DerivedQuantities {
    /// Build directly from rates and means, bypassing distribution specs.
    pub fn from_means(
        lambda: [f64; QUEUES],
        mean_service: [f64; QUEUES],
        mean_switchover: [f64; LEGS],
        discipline: Discipline,
        saturated: [bool; QUEUES],
    ) -> Self {
        let beta = [0, 1, 2].map(|k| lambda[k] * mean_service[k]);
        let zeta = mean_switchover[0] + mean_switchover[1] + mean_switchover[2];
        let zeta_star = mean_switchover[2] + mean_switchover[3];
        let mut warnings = Vec::new();
        if zeta <= zeta_star {
            warnings.push(Issue::AssumptionViolated { zeta, zeta_star });
        }
        Self {
            lambda,
            mean_service,
            beta,
            rho0: beta.iter().sum(),
            mean_switchover,
            zeta,
            zeta_star,
            discipline,
            saturated,
            warnings,
        }
    }

    /// Service rate `mu_k`, or `None` when service is instantaneous.
    pub fn service_rate(&self, k: usize) -> Option<f64> {
        (self.mean_service[k] > 0.0).then(|| 1.0 / self.mean_service[k])
    }

    /// Switch-over rate `nu_j`, or `None` when the walk is instantaneous.
    pub fn switchover_rate(&self, leg: Leg) -> Option<f64> {
        let m = self.mean_switchover[leg.index()];
        (m > 0.0).then(|| 1.0 / m)
    }

    pub fn any_saturated(&self) -> bool {
        self.saturated.iter().any(|&s| s)
    }
}

/// Check every modeling assumption; an empty list means the parameters are usable.
/// Warnings are included but do not make the parameters unusable.
pub fn validate(params: &ModelParams) -> Vec<Issue> {
    let mut issues = Vec::new();
    let mut check = |field: String, spec: &DistributionSpec| {
        if let Err(e) = spec.validate() {
            issues.push(Issue::InvalidDistribution { field, reason: e.to_string() });
            false
        } else {
            true
        }
    };
    let mut interarrival_ok = [true; QUEUES];
    for k in 0..QUEUES {
        if let Some(spec) = &params.interarrival[k] {
            interarrival_ok[k] = check(format!("queue {} interarrival", k + 1), spec);
        }
        check(format!("queue {} service", k + 1), &params.service[k]);
    }
    let leg_names = ["s12", "s23", "s31", "s13"];
    let mut legs_ok = true;
    for (j, spec) in params.switchover.iter().enumerate() {
        legs_ok &= check(format!("switchover {}", leg_names[j]), spec);
    }
    for k in 0..QUEUES {
        match (&params.interarrival[k], params.saturated[k]) {
            (None, false) => issues.push(Issue::MissingInterarrival { queue: k }),
            (Some(spec), false) if interarrival_ok[k] => {
                if !(spec.mean().unwrap_or(0.0) > 0.0) {
                    issues.push(Issue::NonPositiveInterarrivalMean { queue: k });
                }
            }
            _ => {}
        }
        if params.discipline == Discipline::Limited && params.limits.0[k] < 1 {
            issues.push(Issue::LimitBelowOne { queue: k });
        }
        if params.saturated[k] && params.discipline != Discipline::Limited {
            issues.push(Issue::SaturationRequiresLimited { queue: k });
        }
    }
    if legs_ok {
        let m: Vec<f64> = params.switchover.iter().map(|s| s.mean().unwrap_or(0.0)).collect();
        let zeta = m[0] + m[1] + m[2];
        let zeta_star = m[2] + m[3];
        if !(zeta > 0.0) {
            issues.push(Issue::NoSwitchoverTime);
        }
        if zeta <= zeta_star {
            issues.push(Issue::AssumptionViolated { zeta, zeta_star });
        }
    }
    issues
}

/// Derive the rate and load scalars from analytic means.
pub fn derive_quantities(params: &ModelParams) -> Result<DerivedQuantities, ModelError> {
    let issues = validate(params);
    let violations: Vec<Issue> = issues.iter().filter(|i| !i.is_warning()).cloned().collect();
    if !violations.is_empty() {
        return Err(ModelError::InvalidParams(violations));
    }
    // validated above, so every mean() is Ok
    let mean = |s: &DistributionSpec| s.mean().expect("validated");
    let lambda = [0, 1, 2].map(|k| match (&params.interarrival[k], params.saturated[k]) {
        (Some(spec), _) => 1.0 / mean(spec),
        (None, _) => 0.0,
    });
    Ok(DerivedQuantities::from_means(
        lambda,
        params.service.each_ref().map(mean),
        params.switchover.each_ref().map(mean),
        params.discipline,
        params.saturated,
    ))
}

/// Route type of a polling cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleType {
    /// 1 → 2 → 3 → 1
    Standard,
    /// 1 → 3 → 1
    Reduced,
}

impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CycleType::Standard => "standard",
            CycleType::Reduced => "reduced",
        })
    }
}

/// Type of the cycle following `current`. `q2_found_empty` must be `Some`
/// exactly when `current` is standard.
pub fn next_cycle_type(current: CycleType, q2_found_empty: Option<bool>) -> Result<CycleType, ModelError> {
    match (current, q2_found_empty) {
        (CycleType::Standard, Some(true)) => Ok(CycleType::Reduced),
        (CycleType::Standard, Some(false)) => Ok(CycleType::Standard),
        (CycleType::Reduced, None) => Ok(CycleType::Standard),
        _ => Err(ModelError::InconsistentInput),
    }
}
