//! Closed-form stability and instability conditions.
//!
//! Under limited service the sufficient stability conditions and the
//! sufficient instability conditions leave a gap when `l_2 > 1`; parameters
//! in that gap are reported as [`Verdict::Indeterminate`]. With `l_2 = 1`, and
//! for gated or exhaustive service, the two sets are complementary.
//!
//! Every condition is evaluated in floating point; a left-hand side within
//! [`EQUALITY_BAND`] of 1 is flagged as on the boundary, and the raw value is
//! always reported.

use std::fmt;

use thiserror::Error;

use crate::format::sig6;
use crate::model::{DerivedQuantities, Discipline, Limits};

/// Width of the band around 1 treated as equality.
pub const EQUALITY_BAND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StabilityError {
    #[error("stability conditions are not defined for a model with saturated queues")]
    SaturatedModelRejected,
    #[error("condition set requires the limited discipline, got {0}")]
    NotLimitedDiscipline(Discipline),
    #[error("condition set requires gated or exhaustive service, got limited")]
    NotGatedOrExhaustive,
}

/// One inequality of the form `lhs < 1` (stability) or `lhs >= 1` (instability).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub name: &'static str,
    pub lhs: f64,
    /// For a stability condition: `lhs < 1` outside the band.
    /// For an instability condition: `lhs >= 1` up to the band.
    pub holds: bool,
    /// Instability only: `lhs > 1` outside the band.
    pub strict: bool,
    pub on_boundary: bool,
}

impl Condition {
    fn stability(name: &'static str, lhs: f64) -> Self {
        let on_boundary = (lhs - 1.0).abs() <= EQUALITY_BAND;
        Self { name, lhs, holds: lhs < 1.0 && !on_boundary, strict: lhs < 1.0 && !on_boundary, on_boundary }
    }

    fn instability(name: &'static str, lhs: f64) -> Self {
        let on_boundary = (lhs - 1.0).abs() <= EQUALITY_BAND;
        Self { name, lhs, holds: lhs >= 1.0 || on_boundary, strict: lhs > 1.0 && !on_boundary, on_boundary }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub stability: Vec<Condition>,
    pub instability: Vec<Condition>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable { transient: bool },
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable { transient: true } => "unstable-transient",
            Verdict::Unstable { transient: false } => "unstable",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    pub report: ConditionReport,
}

impl StabilityVerdict {
    fn classify(report: ConditionReport) -> Self {
        let verdict = if report.stability.iter().all(|c| c.holds) {
            Verdict::Stable
        } else if report.instability.iter().any(|c| c.holds) {
            Verdict::Unstable { transient: report.instability.iter().any(|c| c.strict) }
        } else {
            Verdict::Indeterminate
        };
        Self { verdict, report }
    }

    /// Flat `(column, value)` record: verdict, then every condition's left-hand
    /// side and flag.
    pub fn to_record(&self) -> Vec<(String, String)> {
        let mut rec = vec![("verdict".to_string(), self.verdict.to_string())];
        for c in self.report.stability.iter().chain(&self.report.instability) {
            rec.push((format!("{}_lhs", c.name), sig6(c.lhs)));
            rec.push((format!("{}_holds", c.name), c.holds.to_string()));
        }
        rec
    }
}

/// Evaluate whichever condition set applies to the model's discipline.
pub fn check(derived: &DerivedQuantities, limits: &Limits) -> Result<StabilityVerdict, StabilityError> {
    match derived.discipline {
        Discipline::Limited => check_limited(derived, limits),
        Discipline::Gated | Discipline::Exhaustive => check_gated_exhaustive(derived),
    }
}

struct LimitedTerms {
    rho0: f64,
    zeta: f64,
    /// (zeta + zeta*) / 2
    half_sum: f64,
    /// (zeta - zeta*) / 2
    half_gap: f64,
    /// lambda_k / l_k
    per_visit: [f64; 3],
    lambda2: f64,
}

impl LimitedTerms {
    fn new(d: &DerivedQuantities, l: &Limits) -> Self {
        Self {
            rho0: d.rho0,
            zeta: d.zeta,
            half_sum: (d.zeta + d.zeta_star) / 2.0,
            half_gap: (d.zeta - d.zeta_star) / 2.0,
            per_visit: [0, 1, 2].map(|k| d.lambda[k] / l.get(k)),
            lambda2: d.lambda[1],
        }
    }

    /// `rho0 + (lambda_j/l_j)(zeta+zeta*)/2 + w (zeta-zeta*)/2`; the instability
    /// form uses `w = lambda_2/l_2`, the stability form `w = lambda_2`.
    fn mixed(&self, j: usize, w: f64) -> f64 {
        self.rho0 + self.per_visit[j] * self.half_sum + w * self.half_gap
    }

    fn plain(&self, j: usize) -> f64 {
        self.rho0 + self.per_visit[j] * self.zeta
    }
}

fn reject_saturated(derived: &DerivedQuantities) -> Result<(), StabilityError> {
    if derived.any_saturated() {
        Err(StabilityError::SaturatedModelRejected)
    } else {
        Ok(())
    }
}

pub fn check_limited(derived: &DerivedQuantities, limits: &Limits) -> Result<StabilityVerdict, StabilityError> {
    reject_saturated(derived)?;
    if derived.discipline != Discipline::Limited {
        return Err(StabilityError::NotLimitedDiscipline(derived.discipline));
    }
    let t = LimitedTerms::new(derived, limits);
    let stability = vec![
        Condition::stability("st1", t.plain(1)),
        Condition::stability("st2", t.mixed(0, t.lambda2).min(t.plain(0))),
        Condition::stability("st3", t.mixed(2, t.lambda2).min(t.plain(2))),
    ];
    let instability = vec![
        Condition::instability("inst1", t.plain(1)),
        Condition::instability("inst2", t.mixed(0, t.per_visit[1])),
        Condition::instability("inst3", t.mixed(2, t.per_visit[1])),
    ];
    Ok(StabilityVerdict::classify(ConditionReport { stability, instability }))
}

pub fn check_gated_exhaustive(derived: &DerivedQuantities) -> Result<StabilityVerdict, StabilityError> {
    reject_saturated(derived)?;
    if derived.discipline == Discipline::Limited {
        return Err(StabilityError::NotGatedOrExhaustive);
    }
    Ok(StabilityVerdict::classify(ConditionReport {
        stability: vec![Condition::stability("rho0_below_1", derived.rho0)],
        instability: vec![Condition::instability("rho0_at_least_1", derived.rho0)],
    }))
}

/// Guaranteed lower bounds on the fluid growth rate of each queue when the
/// system starts empty. A positive entry certifies that the queue diverges.
pub fn divergence_rates(derived: &DerivedQuantities, limits: &Limits) -> Result<[f64; 3], StabilityError> {
    reject_saturated(derived)?;
    if derived.discipline != Discipline::Limited {
        return Err(StabilityError::NotLimitedDiscipline(derived.discipline));
    }
    let t = LimitedTerms::new(derived, limits);
    let work_per_visit = |k: usize| limits.get(k) * derived.mean_service[k];
    let outer = |j: usize| limits.get(j) * (t.mixed(j, t.per_visit[1]) - 1.0) / (t.half_sum + work_per_visit(j));
    let queue2 = limits.get(1) * (t.plain(1) - 1.0) / (t.zeta + work_per_visit(1));
    Ok([outer(0), queue2, outer(2)])
}
