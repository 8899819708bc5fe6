use super::{gated_exhaustive_rates, region_rates, FluidError, FluidState, Rate};
use crate::model::{DerivedQuantities, Discipline, Limits};
use crate::stability::{check, Verdict};

/// Drift of `W = sum_k E sigma_k * Q_k` and a drain deadline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftCertificate {
    /// `W'` at the given state.
    pub derivative: Rate,
    /// `W' <= -epsilon` whenever `W > 0` and queue 2 is empty.
    pub epsilon: f64,
    /// Every trajectory with `|Q(0)| <= 1` is empty from this time on.
    pub deadline: f64,
}

/// Drift bound and drain deadline, available only when the model satisfies
/// the sufficient stability conditions and every service time is positive.
pub fn lyapunov_drift(derived: &DerivedQuantities, limits: &Limits, state: &FluidState) -> Result<DriftCertificate, FluidError> {
    let not_applicable = |why: &str| FluidError::NotApplicable(format!("drift bound not applicable: {why}"));
    if derived.any_saturated() {
        return Err(not_applicable("model has a saturated queue"));
    }
    if derived.mean_service.iter().any(|&m| m <= 0.0) {
        return Err(not_applicable("a zero service time leaves W blind to that queue"));
    }
    let verdict = check(derived, limits).map_err(|e| not_applicable(&e.to_string()))?;
    if verdict.verdict != Verdict::Stable {
        return Err(not_applicable("stability conditions do not hold"));
    }
    let max_service = derived.mean_service.iter().copied().fold(0.0, f64::max);
    if derived.discipline != Discipline::Limited {
        let epsilon = 1.0 - derived.rho0;
        let derivative = gated_exhaustive_rates(derived, state)?.lyapunov_derivative(derived.rho0);
        return Ok(DriftCertificate { derivative, epsilon, deadline: max_service / epsilon });
    }

    if derived.zeta <= derived.zeta_star {
        return Err(not_applicable("skipping queue 2 must shorten the cycle (zeta > zeta*)"));
    }
    let derivative = region_rates(derived, limits, state)?.lyapunov_derivative(derived.rho0);
    let epsilon = empty_queue2_drift(derived, limits);
    if epsilon <= 0.0 {
        return Err(not_applicable("drift bound is not negative"));
    }
    let settle = drain_slow_queues(derived, limits);
    Ok(DriftCertificate { derivative, epsilon, deadline: settle + (max_service + derived.rho0 * settle) / epsilon })
}

/// Time by which every queue with `lambda_j / l_j <= lambda_2 / l_2`
/// (queue 2 included) has drained, starting from `|Q(0)| <= 1`. Queues are
/// handled in increasing order of `lambda_j / l_j`; each drains at a
/// guaranteed rate once the earlier ones are empty.
fn drain_slow_queues(d: &DerivedQuantities, l: &Limits) -> f64 {
    let per_visit = [0, 1, 2].map(|k| d.lambda[k] / l.get(k));
    let mut order: Vec<usize> = (0..3).filter(|&k| per_visit[k] <= per_visit[1]).collect();
    order.sort_by(|&a, &b| per_visit[a].total_cmp(&per_visit[b]));
    let work: f64 = (0..3).map(|k| l.get(k) * d.mean_service[k]).sum();
    order.into_iter().fold(0.0, |t, j| {
        let rate = l.get(j) * (1.0 - d.rho0 - per_visit[j] * d.zeta) / (d.zeta + work);
        t + (1.0 + d.lambda[j] * t) / rate
    })
}

/// Guaranteed decrease rate of `W` while queue 2 is empty, taking for each
/// possible set of nonempty outer queues the better of the two busy-time
/// lower bounds.
fn empty_queue2_drift(d: &DerivedQuantities, l: &Limits) -> f64 {
    let half_sum = (d.zeta + d.zeta_star) / 2.0;
    let half_gap = (d.zeta - d.zeta_star) / 2.0;
    let weight = |k: usize| l.get(k) * d.mean_service[k];
    let per_visit = |k: usize| d.lambda[k] / l.get(k);
    let sets: [&[usize]; 3] = [&[0], &[2], &[0, 2]];
    sets.iter()
        .map(|set| {
            let w: f64 = set.iter().map(|&k| weight(k)).sum();
            let plain: f64 = set.iter().map(|&k| weight(k) * (1.0 - d.rho0 - per_visit(k) * d.zeta)).sum::<f64>() / (d.zeta + w);
            let mixed: f64 =
                set.iter().map(|&k| weight(k) * (1.0 - d.rho0 - per_visit(k) * half_sum - d.lambda[1] * half_gap)).sum::<f64>()
                    / (half_sum + w);
            plain.max(mixed)
        })
        .fold(f64::INFINITY, f64::min)
}
