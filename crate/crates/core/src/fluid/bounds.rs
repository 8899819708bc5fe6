use super::Region;
use crate::model::{DerivedQuantities, Limits};

/// Closed-form bounds on one queue's busy-time rate `T'_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusyTimeEnvelope {
    pub lower: f64,
    pub upper: f64,
}

/// Bounds on `T'_k` in `region` under limited service.
///
/// Queues outside the region track their load exactly. With queue 2 nonempty
/// every queue in the region receives its share of a common cycle rate. With
/// queue 2 empty the cycle rate is bracketed by two lower bounds (one assuming
/// queue 2 is dispatched to at its arrival rate, one with no reduced cycles)
/// and one upper bound (dispatch at the minimum rate `lambda_2 / l_2`).
/// Assumes `zeta > zeta*`.
pub fn busy_time_envelope(derived: &DerivedQuantities, limits: &Limits, region: Region, k: usize) -> BusyTimeEnvelope {
    if !region.contains(k) {
        let b = derived.beta[k];
        return BusyTimeEnvelope { lower: b, upper: b };
    }
    let load_in: f64 = region.members().map(|i| derived.beta[i]).sum();
    let work: f64 = region.members().map(|i| limits.get(i) * derived.mean_service[i]).sum();
    let spare = 1.0 - derived.rho0 + load_in;
    let share = limits.get(k) * derived.mean_service[k];
    if region.contains(1) {
        let t = share * spare / (derived.zeta + work);
        return BusyTimeEnvelope { lower: t, upper: t };
    }
    let half_sum = (derived.zeta + derived.zeta_star) / 2.0;
    let half_gap = (derived.zeta - derived.zeta_star) / 2.0;
    let lambda2 = derived.lambda[1];
    let mixed = |dispatch: f64| share * (spare - dispatch * half_gap) / (half_sum + work);
    let plain = share * spare / (derived.zeta + work);
    BusyTimeEnvelope { lower: mixed(lambda2).max(plain), upper: mixed(lambda2 / limits.get(1)) }
}
