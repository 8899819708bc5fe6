use super::{FluidError, FluidState, Rate, RateSolution, RATE_TOLERANCE};
use crate::model::{DerivedQuantities, Discipline};

/// Fluid rates for gated or exhaustive service.
///
/// With any fluid present the server works all the time and never walks, but
/// only the total busy rate is determined. Queues in the region get intervals
/// that together sum to the work left after the empty queues' load.
pub fn gated_exhaustive_rates(derived: &DerivedQuantities, state: &FluidState) -> Result<RateSolution, FluidError> {
    if derived.discipline == Discipline::Limited {
        return Err(FluidError::WrongDiscipline { expected: "gated or exhaustive" });
    }
    let region = state.region();
    let lambda = derived.lambda;
    if state.is_empty() {
        let idle = 1.0 - derived.rho0;
        if idle < -RATE_TOLERANCE {
            return Err(FluidError::InfeasibleRegion {
                region,
                reason: format!("load {} exceeds capacity at the empty state", derived.rho0),
            });
        }
        let idle = idle.max(0.0);
        let walking = derived.mean_switchover.map(|m| if m > 0.0 { Rate::span(0.0, idle) } else { Rate::Exact(0.0) });
        return Ok(RateSolution {
            region,
            busy: derived.beta.map(Rate::Exact),
            walking,
            level: [Rate::Exact(0.0); 3],
            total_busy: Rate::Exact(derived.rho0),
            total_walking: Rate::Exact(idle),
            completions: None,
            tight: walking.iter().all(|r| r.exact().is_some()),
        });
    }

    let outside: f64 = (0..3).filter(|&k| !region.contains(k)).map(|k| derived.beta[k]).sum();
    let left = 1.0 - outside;
    if left < -RATE_TOLERANCE {
        return Ok(overloaded_empties(derived, state));
    }
    let left = left.max(0.0);
    let single = region.members().count() == 1;
    let mut busy = [Rate::Exact(0.0); 3];
    let mut level = [Rate::Exact(0.0); 3];
    for k in 0..3 {
        if !region.contains(k) {
            busy[k] = Rate::Exact(derived.beta[k]);
            continue;
        }
        busy[k] = if single { Rate::Exact(left) } else { Rate::span(0.0, left) };
        let es = derived.mean_service[k];
        level[k] = match busy[k] {
            _ if es == 0.0 => Rate::span(f64::NEG_INFINITY, lambda[k]),
            Rate::Exact(t) => Rate::Exact(lambda[k] - t / es),
            Rate::Interval { lo, hi } => Rate::span(lambda[k] - hi / es, lambda[k] - lo / es),
        };
    }
    let tight = busy.iter().chain(&level).all(|r| r.exact().is_some());
    Ok(RateSolution {
        region,
        busy,
        walking: [Rate::Exact(0.0); 4],
        level,
        total_busy: Rate::Exact(1.0),
        total_walking: Rate::Exact(0.0),
        completions: None,
        tight,
    })
}

/// The empty queues alone need more than the whole server, so some of them
/// start filling at once. The server still never idles, but how it splits its
/// time is open for every queue.
fn overloaded_empties(derived: &DerivedQuantities, state: &FluidState) -> RateSolution {
    let mut busy = [Rate::Exact(0.0); 3];
    let mut level = [Rate::Exact(0.0); 3];
    for k in 0..3 {
        let positive = state.region().contains(k);
        let cap = if positive { 1.0 } else { derived.beta[k].min(1.0) };
        busy[k] = Rate::span(0.0, cap);
        let es = derived.mean_service[k];
        let lambda = derived.lambda[k];
        // An empty queue cannot shrink.
        let floor = if positive { f64::NEG_INFINITY } else { 0.0 };
        level[k] = if es == 0.0 { Rate::span(floor, lambda) } else { Rate::span((lambda - cap / es).max(floor), lambda) };
    }
    RateSolution {
        region: state.region(),
        busy,
        walking: [Rate::Exact(0.0); 4],
        level,
        total_busy: Rate::Exact(1.0),
        total_walking: Rate::Exact(0.0),
        completions: None,
        tight: false,
    }
}
