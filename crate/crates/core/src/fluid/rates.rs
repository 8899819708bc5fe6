use nalgebra::{SMatrix, SVector};

use super::{Completions, FluidError, FluidState, Rate, RateSolution, Region, RATE_TOLERANCE, SINGULARITY_THRESHOLD};
use crate::model::{DerivedQuantities, Discipline, Limits};

type System = SMatrix<f64, 7, 7>;
type Vector = SVector<f64, 7>;

/// Completion rates: `d[k]` services at queue k, `e[j]` walks on leg j.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(super) struct Flows {
    pub d: [f64; 3],
    pub e: [f64; 4],
}

impl Flows {
    fn from_vector(x: &Vector) -> Self {
        Self { d: [x[0], x[1], x[2]], e: [x[3], x[4], x[5], x[6]] }
    }

    fn lerp(a: &Self, b: &Self, w: f64) -> Self {
        let mix = |p: f64, q: f64| p + (q - p) * w;
        Self { d: [0, 1, 2].map(|k| mix(a.d[k], b.d[k])), e: [0, 1, 2, 3].map(|j| mix(a.e[j], b.e[j])) }
    }

    /// Standard cycles that dispatch the server to queue 2.
    fn dispatch(&self) -> f64 {
        self.e[0] - self.e[3]
    }
}

/// Queues that count as nonempty: positive fluid or saturated.
pub(super) fn effective_region(derived: &DerivedQuantities, state: &FluidState) -> Region {
    Region { positive: [0, 1, 2].map(|k| state.q[k] > 0.0 || derived.saturated[k]) }
}

/// Solve the rate equations with the queue-2 dispatch rate fixed at `x`
/// whenever queue 2 is empty.
fn solve(derived: &DerivedQuantities, limits: &Limits, region: Region, x: f64) -> Option<Flows> {
    let mut a = System::zeros();
    let mut b = Vector::zeros();
    // Columns 0..3 are d_k, 3..7 are e_j.
    for k in 0..3 {
        a[(0, k)] = derived.mean_service[k];
    }
    for j in 0..4 {
        a[(0, 3 + j)] = derived.mean_switchover[j];
    }
    b[0] = 1.0;
    // Walks 1→2 and 2→3 happen once per standard cycle.
    a[(1, 3)] = 1.0;
    a[(1, 4)] = -1.0;
    // Every cycle ends with a walk 3→1; it starts with 1→2 or 1→3.
    a[(2, 5)] = 1.0;
    a[(2, 3)] = -1.0;
    a[(2, 6)] = -1.0;
    // Visits to each queue: 1 once per cycle, 2 on walk 1→2, 3 on walk 2→3 or 1→3.
    let visits: [&[usize]; 3] = [&[3, 6], &[4], &[5]];
    for k in 0..3 {
        let row = 3 + k;
        if region.contains(k) {
            for &c in visits[k] {
                a[(row, c)] = 1.0;
            }
            a[(row, k)] = -1.0 / limits.get(k);
        } else {
            a[(row, k)] = 1.0;
            b[row] = derived.lambda[k];
        }
    }
    if region.contains(1) {
        a[(6, 6)] = 1.0;
    } else {
        a[(6, 3)] = 1.0;
        a[(6, 6)] = -1.0;
        b[6] = x;
    }
    let lu = a.lu();
    let pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if pivot < SINGULARITY_THRESHOLD {
        return None;
    }
    lu.solve(&b).map(|v| Flows::from_vector(&v))
}

/// Named inequality slacks that must be nonnegative for a consistent solution.
fn flow_slacks(limits: &Limits, region: Region, f: &Flows) -> Vec<(&'static str, f64)> {
    let mut out = vec![
        ("queue1_visits", f.e[0] + f.e[3] - f.d[0] / limits.get(0)),
        ("queue2_visits", f.e[1] - f.d[1] / limits.get(1)),
        ("queue3_visits", f.e[2] - f.d[2] / limits.get(2)),
    ];
    if !region.contains(1) {
        out.push(("queue2_dispatch_low", f.dispatch() - f.d[1] / limits.get(1)));
        out.push(("queue2_dispatch_high", f.d[1] - f.dispatch()));
    }
    const NAMES: [&str; 7] =
        ["service_rate_1", "service_rate_2", "service_rate_3", "walk_rate_12", "walk_rate_23", "walk_rate_31", "walk_rate_13"];
    for k in 0..3 {
        out.push((NAMES[k], f.d[k]));
    }
    for j in 0..4 {
        out.push((NAMES[3 + j], f.e[j]));
    }
    out
}

fn worst_slack(limits: &Limits, region: Region, f: &Flows) -> Option<(&'static str, f64)> {
    flow_slacks(limits, region, f).into_iter().filter(|&(_, s)| s < -RATE_TOLERANCE).min_by(|a, b| a.1.total_cmp(&b.1))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= RATE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

fn combine(a: f64, b: f64) -> Rate {
    if close(a, b) {
        Rate::Exact(a)
    } else {
        Rate::span(a, b)
    }
}

fn assemble(derived: &DerivedQuantities, region: Region, lo: &Flows, hi: &Flows) -> RateSolution {
    let service = [0, 1, 2].map(|k| combine(lo.d[k], hi.d[k]));
    let walk = [0, 1, 2, 3].map(|j| combine(lo.e[j], hi.e[j]));
    let busy_at = |f: &Flows| [0, 1, 2].map(|k| derived.mean_service[k] * f.d[k]);
    let walking_at = |f: &Flows| [0, 1, 2, 3].map(|j| derived.mean_switchover[j] * f.e[j]);
    let (bl, bh) = (busy_at(lo), busy_at(hi));
    let (wl, wh) = (walking_at(lo), walking_at(hi));
    let busy = [0, 1, 2].map(|k| combine(bl[k], bh[k]));
    let walking = [0, 1, 2, 3].map(|j| combine(wl[j], wh[j]));
    let level = [0, 1, 2].map(|k| combine(derived.lambda[k] - lo.d[k], derived.lambda[k] - hi.d[k]));
    let total_busy = combine(bl.iter().sum(), bh.iter().sum());
    let total_walking = combine(wl.iter().sum(), wh.iter().sum());
    let tight = busy.iter().chain(&walking).chain(&level).all(|r| r.exact().is_some());
    RateSolution {
        region,
        busy,
        walking,
        level,
        total_busy,
        total_walking,
        completions: Some(Completions { service, walk }),
        tight,
    }
}

/// Fluid rates for limited service in the region of `state`.
///
/// Saturated queues are treated as permanently nonempty. Rates are exact when
/// queue 2 is nonempty or `l_2 = 1`; otherwise the queue-2 dispatch rate is only
/// known to lie between `lambda_2 / l_2` and `lambda_2`, and the returned
/// intervals are the rates over that range.
pub fn region_rates(derived: &DerivedQuantities, limits: &Limits, state: &FluidState) -> Result<RateSolution, FluidError> {
    if derived.discipline != Discipline::Limited {
        return Err(FluidError::WrongDiscipline { expected: "limited" });
    }
    let region = effective_region(derived, state);
    let infeasible = |reason: String| FluidError::InfeasibleRegion { region, reason };
    let singular = || infeasible("rate equations are singular".into());

    let lambda2 = derived.lambda[1];
    let (x_lo, x_hi) = (lambda2 / limits.get(1), lambda2);
    if region.contains(1) || close(x_lo, x_hi) {
        let f = solve(derived, limits, region, x_hi).ok_or_else(singular)?;
        if let Some((name, s)) = worst_slack(limits, region, &f) {
            return Err(infeasible(format!("{name} violated by {s:e}")));
        }
        return Ok(assemble(derived, region, &f, &f));
    }

    // Every rate is affine in the dispatch rate, so the feasible dispatch rates
    // form an interval found by clipping each slack at the two endpoints.
    let fa = solve(derived, limits, region, x_lo).ok_or_else(singular)?;
    let fb = solve(derived, limits, region, x_hi).ok_or_else(singular)?;
    let sa = flow_slacks(limits, region, &fa);
    let sb = flow_slacks(limits, region, &fb);
    let (mut w_lo, mut w_hi) = (0.0_f64, 1.0_f64);
    for ((name, ga), (_, gb)) in sa.iter().zip(&sb) {
        let (ga, gb) = (ga + RATE_TOLERANCE, gb + RATE_TOLERANCE);
        match (ga >= 0.0, gb >= 0.0) {
            (true, true) => {}
            (false, false) => return Err(infeasible(format!("{name} violated across the dispatch range"))),
            (true, false) => w_hi = w_hi.min(ga / (ga - gb)),
            (false, true) => w_lo = w_lo.max(ga / (ga - gb)),
        }
    }
    if w_lo > w_hi {
        return Err(infeasible("no dispatch rate satisfies every constraint".into()));
    }
    let lo = Flows::lerp(&fa, &fb, w_lo);
    let hi = Flows::lerp(&fa, &fb, w_hi);
    Ok(assemble(derived, region, &lo, &hi))
}

/// Work or walk flow: `mu * T'` or `nu * U'`, falling back to the completion
/// rate when the mean is zero.
fn flow(mean: f64, time_rate: f64, completion: Option<Rate>) -> f64 {
    if mean > 0.0 {
        time_rate / mean
    } else {
        completion.and_then(|r| r.exact()).unwrap_or(0.0)
    }
}

struct ExactFlows {
    service: [f64; 3],
    walk: [f64; 4],
    busy: [f64; 3],
    walking: [f64; 4],
    level: [f64; 3],
}

fn exact_flows(derived: &DerivedQuantities, sol: &RateSolution) -> Option<ExactFlows> {
    if !sol.tight {
        return None;
    }
    let busy = sol.busy.map(|r| r.exact().unwrap_or(f64::NAN));
    let walking = sol.walking.map(|r| r.exact().unwrap_or(f64::NAN));
    let level = sol.level.map(|r| r.exact().unwrap_or(f64::NAN));
    let comp = sol.completions;
    let service = [0, 1, 2].map(|k| flow(derived.mean_service[k], busy[k], comp.map(|c| c.service[k])));
    let walk = [0, 1, 2, 3].map(|j| flow(derived.mean_switchover[j], walking[j], comp.map(|c| c.walk[j])));
    Some(ExactFlows { service, walk, busy, walking, level })
}

/// Residuals of the equalities an exact limited-service solution must satisfy
/// in its region. Returns `None` for interval solutions.
pub fn constraint_residuals(
    derived: &DerivedQuantities,
    limits: &Limits,
    sol: &RateSolution,
) -> Option<Vec<(&'static str, f64)>> {
    let f = exact_flows(derived, sol)?;
    let region = sol.region;
    let mut out = vec![
        ("time_conservation", f.busy.iter().sum::<f64>() + f.walking.iter().sum::<f64>() - 1.0),
        ("standard_cycle_walks", f.walk[0] - f.walk[1]),
        ("cycle_closing_walks", f.walk[2] - f.walk[0] - f.walk[3]),
    ];
    const LEVEL: [&str; 3] = ["level_1", "level_2", "level_3"];
    const EMPTY: [&str; 3] = ["empty_1", "empty_2", "empty_3"];
    const FULL: [&str; 3] = ["full_visits_1", "full_visits_2", "full_visits_3"];
    let visits = [f.walk[0] + f.walk[3], f.walk[1], f.walk[2]];
    for k in 0..3 {
        out.push((LEVEL[k], f.level[k] - (derived.lambda[k] - f.service[k])));
        if region.contains(k) {
            out.push((FULL[k], visits[k] - f.service[k] / limits.get(k)));
        } else {
            out.push((EMPTY[k], f.level[k]));
        }
    }
    if region.contains(1) {
        out.push(("no_reduced_cycles", f.walking[3]));
    } else if limits.0[1] == 1 {
        out.push(("queue2_dispatch", f.walk[0] - f.walk[3] - f.service[1]));
    }
    Some(out)
}

/// Slacks of the inequalities every solution must satisfy (each must be
/// nonnegative). Returns `None` for interval solutions.
pub fn inequality_slacks(derived: &DerivedQuantities, limits: &Limits, sol: &RateSolution) -> Option<Vec<(&'static str, f64)>> {
    let f = exact_flows(derived, sol)?;
    let dispatch = f.walk[0] - f.walk[3];
    let mut out = vec![
        ("queue1_visits", f.walk[0] + f.walk[3] - f.service[0] / limits.get(0)),
        ("queue2_visits", f.walk[1] - f.service[1] / limits.get(1)),
        ("queue3_visits", f.walk[2] - f.service[2] / limits.get(2)),
        ("queue2_dispatch_low", dispatch - f.service[1] / limits.get(1)),
        ("queue2_dispatch_high", f.service[1] - dispatch),
    ];
    const BUSY: [&str; 3] = ["busy_1", "busy_2", "busy_3"];
    const WALK: [&str; 4] = ["walking_12", "walking_23", "walking_31", "walking_13"];
    for k in 0..3 {
        out.push((BUSY[k], f.busy[k]));
    }
    for j in 0..4 {
        out.push((WALK[j], f.walking[j]));
    }
    Some(out)
}
