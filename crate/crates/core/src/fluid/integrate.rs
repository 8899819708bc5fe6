use std::io::Write;

use super::{region_rates, FluidError, FluidState, Rate, Region, RATE_TOLERANCE};
use crate::format::sig6;
use crate::model::{DerivedQuantities, Discipline, Limits};

/// Cap on linear pieces, guarding against chattering between regions.
const MAX_SEGMENTS: usize = 100_000;

/// One linear piece of a fluid trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub q_start: [f64; 3],
    pub slope: [f64; 3],
    pub region: Region,
    pub tight: bool,
}

impl Segment {
    pub fn q_at(&self, t: f64) -> [f64; 3] {
        let dt = t - self.t_start;
        [0, 1, 2].map(|k| (self.q_start[k] + self.slope[k] * dt).max(0.0))
    }

    pub fn q_end(&self) -> [f64; 3] {
        self.q_at(self.t_end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    ReachedEnd,
    /// All fluid gone at `at`; the trajectory stays at zero afterwards.
    Drained {
        at: f64,
    },
    /// Queue 2 emptied with `l_2 > 1`, where the rates are not determined.
    IntervalRegion {
        at: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
    pub termination: Termination,
}

impl Trajectory {
    /// Fluid levels at `t`, or `None` outside the integrated span.
    pub fn q_at(&self, t: f64) -> Option<[f64; 3]> {
        let first = self.segments.first()?;
        if t < first.t_start {
            return None;
        }
        self.segments.iter().find(|s| t <= s.t_end).map(|s| s.q_at(t))
    }

    pub fn end_time(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t_end)
    }

    /// Write `t,Q1,Q2,Q3,region,tight`, one row per breakpoint.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "Q1", "Q2", "Q3", "region", "tight"])?;
        for s in &self.segments {
            row(&mut w, s.t_start, s.q_start, s)?;
        }
        if let Some(last) = self.segments.last() {
            row(&mut w, last.t_end, last.q_end(), last)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn row<W: Write>(w: &mut csv::Writer<W>, t: f64, q: [f64; 3], s: &Segment) -> csv::Result<()> {
    let label: Vec<String> = s.region.members().map(|k| (k + 1).to_string()).collect();
    let label = if label.is_empty() { "none".to_string() } else { label.join("+") };
    w.write_record([sig6(t), sig6(q[0]), sig6(q[1]), sig6(q[2]), label, s.tight.to_string()])
}

/// Choose which empty queues stay empty: the largest set whose rates are
/// consistent and under which every other empty queue actually fills.
fn next_rates(derived: &DerivedQuantities, limits: &Limits, q: [f64; 3]) -> Option<super::RateSolution> {
    let empty: Vec<usize> = (0..3).filter(|&k| q[k] == 0.0).collect();
    let mut subsets: Vec<u8> = (0..1u8 << empty.len()).collect();
    subsets.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
    subsets.into_iter().find_map(|mask| {
        let mut probe = q;
        let filling: Vec<usize> = empty.iter().enumerate().filter(|(i, _)| mask & (1 << i) == 0).map(|(_, &k)| k).collect();
        for &k in &filling {
            probe[k] = 1.0;
        }
        let sol = region_rates(derived, limits, &FluidState { q: probe }).ok()?;
        let fills = filling.iter().all(|&k| sol.level[k].lo() > RATE_TOLERANCE);
        fills.then_some(sol)
    })
}

/// Integrate the limited-service fluid model from `q0` up to `t_end`.
///
/// Rates are piecewise constant, so each piece runs until a queue empties or
/// the horizon is reached, with hitting times solved exactly.
pub fn integrate(derived: &DerivedQuantities, limits: &Limits, q0: [f64; 3], t_end: f64) -> Result<Trajectory, FluidError> {
    if derived.discipline != Discipline::Limited {
        return Err(FluidError::WrongDiscipline { expected: "limited" });
    }
    if derived.any_saturated() {
        return Err(FluidError::NotApplicable("saturated queues have no finite fluid level".into()));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(FluidError::NotApplicable(format!("horizon must be finite and nonnegative, got {t_end}")));
    }
    let mut q = FluidState::new(q0)?.q;
    let mut t = 0.0;
    let mut segments = Vec::new();
    let variable_dispatch = limits.0[1] > 1;

    let termination = loop {
        if t >= t_end {
            break Termination::ReachedEnd;
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(FluidError::NotApplicable(format!("more than {MAX_SEGMENTS} linear pieces before t = {t}")));
        }
        let sol = next_rates(derived, limits, q).ok_or(FluidError::NoConsistentRegion { t, q })?;
        if variable_dispatch && !sol.region.contains(1) {
            break Termination::IntervalRegion { at: t };
        }
        let slope = sol.level.map(|r| match r {
            Rate::Exact(x) => x,
            Rate::Interval { .. } => unreachable!("unit queue-2 limit gives exact rates"),
        });
        let slope = [0, 1, 2].map(|k| if sol.region.contains(k) { slope[k] } else { 0.0 });

        if q.iter().all(|&x| x == 0.0) && sol.region.members().next().is_none() {
            segments.push(Segment { t_start: t, t_end, q_start: q, slope: [0.0; 3], region: sol.region, tight: sol.tight });
            break Termination::Drained { at: t };
        }

        let mut dt = t_end - t;
        for k in 0..3 {
            if q[k] > 0.0 && slope[k] < -RATE_TOLERANCE {
                dt = dt.min(q[k] / -slope[k]);
            }
        }
        let t_next = if dt == t_end - t { t_end } else { t + dt };
        segments.push(Segment { t_start: t, t_end: t_next, q_start: q, slope, region: sol.region, tight: sol.tight });
        for k in 0..3 {
            let hits = q[k] > 0.0 && slope[k] < -RATE_TOLERANCE && q[k] / -slope[k] <= dt;
            q[k] = if hits { 0.0 } else { (q[k] + slope[k] * dt).max(0.0) };
        }
        t = t_next;
    };
    Ok(Trajectory { segments, termination })
}
